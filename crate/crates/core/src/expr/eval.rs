use std::collections::HashMap;

use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use super::{rational_powi, Expr, Node, Rational, Symbol};

/// Denominators whose magnitude falls below this are treated as singular.
pub const DEFAULT_DEN_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(Rational),
    Float(f64),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Value::Float(x) => *x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("symbol `{0}` is not bound")]
    Unbound(String),
    #[error("near-singular denominator ({magnitude:e})")]
    Singular { magnitude: f64 },
    #[error("non-finite intermediate value")]
    NonFinite,
    #[error("exp of a nonzero argument has no exact rational value")]
    Transcendental,
}

/// Values for symbols; exact rationals or floats.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    values: HashMap<Symbol, Value>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_exact(&mut self, s: &Symbol, v: Rational) -> &mut Self {
        self.values.insert(s.clone(), Value::Exact(v));
        self
    }

    pub fn set_float(&mut self, s: &Symbol, v: f64) -> &mut Self {
        self.values.insert(s.clone(), Value::Float(v));
        self
    }

    pub fn with_exact(mut self, s: &Symbol, v: Rational) -> Self {
        self.set_exact(s, v);
        self
    }

    pub fn with_float(mut self, s: &Symbol, v: f64) -> Self {
        self.set_float(s, v);
        self
    }

    pub fn get(&self, s: &Symbol) -> Option<&Value> {
        self.values.get(s)
    }

    pub fn exact(&self, s: &Symbol) -> Option<&Rational> {
        match self.values.get(s) {
            Some(Value::Exact(r)) => Some(r),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Value)> {
        self.values.iter()
    }

    pub fn is_all_exact(&self) -> bool {
        self.values.values().all(|v| matches!(v, Value::Exact(_)))
    }
}

impl Expr {
    /// Evaluates the expression. Exp-free expressions under an all-rational
    /// assignment evaluate exactly; anything else is computed in `f64`.
    pub fn eval(&self, a: &Assignment) -> Result<Value, EvalError> {
        self.eval_guarded(a, DEFAULT_DEN_GUARD)
    }

    pub fn eval_guarded(&self, a: &Assignment, den_guard: f64) -> Result<Value, EvalError> {
        if self.is_exp_free() && a.is_all_exact() {
            return self.eval_exact(a).map(Value::Exact);
        }
        let syms: Vec<Symbol> = self.free_symbols().into_iter().collect();
        let tape = Tape::compile(std::slice::from_ref(self), &syms)?;
        let inputs: Vec<f64> = syms
            .iter()
            .map(|s| a.get(s).map(Value::to_f64).ok_or_else(|| EvalError::Unbound(s.name().to_string())))
            .collect::<Result<_, _>>()?;
        let out = tape.eval(&inputs, den_guard);
        out.into_iter().next().unwrap().map(|(v, _)| Value::Float(v))
    }

    /// Exact rational evaluation. `exp` is admitted only at argument zero.
    pub fn eval_exact(&self, a: &Assignment) -> Result<Rational, EvalError> {
        let mut memo = HashMap::new();
        eval_exact_memo(self, a, &mut memo)
    }
}

fn eval_exact_memo(
    e: &Expr,
    a: &Assignment,
    memo: &mut HashMap<usize, Rational>,
) -> Result<Rational, EvalError> {
    if let Some(v) = memo.get(&e.ptr_id()) {
        return Ok(v.clone());
    }
    let v = match e.node() {
        Node::Const(c) => c.clone(),
        Node::Sym(s) => match a.get(s) {
            Some(Value::Exact(r)) => r.clone(),
            Some(Value::Float(_)) => return Err(EvalError::Transcendental),
            None => return Err(EvalError::Unbound(s.name().to_string())),
        },
        Node::Sum(xs) => {
            let mut acc = Rational::zero();
            for x in xs {
                acc += eval_exact_memo(x, a, memo)?;
            }
            acc
        }
        Node::Product(xs) => {
            let mut acc = Rational::from_integer(1.into());
            for x in xs {
                acc *= eval_exact_memo(x, a, memo)?;
            }
            acc
        }
        Node::Quotient(n, d) => {
            let dv = eval_exact_memo(d, a, memo)?;
            if dv.is_zero() {
                return Err(EvalError::Singular { magnitude: 0.0 });
            }
            eval_exact_memo(n, a, memo)? / dv
        }
        Node::Pow(b, n) => {
            let bv = eval_exact_memo(b, a, memo)?;
            if bv.is_zero() && *n < 0 {
                return Err(EvalError::Singular { magnitude: 0.0 });
            }
            rational_powi(&bv, *n)
        }
        Node::Exp(x) => {
            if eval_exact_memo(x, a, memo)?.is_zero() {
                Rational::from_integer(1.into())
            } else {
                return Err(EvalError::Transcendental);
            }
        }
        Node::Neg(x) => -eval_exact_memo(x, a, memo)?,
    };
    memo.insert(e.ptr_id(), v.clone());
    Ok(v)
}

#[derive(Debug, Clone)]
enum Op {
    Const(f64),
    Input(usize),
    Sum(Vec<usize>),
    Product(Vec<usize>),
    Div(usize, usize),
    Pow(usize, i32),
    Exp(usize),
    Neg(usize),
}

/// A set of expressions flattened into one instruction list for repeated
/// floating-point evaluation. Shared subtrees are evaluated once.
#[derive(Debug, Clone)]
pub struct Tape {
    ops: Vec<Op>,
    outputs: Vec<usize>,
    n_inputs: usize,
}

impl Tape {
    /// Compiles `exprs` with `inputs` as the ordered list of free symbols.
    pub fn compile(exprs: &[Expr], inputs: &[Symbol]) -> Result<Self, EvalError> {
        let index: HashMap<&Symbol, usize> = inputs.iter().enumerate().map(|(i, s)| (s, i)).collect();
        let mut tape = Tape {
            ops: Vec::new(),
            outputs: Vec::with_capacity(exprs.len()),
            n_inputs: inputs.len(),
        };
        let mut slots: HashMap<usize, usize> = HashMap::new();
        for e in exprs {
            let s = tape.emit(e, &index, &mut slots)?;
            tape.outputs.push(s);
        }
        Ok(tape)
    }

    fn emit(
        &mut self,
        e: &Expr,
        index: &HashMap<&Symbol, usize>,
        slots: &mut HashMap<usize, usize>,
    ) -> Result<usize, EvalError> {
        if let Some(&s) = slots.get(&e.ptr_id()) {
            return Ok(s);
        }
        let op = match e.node() {
            Node::Const(c) => Op::Const(c.to_f64().unwrap_or(f64::NAN)),
            Node::Sym(s) => Op::Input(
                *index
                    .get(s)
                    .ok_or_else(|| EvalError::Unbound(s.name().to_string()))?,
            ),
            Node::Sum(xs) => Op::Sum(
                xs.iter()
                    .map(|x| self.emit(x, index, slots))
                    .collect::<Result<_, _>>()?,
            ),
            Node::Product(xs) => Op::Product(
                xs.iter()
                    .map(|x| self.emit(x, index, slots))
                    .collect::<Result<_, _>>()?,
            ),
            Node::Quotient(n, d) => {
                let n = self.emit(n, index, slots)?;
                let d = self.emit(d, index, slots)?;
                Op::Div(n, d)
            }
            Node::Pow(b, k) => Op::Pow(self.emit(b, index, slots)?, *k),
            Node::Exp(x) => Op::Exp(self.emit(x, index, slots)?),
            Node::Neg(x) => Op::Neg(self.emit(x, index, slots)?),
        };
        self.ops.push(op);
        let s = self.ops.len() - 1;
        slots.insert(e.ptr_id(), s);
        Ok(s)
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    /// Evaluates every output. Each result carries the value and the largest
    /// intermediate magnitude met while computing it; singular or
    /// non-finite outputs are reported individually.
    pub fn eval(&self, inputs: &[f64], den_guard: f64) -> Vec<Result<(f64, f64), EvalError>> {
        assert_eq!(inputs.len(), self.n_inputs, "input arity mismatch");
        let n = self.ops.len();
        let mut val = vec![0.0f64; n];
        let mut scale = vec![0.0f64; n];
        let mut bad: Vec<Option<EvalError>> = vec![None; n];
        for (i, op) in self.ops.iter().enumerate() {
            let mut err: Option<EvalError> = None;
            let mut sc = 0.0f64;
            let take = |j: usize, sc: &mut f64, err: &mut Option<EvalError>| {
                if err.is_none() {
                    if let Some(e) = &bad[j] {
                        *err = Some(e.clone());
                    }
                }
                *sc = sc.max(scale[j]);
                val[j]
            };
            let v = match op {
                Op::Const(c) => *c,
                Op::Input(k) => inputs[*k],
                Op::Sum(xs) => xs.iter().map(|&j| take(j, &mut sc, &mut err)).sum(),
                Op::Product(xs) => xs.iter().map(|&j| take(j, &mut sc, &mut err)).product(),
                Op::Div(a, b) => {
                    let num = take(*a, &mut sc, &mut err);
                    let den = take(*b, &mut sc, &mut err);
                    if den.abs() < den_guard && err.is_none() {
                        err = Some(EvalError::Singular { magnitude: den.abs() });
                    }
                    num / den
                }
                Op::Pow(b, k) => {
                    let base = take(*b, &mut sc, &mut err);
                    if *k < 0 && base.abs() < den_guard && err.is_none() {
                        err = Some(EvalError::Singular { magnitude: base.abs() });
                    }
                    base.powi(*k)
                }
                Op::Exp(x) => take(*x, &mut sc, &mut err).exp(),
                Op::Neg(x) => -take(*x, &mut sc, &mut err),
            };
            if err.is_none() && !v.is_finite() {
                err = Some(EvalError::NonFinite);
            }
            val[i] = v;
            scale[i] = sc.max(v.abs());
            bad[i] = err;
        }
        self.outputs
            .iter()
            .map(|&o| match &bad[o] {
                Some(e) => Err(e.clone()),
                None => Ok((val[o], scale[o])),
            })
            .collect()
    }

    /// Convenience wrapper returning plain values, failing on the first
    /// singular output.
    pub fn eval_values(&self, inputs: &[f64], den_guard: f64) -> Result<Vec<f64>, EvalError> {
        self.eval(inputs, den_guard)
            .into_iter()
            .map(|r| r.map(|(v, _)| v))
            .collect()
    }
}
