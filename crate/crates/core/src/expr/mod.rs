//! Symbolic expressions over coordinate and parameter symbols.
//!
//! Trees are immutable and reference counted, so subtrees produced by
//! differentiation or substitution are shared rather than copied. There is no
//! canonical form: two expressions are compared by evaluating their difference
//! at sampled points (see [`identity`]).

mod diff;
mod eval;
pub mod identity;
mod matrix;
mod parse;
mod render;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub use eval::{Assignment, EvalError, Tape, Value, DEFAULT_DEN_GUARD};
pub use identity::{
    check_identities, equiv_zero, equiv_zero_all, EquivConfig, EquivError, EquivOutcome, IdentityReport,
    Sampler,
};
pub use matrix::{ExprMatrix, MatrixError};
pub use parse::{parse_expr, ParseError, ParseErrorKind, SymbolTable};

/// Exact rational number used for constants and exact evaluation.
pub type Rational = num_rational::BigRational;

/// Builds a rational `p/q`. Panics if `q == 0`.
pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Builds an integer-valued rational.
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    Coordinate,
    Parameter,
}

/// A named coordinate or parameter. Equality covers both name and kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    name: Arc<str>,
    kind: SymbolKind,
}

impl Symbol {
    pub fn new(name: &str, kind: SymbolKind) -> Self {
        Self {
            name: Arc::from(name),
            kind,
        }
    }

    pub fn coordinate(name: &str) -> Self {
        Self::new(name, SymbolKind::Coordinate)
    }

    pub fn parameter(name: &str) -> Self {
        Self::new(name, SymbolKind::Parameter)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> SymbolKind {
        self.kind
    }

    pub fn is_parameter(&self) -> bool {
        self.kind == SymbolKind::Parameter
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// One node of an expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Rational),
    Sym(Symbol),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
    Quotient(Expr, Expr),
    /// Integer power; negative exponents divide and are guarded at evaluation.
    Pow(Expr, i32),
    Exp(Expr),
    Neg(Expr),
}

/// Shared handle to an immutable expression tree.
#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(&*self.0, f)
    }
}

impl Expr {
    /// Wraps a node without any rewriting. The parser uses this so that parse
    /// trees mirror the input text exactly.
    pub fn from_node(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub(crate) fn ptr_id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn constant(value: Rational) -> Self {
        Self::from_node(Node::Const(value))
    }

    pub fn integer(n: i64) -> Self {
        Self::constant(int(n))
    }

    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn one() -> Self {
        Self::integer(1)
    }

    pub fn symbol(s: &Symbol) -> Self {
        Self::from_node(Node::Sym(s.clone()))
    }

    pub fn as_const(&self) -> Option<&Rational> {
        match self.node() {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(Zero::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.as_const().is_some_and(One::is_one)
    }

    // ---- algebraic builders -------------------------------------------------
    //
    // These fold constants and drop additive/multiplicative identities. They do
    // not reorder or collect like terms.

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Self {
        let mut constant = Rational::zero();
        let mut rest = Vec::new();
        for t in terms {
            match t.node() {
                Node::Const(c) => constant += c,
                Node::Sum(inner) => {
                    for u in inner {
                        match u.node() {
                            Node::Const(c) => constant += c,
                            _ => rest.push(u.clone()),
                        }
                    }
                }
                _ => rest.push(t),
            }
        }
        if !constant.is_zero() {
            rest.push(Expr::constant(constant));
        }
        match rest.len() {
            0 => Expr::zero(),
            1 => rest.pop().unwrap(),
            _ => Self::from_node(Node::Sum(rest)),
        }
    }

    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Self {
        let mut constant = Rational::one();
        let mut rest = Vec::new();
        for f in factors {
            match f.node() {
                Node::Const(c) => {
                    if c.is_zero() {
                        return Expr::zero();
                    }
                    constant *= c;
                }
                Node::Product(inner) => {
                    for u in inner {
                        match u.node() {
                            Node::Const(c) => {
                                if c.is_zero() {
                                    return Expr::zero();
                                }
                                constant *= c;
                            }
                            _ => rest.push(u.clone()),
                        }
                    }
                }
                _ => rest.push(f),
            }
        }
        if rest.is_empty() {
            return Expr::constant(constant);
        }
        if constant == -Rational::one() {
            let inner = if rest.len() == 1 {
                rest.pop().unwrap()
            } else {
                Self::from_node(Node::Product(rest))
            };
            return inner.neg();
        }
        if !constant.is_one() {
            rest.insert(0, Expr::constant(constant));
        }
        if rest.len() == 1 {
            rest.pop().unwrap()
        } else {
            Self::from_node(Node::Product(rest))
        }
    }

    pub fn add(&self, other: &Expr) -> Self {
        Self::sum([self.clone(), other.clone()])
    }

    pub fn sub(&self, other: &Expr) -> Self {
        Self::sum([self.clone(), other.neg()])
    }

    pub fn mul(&self, other: &Expr) -> Self {
        Self::product([self.clone(), other.clone()])
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::product([Expr::constant(c.clone()), self.clone()])
    }

    pub fn div(&self, other: &Expr) -> Self {
        if let Some(d) = other.as_const() {
            if d.is_one() {
                return self.clone();
            }
            if !d.is_zero() {
                if let Some(n) = self.as_const() {
                    return Expr::constant(n / d);
                }
            }
        }
        if self.is_zero() {
            return Expr::zero();
        }
        Self::from_node(Node::Quotient(self.clone(), other.clone()))
    }

    pub fn neg(&self) -> Self {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Self::from_node(Node::Neg(self.clone())),
        }
    }

    pub fn powi(&self, n: i32) -> Self {
        match n {
            0 => Expr::one(),
            1 => self.clone(),
            _ => match self.as_const() {
                Some(c) if !(c.is_zero() && n < 0) => Expr::constant(rational_powi(c, n)),
                _ => Self::from_node(Node::Pow(self.clone(), n)),
            },
        }
    }

    pub fn exp(&self) -> Self {
        if self.is_zero() {
            return Expr::one();
        }
        Self::from_node(Node::Exp(self.clone()))
    }

    // ---- structural queries -------------------------------------------------

    /// Free symbols in sorted order.
    pub fn free_symbols(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        let mut seen = std::collections::HashSet::new();
        self.collect_symbols(&mut out, &mut seen);
        out
    }

    fn collect_symbols(
        &self,
        out: &mut BTreeSet<Symbol>,
        seen: &mut std::collections::HashSet<usize>,
    ) {
        if !seen.insert(self.ptr_id()) {
            return;
        }
        match self.node() {
            Node::Const(_) => {}
            Node::Sym(s) => {
                out.insert(s.clone());
            }
            Node::Sum(xs) | Node::Product(xs) => {
                for x in xs {
                    x.collect_symbols(out, seen);
                }
            }
            Node::Quotient(a, b) => {
                a.collect_symbols(out, seen);
                b.collect_symbols(out, seen);
            }
            Node::Pow(a, _) | Node::Exp(a) | Node::Neg(a) => a.collect_symbols(out, seen),
        }
    }

    /// True when the expression contains no `exp` node.
    pub fn is_exp_free(&self) -> bool {
        match self.node() {
            Node::Const(_) | Node::Sym(_) => true,
            Node::Sum(xs) | Node::Product(xs) => xs.iter().all(Expr::is_exp_free),
            Node::Quotient(a, b) => a.is_exp_free() && b.is_exp_free(),
            Node::Pow(a, _) | Node::Neg(a) => a.is_exp_free(),
            Node::Exp(_) => false,
        }
    }

    /// Number of distinct nodes (shared subtrees counted once).
    pub fn node_count(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        fn walk(e: &Expr, seen: &mut std::collections::HashSet<usize>) {
            if !seen.insert(e.ptr_id()) {
                return;
            }
            match e.node() {
                Node::Const(_) | Node::Sym(_) => {}
                Node::Sum(xs) | Node::Product(xs) => xs.iter().for_each(|x| walk(x, seen)),
                Node::Quotient(a, b) => {
                    walk(a, seen);
                    walk(b, seen);
                }
                Node::Pow(a, _) | Node::Exp(a) | Node::Neg(a) => walk(a, seen),
            }
        }
        walk(self, &mut seen);
        seen.len()
    }

    /// Replaces symbols by expressions. The tree shape is otherwise preserved.
    pub fn substitute(&self, map: &HashMap<Symbol, Expr>) -> Expr {
        let mut memo = HashMap::new();
        self.substitute_memo(map, &mut memo)
    }

    fn substitute_memo(&self, map: &HashMap<Symbol, Expr>, memo: &mut HashMap<usize, Expr>) -> Expr {
        if let Some(hit) = memo.get(&self.ptr_id()) {
            return hit.clone();
        }
        let out = match self.node() {
            Node::Const(_) => self.clone(),
            Node::Sym(s) => map.get(s).cloned().unwrap_or_else(|| self.clone()),
            Node::Sum(xs) => Expr::from_node(Node::Sum(
                xs.iter().map(|x| x.substitute_memo(map, memo)).collect(),
            )),
            Node::Product(xs) => Expr::from_node(Node::Product(
                xs.iter().map(|x| x.substitute_memo(map, memo)).collect(),
            )),
            Node::Quotient(a, b) => Expr::from_node(Node::Quotient(
                a.substitute_memo(map, memo),
                b.substitute_memo(map, memo),
            )),
            Node::Pow(a, n) => Expr::from_node(Node::Pow(a.substitute_memo(map, memo), *n)),
            Node::Exp(a) => Expr::from_node(Node::Exp(a.substitute_memo(map, memo))),
            Node::Neg(a) => Expr::from_node(Node::Neg(a.substitute_memo(map, memo))),
        };
        memo.insert(self.ptr_id(), out.clone());
        out
    }

    /// Substitutes the given parameter values as exact constants.
    pub fn with_parameters(&self, params: &Assignment) -> Expr {
        let map: HashMap<Symbol, Expr> = self
            .free_symbols()
            .into_iter()
            .filter(|s| s.is_parameter())
            .filter_map(|s| {
                params
                    .exact(&s)
                    .map(|v| (s.clone(), Expr::constant(v.clone())))
            })
            .collect();
        if map.is_empty() {
            self.clone()
        } else {
            self.substitute(&map)
        }
    }
}

pub(crate) fn rational_powi(c: &Rational, n: i32) -> Rational {
    let base = if n < 0 { c.recip() } else { c.clone() };
    num_traits::pow(base, n.unsigned_abs() as usize)
}

/// Absolute value helper for rationals, used by the residual reports.
pub fn rat_abs(r: &Rational) -> Rational {
    r.abs()
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::integer(n)
    }
}

impl From<Rational> for Expr {
    fn from(r: Rational) -> Self {
        Expr::constant(r)
    }
}

impl From<&Symbol> for Expr {
    fn from(s: &Symbol) -> Self {
        Expr::symbol(s)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $call:ident) => {
        impl std::ops::$tr<&Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                Expr::$call(self, rhs)
            }
        }
        impl std::ops::$tr<Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                Expr::$call(&self, &rhs)
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}
