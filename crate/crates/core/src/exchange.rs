//! Role exchange between phase space and symmetry group: coordinate maps,
//! Poisson pushforward checks, transformed dynamical functions, the Q
//! relation across the exchange, and classification of chart-to-chart maps.

use std::collections::HashMap;

use thiserror::Error;

use crate::exact::{LinalgError, RatMatrix};
use crate::expr::identity::{check_identities, IdentityReport, UnboundSymbol};
use crate::expr::{
    Assignment, EquivConfig, EquivError, EvalError, Expr, ExprMatrix, MatrixError, Rational, Sampler, Symbol,
};
use crate::liealg::{LieError, MatrixRep, StructureConstants};
use crate::symplectic::PoissonField;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExchangeError {
    #[error("dimension mismatch: {what} has {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("coordinate mismatch: {0}")]
    Coordinates(String),
    #[error("isomorphism matrix is singular for parameters {0}")]
    SingularC(String),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Lie(#[from] LieError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl From<UnboundSymbol> for ExchangeError {
    fn from(u: UnboundSymbol) -> Self {
        Self::Equiv(EquivError::Unbound(u))
    }
}

/// `target^i = exprs[i](source)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateMap {
    pub source: Vec<Symbol>,
    pub target: Vec<Symbol>,
    pub exprs: Vec<Expr>,
}

impl CoordinateMap {
    pub fn new(source: Vec<Symbol>, target: Vec<Symbol>, exprs: Vec<Expr>) -> Result<Self, ExchangeError> {
        if exprs.len() != target.len() {
            return Err(ExchangeError::Dimension {
                what: "map expressions",
                got: exprs.len(),
                expected: target.len(),
            });
        }
        let stray: Vec<String> = exprs
            .iter()
            .flat_map(|e| e.free_symbols())
            .filter(|s| !s.is_parameter() && !source.contains(s))
            .map(|s| s.name().to_string())
            .collect();
        if let Some(s) = stray.first() {
            return Err(ExchangeError::Coordinates(format!("map uses `{s}`, which is not a source coordinate")));
        }
        Ok(Self { source, target, exprs })
    }

    /// The map sending each coordinate to the same-position symbol.
    pub fn identity(source: Vec<Symbol>, target: Vec<Symbol>) -> Result<Self, ExchangeError> {
        let exprs = source.iter().map(Expr::symbol).collect();
        Self::new(source, target, exprs)
    }

    fn substitution(&self) -> HashMap<Symbol, Expr> {
        self.target.iter().cloned().zip(self.exprs.iter().cloned()).collect()
    }

    /// `f ∘ map`: rewrites a function of the target coordinates in terms of
    /// the source coordinates.
    pub fn pull_back(&self, f: &Expr) -> Expr {
        f.substitute(&self.substitution())
    }

    pub fn pull_back_all(&self, fs: &[Expr]) -> Vec<Expr> {
        let sub = self.substitution();
        fs.iter().map(|f| f.substitute(&sub)).collect()
    }

    /// `self ∘ inner`, a map from `inner.source` to `self.target`.
    pub fn compose(&self, inner: &CoordinateMap) -> Result<Self, ExchangeError> {
        if inner.target != self.source {
            return Err(ExchangeError::Coordinates("inner map does not land in this map's source".into()));
        }
        Self::new(inner.source.clone(), self.target.clone(), inner.pull_back_all(&self.exprs))
    }

    /// `∂target^i/∂source^j`.
    pub fn jacobian(&self) -> ExprMatrix {
        let grads: Vec<Vec<Expr>> = self.exprs.iter().map(|e| e.gradient(&self.source)).collect();
        ExprMatrix::from_fn(self.target.len(), self.source.len(), |i, j| grads[i][j].clone())
    }
}

/// `P̃^{lk} ∂x^i/∂y^l ∂x^j/∂y^k − P^{ij}(x(y))` for `i < j`, with `P` over the
/// map's target and `P̃` over its source.
pub fn phase_exchange_identities(
    map: &CoordinateMap,
    pg: &PoissonField,
    pgt: &PoissonField,
) -> Result<Vec<(String, Expr)>, ExchangeError> {
    if pg.coords != map.target || pgt.coords != map.source {
        return Err(ExchangeError::Coordinates(
            "fields must live on the map's target and source coordinates".into(),
        ));
    }
    let grads: Vec<Vec<Expr>> = map.exprs.iter().map(|e| e.gradient(&map.source)).collect();
    let sub = map.substitution();
    let n = map.target.len();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let push = pgt.contract(&grads[i], &grads[j]);
            let pulled = pg.p.get(i, j).substitute(&sub);
            out.push((format!("push[{},{}]", i + 1, j + 1), push.sub(&pulled)));
        }
    }
    Ok(out)
}

pub fn check_phase_exchange(
    map: &CoordinateMap,
    pg: &PoissonField,
    pgt: &PoissonField,
    sampler: &Sampler,
    cfg: &EquivConfig,
) -> Result<IdentityReport, ExchangeError> {
    Ok(check_identities(phase_exchange_identities(map, pg, pgt)?, sampler, cfg)?)
}

/// `S̃_j(y) = (C⁻¹)_{jl} S^l(x(y))`.
pub fn transform_dynfuncs(c: &ExprMatrix, s: &[Expr], map: &CoordinateMap) -> Result<Vec<Expr>, ExchangeError> {
    if c.rows() != s.len() {
        return Err(ExchangeError::Dimension {
            what: "C",
            got: c.rows(),
            expected: s.len(),
        });
    }
    let ci = c.inverse()?;
    let sy = map.pull_back_all(s);
    Ok((0..s.len())
        .map(|j| Expr::sum((0..s.len()).map(|l| ci.get(j, l).mul(&sy[l]))))
        .collect())
}

/// Fails when `C` is singular at any of the given parameter assignments.
pub fn require_invertible(c: &ExprMatrix, samples: &[Assignment]) -> Result<(), ExchangeError> {
    for a in samples {
        if c.eval_exact(a)?.inverse().is_err() {
            let desc = a
                .iter()
                .map(|(s, v)| format!("{}={}", s.name(), v.to_f64()))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(ExchangeError::SingularC(desc));
        }
    }
    Ok(())
}

/// Representation data carried by a bundle: `r̃` on the dual algebra with
/// its representation `ρ̃`, and `r` on the algebra itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeReps {
    pub r_tilde: ExprMatrix,
    pub rep_tilde: MatrixRep,
    pub r: ExprMatrix,
}

/// Everything needed to check the exchange for one bialgebra.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeBundle {
    /// Constants `f` that the transformed functions must realize on `G̃`.
    pub f: StructureConstants,
    pub c: ExprMatrix,
    /// Dynamical functions on `G`, over `pg.coords`.
    pub s: Vec<Expr>,
    /// `x(y)`: from `pgt.coords` to `pg.coords`.
    pub map: CoordinateMap,
    pub pg: PoissonField,
    pub pgt: PoissonField,
    pub reps: Option<ExchangeReps>,
}

impl ExchangeBundle {
    pub fn transformed_functions(&self) -> Result<Vec<Expr>, ExchangeError> {
        transform_dynfuncs(&self.c, &self.s, &self.map)
    }

    /// `ρ_l = Σ_i (C⁻¹)_{li} ρ̃^i`, the declared identification of
    /// representation spaces.
    pub fn conjugated_rep(&self) -> Result<Option<MatrixRep>, ExchangeError> {
        match &self.reps {
            None => Ok(None),
            Some(r) => Ok(Some(r.rep_tilde.recombine(&self.c.inverse()?))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem1Report {
    pub phase_exchange: IdentityReport,
    pub tilde_symmetry: IdentityReport,
    /// Absent when the bundle carries no representations.
    pub q_relation: Option<IdentityReport>,
}

impl Theorem1Report {
    pub fn passes(&self) -> bool {
        self.phase_exchange.holds()
            && self.tilde_symmetry.holds()
            && self.q_relation.as_ref().is_none_or(IdentityReport::holds)
    }
}

/// Entries of `S^i(x(y)) r̃_{ij} ρ̃^j − S̃_i(y) r^{ij} ρ_j`.
pub fn q_relation_identities(bundle: &ExchangeBundle) -> Result<Vec<(String, Expr)>, ExchangeError> {
    let reps = bundle.reps.as_ref().ok_or_else(|| {
        ExchangeError::Coordinates("bundle has no representation data".into())
    })?;
    let rep = bundle.conjugated_rep()?.expect("reps present");
    let sy = bundle.map.pull_back_all(&bundle.s);
    let st = bundle.transformed_functions()?;
    let lhs = crate::dynsys::build_q(&sy, &reps.r_tilde, &reps.rep_tilde).map_err(dyn_to_exchange)?;
    let rhs = crate::dynsys::build_q(&st, &reps.r, &rep).map_err(dyn_to_exchange)?;
    let diff = lhs.sub(&rhs)?;
    let m = diff.rows();
    Ok((0..m)
        .flat_map(|a| (0..m).map(move |b| (a, b)))
        .map(|(a, b)| (format!("Q[{},{}]", a + 1, b + 1), diff.get(a, b).clone()))
        .collect())
}

fn dyn_to_exchange(e: crate::dynsys::DynError) -> ExchangeError {
    use crate::dynsys::DynError;
    match e {
        DynError::Dimension { what, got, expected } => ExchangeError::Dimension { what, got, expected },
        DynError::Equiv(e) => ExchangeError::Equiv(e),
        DynError::Matrix(e) => ExchangeError::Matrix(e),
        DynError::Eval(e) => ExchangeError::Eval(e),
    }
}

/// Checks the Q relation at sampled points of `G̃`.
pub fn transform_q(bundle: &ExchangeBundle, sampler: &Sampler, cfg: &EquivConfig) -> Result<IdentityReport, ExchangeError> {
    Ok(check_identities(q_relation_identities(bundle)?, sampler, cfg)?)
}

/// Runs the pushforward check, the bracket check of the transformed
/// functions against `f`, and (with representations) the Q relation.
/// `sampler` ranges over `pgt.coords` and all parameters.
pub fn verify_theorem1(
    bundle: &ExchangeBundle,
    sampler: &Sampler,
    cfg: &EquivConfig,
) -> Result<Theorem1Report, ExchangeError> {
    let phase_exchange = check_phase_exchange(&bundle.map, &bundle.pg, &bundle.pgt, sampler, cfg)?;
    let sys = crate::dynsys::DynamicalSystem {
        phase: bundle.pgt.clone(),
        s: bundle.transformed_functions()?,
        target: bundle.f.clone(),
    };
    let tilde_symmetry = crate::dynsys::symmetry_residual(&sys, sampler, cfg).map_err(dyn_to_exchange)?;
    let q_relation = match bundle.reps {
        Some(_) => Some(transform_q(bundle, sampler, cfg)?),
        None => None,
    };
    Ok(Theorem1Report {
        phase_exchange,
        tilde_symmetry,
        q_relation,
    })
}

/// Outcome of comparing two Darboux charts through a map between them.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub bracket_preserving: bool,
    pub bracket_report: IdentityReport,
    pub invariant_mapping: bool,
    /// Per parameter sample, the exact coefficients `M` with
    /// `invA_a ∘ map = Σ_b M_ab invB_b`, when they exist.
    pub coefficients: Vec<Option<RatMatrix>>,
    pub parameter_samples: Vec<Assignment>,
}

impl Classification {
    pub fn canonical(&self) -> bool {
        self.bracket_preserving && self.invariant_mapping
    }
}

/// Classifies `zmap`, taking chart B (its source) to chart A (its target).
/// `inv_a` lives on the target symbols, `inv_b` on the source symbols; both
/// charts carry the canonical bracket. Linear coefficients are solved
/// exactly at rational sample points, one solve per parameter sample, and
/// re-checked exactly at further points.
pub fn classify_transformation(
    zmap: &CoordinateMap,
    inv_a: &[Expr],
    inv_b: &[Expr],
    sampler: &Sampler,
    cfg: &EquivConfig,
) -> Result<Classification, ExchangeError> {
    let phase_a = PoissonField::canonical(zmap.target.clone());
    let phase_b = PoissonField::canonical(zmap.source.clone());
    let bracket_report = check_phase_exchange(zmap, &phase_a, &phase_b, sampler, cfg)?;
    let pulled = zmap.pull_back_all(inv_a);
    let samples = if sampler.params.is_empty() { 1 } else { cfg.param_samples.max(1) };
    let fit_points = inv_b.len() + 4;
    let check_points = 6;
    let mut coefficients = Vec::with_capacity(samples);
    let mut parameter_samples = Vec::with_capacity(samples);
    for p in 0..samples {
        let params = sampler.parameter_assignment(cfg.seed, p);
        let mut rows_b: Vec<Vec<Rational>> = Vec::new();
        let mut rows_a: Vec<Vec<Rational>> = Vec::new();
        let mut t = 0;
        while rows_b.len() < fit_points + check_points && t < 20 * (fit_points + check_points) {
            let mut asg = params.clone();
            for (s, v) in sampler.coords.iter().zip(sampler.coordinate_sample(cfg.seed, p, t)) {
                asg.set_exact(s, v);
            }
            t += 1;
            let b: Result<Vec<_>, _> = inv_b.iter().map(|f| f.eval_exact(&asg)).collect();
            let a: Result<Vec<_>, _> = pulled.iter().map(|f| f.eval_exact(&asg)).collect();
            match (b, a) {
                (Ok(b), Ok(a)) => {
                    rows_b.push(b);
                    rows_a.push(a);
                }
                (Err(EvalError::Singular { .. }), _) | (_, Err(EvalError::Singular { .. })) => continue,
                (Err(e), _) | (_, Err(e)) => return Err(e.into()),
            }
        }
        let basis = RatMatrix::from_rows(rows_b[..fit_points.min(rows_b.len())].to_vec());
        let mut m = RatMatrix::zeros(inv_a.len(), inv_b.len());
        let mut ok = rows_b.len() == fit_points + check_points;
        for a in 0..inv_a.len() {
            if !ok {
                break;
            }
            let rhs: Vec<Rational> = rows_a[..basis.rows()].iter().map(|r| r[a].clone()).collect();
            match basis.solve_unique(&rhs) {
                Some(sol) => {
                    for (b, v) in sol.into_iter().enumerate() {
                        m[(a, b)] = v;
                    }
                }
                None => ok = false,
            }
        }
        if ok {
            ok = rows_b[fit_points..].iter().zip(&rows_a[fit_points..]).all(|(rb, ra)| {
                (0..inv_a.len()).all(|a| {
                    let combo: Rational = (0..inv_b.len()).map(|b| &m[(a, b)] * &rb[b]).sum();
                    combo == ra[a]
                })
            });
        }
        coefficients.push(ok.then_some(m));
        parameter_samples.push(params);
    }
    let invariant_mapping = coefficients.iter().all(Option::is_some);
    Ok(Classification {
        bracket_preserving: bracket_report.holds(),
        bracket_report,
        invariant_mapping,
        coefficients,
        parameter_samples,
    })
}

/// Compares recovered coefficients with an expected (possibly parametric)
/// mapping matrix, exactly, at every parameter sample.
pub fn coefficients_match(class: &Classification, expected: &ExprMatrix) -> Result<bool, ExchangeError> {
    for (m, params) in class.coefficients.iter().zip(&class.parameter_samples) {
        let Some(m) = m else { return Ok(false) };
        if expected.eval_exact(params)? != *m {
            return Ok(false);
        }
    }
    Ok(true)
}
