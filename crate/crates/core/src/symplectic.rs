//! Symplectic forms on Lie algebras and Poisson structures on coordinates.

use thiserror::Error;

use crate::exact::{ExactResidual, LinalgError, RatMatrix, RatTensor3};
use crate::expr::identity::{check_identities, IdentityReport, UnboundSymbol};
use crate::expr::{
    Assignment, EquivConfig, EquivError, EvalError, Expr, ExprMatrix, Rational, Sampler, Symbol, Tape,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymplecticError {
    #[error("index {index} out of range for dimension {dim}")]
    Index { index: usize, dim: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error("vielbein identity fails for: {0:?}")]
    Vielbein(Vec<String>),
}

impl From<UnboundSymbol> for SymplecticError {
    fn from(u: UnboundSymbol) -> Self {
        Self::Equiv(EquivError::Unbound(u))
    }
}

/// Skew matrix `ω_{ij} = ω(X_i, X_j)` with parameter-only entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    pub omega: ExprMatrix,
}

impl SymplecticForm {
    /// From upper-triangle entries `(i, j, value)`, zero-based.
    pub fn from_upper(dim: usize, entries: &[(usize, usize, Expr)]) -> Result<Self, SymplecticError> {
        Ok(Self {
            omega: skew_from_upper(dim, entries)?,
        })
    }

    pub fn instantiate(&self, a: &Assignment) -> Result<RatMatrix, EvalError> {
        self.omega.eval_exact(a)
    }
}

fn skew_from_upper(dim: usize, entries: &[(usize, usize, Expr)]) -> Result<ExprMatrix, SymplecticError> {
    let mut m = ExprMatrix::zeros(dim, dim);
    for (i, j, v) in entries {
        if *i >= dim || *j >= dim {
            return Err(SymplecticError::Index {
                index: (*i).max(*j),
                dim,
            });
        }
        m.set(*i, *j, m.get(*i, *j).add(v));
        m.set(*j, *i, m.get(*j, *i).sub(v));
    }
    Ok(m)
}

/// Closure of a 2-form on a Lie algebra, in three index arrangements.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureReport {
    /// `f_{ij}^l ω_{lk} + f_{jk}^l ω_{li} + f_{ki}^l ω_{lj}` over all `(i,j,k)`.
    pub cyclic: ExactResidual,
    /// `−f_{ij}^l ω_{lk} + f_{ik}^l ω_{lj} − f_{jk}^l ω_{li}`, the coboundary form.
    pub coboundary: ExactResidual,
    /// `f_{ij}^l ω_{lk} + f_{ik}^l ω_{lj} + f_{jk}^l ω_{li}` over `i<j<k`, kept
    /// as a diagnostic of the alternative index pattern.
    pub ordered_pattern: ExactResidual,
    pub determinant: Rational,
    pub skew: ExactResidual,
}

impl ClosureReport {
    /// Closed, skew and nondegenerate.
    pub fn passes(&self) -> bool {
        self.cyclic.is_zero() && self.skew.is_zero() && !num_traits::Zero::is_zero(&self.determinant)
    }

    /// Whether the cyclic and coboundary forms agree on closedness.
    pub fn conventions_agree(&self) -> bool {
        self.cyclic.is_zero() == self.coboundary.is_zero()
    }
}

pub fn closure_residual(omega: &RatMatrix, f: &RatTensor3) -> Result<ClosureReport, SymplecticError> {
    let n = f.dim();
    if omega.rows() != n || omega.cols() != n {
        return Err(SymplecticError::Dimension(omega.rows(), n));
    }
    // c[i][j][k] = f_{ij}^l ω_{lk} = ω([X_i, X_j], X_k)
    let c = RatTensor3::from_fn(n, |i, j, k| (0..n).map(|l| &f[(i, j, l)] * &omega[(l, k)]).sum());
    let mut cyclic = ExactResidual::zero();
    let mut coboundary = ExactResidual::zero();
    let mut ordered = ExactResidual::zero();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let cyc = &c[(i, j, k)] + &c[(j, k, i)] + &c[(k, i, j)];
                cyclic.observe(&cyc, &[i, j, k]);
                let cob = -&c[(i, j, k)] + &c[(i, k, j)] - &c[(j, k, i)];
                coboundary.observe(&cob, &[i, j, k]);
                if i < j && j < k {
                    let ord = &c[(i, j, k)] + &c[(i, k, j)] + &c[(j, k, i)];
                    ordered.observe(&ord, &[i, j, k]);
                }
            }
        }
    }
    let mut skew = ExactResidual::zero();
    for i in 0..n {
        for j in 0..n {
            skew.observe(&(&omega[(i, j)] + &omega[(j, i)]), &[i, j]);
        }
    }
    Ok(ClosureReport {
        cyclic,
        coboundary,
        ordered_pattern: ordered,
        determinant: omega.det(),
        skew,
    })
}

/// Constant Poisson matrix `P = ω⁻¹`.
pub fn invert_omega(omega: &RatMatrix) -> Result<RatMatrix, SymplecticError> {
    Ok(omega.inverse()?)
}

/// A Poisson tensor `P^{ij}(x)` over ordered coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonField {
    pub coords: Vec<Symbol>,
    pub p: ExprMatrix,
}

impl PoissonField {
    pub fn new(coords: Vec<Symbol>, p: ExprMatrix) -> Result<Self, SymplecticError> {
        if p.rows() != coords.len() || p.cols() != coords.len() {
            return Err(SymplecticError::Dimension(p.rows(), coords.len()));
        }
        Ok(Self { coords, p })
    }

    /// From upper-triangle brackets `{x_i, x_j} = value`, zero-based.
    pub fn from_upper(coords: Vec<Symbol>, entries: &[(usize, usize, Expr)]) -> Result<Self, SymplecticError> {
        let p = skew_from_upper(coords.len(), entries)?;
        Ok(Self { coords, p })
    }

    /// The canonical field with `{x_i, x_{n+i}} = 1`.
    pub fn canonical(coords: Vec<Symbol>) -> Self {
        let n = coords.len() / 2;
        let entries: Vec<_> = (0..n).map(|i| (i, n + i, Expr::one())).collect();
        Self::from_upper(coords, &entries).expect("indices in range")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `{f, g} = P^{ij} ∂_i f ∂_j g`.
    pub fn bracket(&self, f: &Expr, g: &Expr) -> Expr {
        let df = f.gradient(&self.coords);
        let dg = g.gradient(&self.coords);
        self.contract(&df, &dg)
    }

    /// `P^{ij} a_i b_j` for precomputed gradients.
    pub fn contract(&self, a: &[Expr], b: &[Expr]) -> Expr {
        let n = self.dim();
        let mut terms = Vec::new();
        for i in 0..n {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..n {
                let pij = self.p.get(i, j);
                if pij.is_zero() || b[j].is_zero() {
                    continue;
                }
                terms.push(Expr::product([pij.clone(), a[i].clone(), b[j].clone()]));
            }
        }
        Expr::sum(terms)
    }

    /// `P^{ij} + P^{ji}` for `i < j` (and the diagonal).
    pub fn skew_identities(&self) -> Vec<(String, Expr)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                out.push((format!("skew[{},{}]", i + 1, j + 1), self.p.get(i, j).add(self.p.get(j, i))));
            }
        }
        out
    }

    /// `Σ_l P^{il} ∂_l P^{jk} + P^{jl} ∂_l P^{ki} + P^{kl} ∂_l P^{ij}` for `i<j<k`.
    pub fn jacobi_identities(&self) -> Vec<(String, Expr)> {
        let n = self.dim();
        let grads: Vec<Vec<Vec<Expr>>> = (0..n)
            .map(|i| (0..n).map(|j| self.p.get(i, j).gradient(&self.coords)).collect())
            .collect();
        let row = |i: usize| -> Vec<Expr> { (0..n).map(|l| self.p.get(i, l).clone()).collect() };
        let dot = |a: &[Expr], b: &[Expr]| -> Expr {
            Expr::sum(a.iter().zip(b).filter(|(x, y)| !x.is_zero() && !y.is_zero()).map(|(x, y)| x.mul(y)))
        };
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let e = Expr::sum([
                        dot(&row(i), &grads[j][k]),
                        dot(&row(j), &grads[k][i]),
                        dot(&row(k), &grads[i][j]),
                    ]);
                    out.push((format!("jacobi[{},{},{}]", i + 1, j + 1, k + 1), e));
                }
            }
        }
        out
    }

    /// Skewness and Jacobi at sampled points.
    pub fn check_poisson(&self, sampler: &Sampler, cfg: &EquivConfig) -> Result<IdentityReport, SymplecticError> {
        let mut ids = self.skew_identities();
        ids.extend(self.jacobi_identities());
        Ok(check_identities(ids, sampler, cfg)?)
    }

    /// Largest `|P^{ij}|` at the near-identity point where every coordinate
    /// equals `eps`, with the given parameter values.
    pub fn identity_magnitude(&self, params: &Assignment, eps: f64) -> Result<f64, SymplecticError> {
        let mut inputs = self.coords.clone();
        let mut values = vec![eps; self.coords.len()];
        let mut extra: Vec<(Symbol, f64)> = Vec::new();
        for s in self.p.entries().iter().flat_map(|e| e.free_symbols()) {
            if !inputs.contains(&s) && !extra.iter().any(|(t, _)| *t == s) {
                let v = params
                    .get(&s)
                    .ok_or_else(|| EvalError::Unbound(s.name().to_string()))?
                    .to_f64();
                extra.push((s, v));
            }
        }
        for (s, v) in extra {
            inputs.push(s);
            values.push(v);
        }
        let tape = Tape::compile(self.p.entries(), &inputs)?;
        let vals = tape.eval_values(&values, 0.0)?;
        Ok(vals.iter().fold(0.0, |m, v| m.max(v.abs())))
    }
}

/// Field-level Jacobi residual: maximum over sampled points of the cyclic sum.
pub fn jacobi_residual_field(
    p: &PoissonField,
    sampler: &Sampler,
    cfg: &EquivConfig,
) -> Result<IdentityReport, SymplecticError> {
    Ok(check_identities(p.jacobi_identities(), sampler, cfg)?)
}

/// Frame `e^i_j(x)` with its inverse-transpose partner `e_k^j(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vielbein {
    pub e: ExprMatrix,
    pub einv: ExprMatrix,
}

impl Vielbein {
    /// `e^i_j e_k^j − δ^i_k` for every `(i, k)`.
    pub fn identities(&self) -> Result<Vec<(String, Expr)>, SymplecticError> {
        let prod = self
            .e
            .mul(&self.einv.transpose())
            .map_err(|_| SymplecticError::Dimension(self.e.cols(), self.einv.cols()))?;
        let n = prod.rows();
        let mut out = Vec::new();
        for i in 0..n {
            for k in 0..n {
                let target = if i == k { Expr::one() } else { Expr::zero() };
                out.push((format!("frame[{},{}]", i + 1, k + 1), prod.get(i, k).sub(&target)));
            }
        }
        Ok(out)
    }
}

/// `P^{ij}(x) = e^i_k e^j_l P^{kl}`, after confirming the frame identity.
pub fn push_poisson(
    vb: &Vielbein,
    p: &ExprMatrix,
    coords: Vec<Symbol>,
    sampler: &Sampler,
    cfg: &EquivConfig,
) -> Result<PoissonField, SymplecticError> {
    let report = check_identities(vb.identities()?, sampler, cfg)?;
    if !report.holds() {
        return Err(SymplecticError::Vielbein(
            report.failures().into_iter().map(String::from).collect(),
        ));
    }
    let err = |_| SymplecticError::Dimension(vb.e.cols(), p.rows());
    let field = vb.e.mul(p).map_err(err)?.mul(&vb.e.transpose()).map_err(err)?;
    PoissonField::new(coords, field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{int, rat, SymbolTable};
    use crate::liealg::StructureConstants;

    fn consts(dim: usize, e: &[(usize, usize, usize, i64)]) -> RatTensor3 {
        let v: Vec<_> = e.iter().map(|&(i, j, k, x)| (i, j, k, Expr::integer(x))).collect();
        StructureConstants::from_brackets(dim, &v)
            .unwrap()
            .instantiate(&Assignment::new())
            .unwrap()
    }

    fn omega(dim: usize, e: &[(usize, usize, Rational)]) -> RatMatrix {
        let v: Vec<_> = e.iter().map(|(i, j, x)| (*i, *j, Expr::constant(x.clone()))).collect();
        SymplecticForm::from_upper(dim, &v)
            .unwrap()
            .instantiate(&Assignment::new())
            .unwrap()
    }

    #[test]
    fn closure_cases() {
        let w = omega(4, &[(0, 2, int(1)), (1, 3, int(1)), (0, 1, rat(1, 3))]);
        assert!(closure_residual(&w, &RatTensor3::zeros(4)).unwrap().passes());
        let a2 = consts(2, &[(0, 1, 1, 1)]);
        let rep = closure_residual(&omega(2, &[(0, 1, int(1))]), &a2).unwrap();
        assert!(rep.passes());
        assert!(rep.conventions_agree());
    }

    #[test]
    fn closure_of_a2_sum_with_pairing_forms() {
        let f = consts(4, &[(0, 1, 1, 1), (2, 3, 3, 1)]);
        let rep = closure_residual(&omega(4, &[(0, 1, int(1)), (2, 3, int(1))]), &f).unwrap();
        assert!(rep.passes());
        let rep = closure_residual(&omega(4, &[(0, 2, int(1)), (1, 3, int(1))]), &f).unwrap();
        assert!(!rep.cyclic.is_zero());
    }

    #[test]
    fn inverse_of_omega() {
        let w = omega(4, &[(0, 2, int(1)), (1, 3, int(1))]);
        let p = invert_omega(&w).unwrap();
        assert_eq!(p, omega(4, &[(0, 2, int(-1)), (1, 3, int(-1))]));
        assert_eq!(invert_omega(&w.scale(&int(2))).unwrap(), p.scale(&rat(1, 2)));
        assert_eq!(invert_omega(&p).unwrap(), w);
        assert!(invert_omega(&RatMatrix::zeros(2, 2)).is_err());
    }

    fn ex1_field() -> (SymbolTable, PoissonField) {
        let t = SymbolTable::new().with_coordinates(["x1", "x2", "x3", "x4"]);
        let p = |s: &str| t.parse(s).unwrap();
        let coords: Vec<_> = ["x1", "x2", "x3", "x4"].iter().map(|n| t.get(n).unwrap()).collect();
        let field = PoissonField::from_upper(
            coords,
            &[
                (0, 3, p("1 - exp(-x1)")),
                (1, 2, p("1 - exp(-x1)")),
                (1, 3, p("x2*exp(-x1)")),
                (2, 3, p("(1 + exp(-2*x1) - 2*exp(-x1))/2")),
            ],
        )
        .unwrap();
        (t, field)
    }

    fn sampler(f: &PoissonField) -> Sampler {
        Sampler::new(f.coords.clone(), vec![])
    }

    #[test]
    fn bracket_on_group_field() {
        let (t, f) = ex1_field();
        let b = f.bracket(&t.parse("x2").unwrap(), &t.parse("x4").unwrap());
        let diff = b.sub(&t.parse("x2*exp(-x1)").unwrap());
        let o = crate::expr::equiv_zero(&diff, &sampler(&f), &EquivConfig::default()).unwrap();
        assert!(o.holds);
    }

    #[test]
    fn group_field_is_poisson_and_vanishes_at_identity() {
        let (_, f) = ex1_field();
        let rep = f.check_poisson(&sampler(&f), &EquivConfig::default()).unwrap();
        assert!(rep.holds(), "{:?}", rep.failures());
        assert!(rep.max_residual() <= 1e-9);
        assert!(f.identity_magnitude(&Assignment::new(), 1e-9).unwrap() < 1e-6);
    }

    #[test]
    fn damaged_group_field_fails_jacobi() {
        let (_, mut f) = ex1_field();
        let x2 = Expr::symbol(&f.coords[1]);
        f.p.set(1, 3, x2.clone());
        f.p.set(3, 1, x2.neg());
        let rep = jacobi_residual_field(&f, &sampler(&f), &EquivConfig::default()).unwrap();
        assert!(!rep.holds());
        assert!(rep.max_residual() > 1e-3);
    }

    #[test]
    fn constant_x3_x4_entry_keeps_jacobi_but_not_identity_vanishing() {
        let (_, mut f) = ex1_field();
        f.p.set(2, 3, Expr::one());
        f.p.set(3, 2, Expr::integer(-1));
        assert!(jacobi_residual_field(&f, &sampler(&f), &EquivConfig::default()).unwrap().holds());
        assert!(f.identity_magnitude(&Assignment::new(), 1e-9).unwrap() > 0.5);
    }

    #[test]
    fn canonical_field_brackets() {
        let t = SymbolTable::new().with_coordinates(["z1", "z2", "z3", "z4"]);
        let coords: Vec<_> = ["z1", "z2", "z3", "z4"].iter().map(|n| t.get(n).unwrap()).collect();
        let f = PoissonField::canonical(coords);
        let b = f.bracket(&t.parse("z1").unwrap(), &t.parse("z3").unwrap());
        assert!(b.is_one());
        assert!(f.check_poisson(&sampler(&f), &EquivConfig::default()).unwrap().holds());
    }

    #[test]
    fn diagonal_vielbein_push() {
        let t = SymbolTable::new().with_coordinates(["x1", "x2", "x3", "x4"]);
        let coords: Vec<_> = ["x1", "x2", "x3", "x4"].iter().map(|n| t.get(n).unwrap()).collect();
        let e = ExprMatrix::from_fn(4, 4, |i, j| match (i, j) {
            (0, 0) => t.parse("exp(x1)").unwrap(),
            (i, j) if i == j => Expr::one(),
            _ => Expr::zero(),
        });
        let einv = ExprMatrix::from_fn(4, 4, |i, j| match (i, j) {
            (0, 0) => t.parse("exp(-x1)").unwrap(),
            (i, j) if i == j => Expr::one(),
            _ => Expr::zero(),
        });
        let canon = PoissonField::canonical(coords.clone()).p;
        let s = Sampler::new(coords.clone(), vec![]);
        let f = push_poisson(&Vielbein { e: e.clone(), einv }, &canon, coords.clone(), &s, &EquivConfig::default())
            .unwrap();
        assert_eq!(f.p.get(0, 2), &t.parse("exp(x1)").unwrap());
        let bad = Vielbein {
            e: e.clone(),
            einv: e,
        };
        assert!(matches!(
            push_poisson(&bad, &canon, coords, &s, &EquivConfig::default()),
            Err(SymplecticError::Vielbein(_))
        ));
    }
}
