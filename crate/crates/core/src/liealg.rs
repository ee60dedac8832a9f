//! Structure constants, bialgebra doubles, isomorphisms, cobrackets and
//! matrix representations.
//!
//! Storage convention: a rank-3 table `f[i][j][k]` holds `f_{ij}^k` for an
//! algebra and `f̃^{ij}_k` for its dual, i.e. the first two slots are always
//! the bracketed pair and the last slot the result. Indices are zero-based.

use std::collections::BTreeSet;

use num_traits::Zero;
use thiserror::Error;

use crate::exact::{ExactResidual, LinalgError, RatMatrix, RatTensor3};
use crate::expr::{Assignment, EvalError, Expr, ExprMatrix, Rational, Symbol};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("index {index} out of range for dimension {dim}")]
    Index { index: usize, dim: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Structure constants with parameter-only expression entries.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    dim: usize,
    f: Vec<Expr>,
}

impl StructureConstants {
    pub fn abelian(dim: usize) -> Self {
        Self {
            dim,
            f: vec![Expr::zero(); dim * dim * dim],
        }
    }

    /// Builds from independent entries `(i, j, k, value)` meaning
    /// `[X_i, X_j] ∋ value·X_k`; the `(j, i, k)` entry is set to the negative.
    /// Repeated `(i, j, k)` triples accumulate.
    pub fn from_brackets(dim: usize, entries: &[(usize, usize, usize, Expr)]) -> Result<Self, LieError> {
        let mut s = Self::abelian(dim);
        for (i, j, k, v) in entries {
            for &idx in [i, j, k] {
                if idx >= dim {
                    return Err(LieError::Index { index: idx, dim });
                }
            }
            let cur = s.get(*i, *j, *k).add(v);
            s.set(*i, *j, *k, cur);
            let cur = s.get(*j, *i, *k).sub(v);
            s.set(*j, *i, *k, cur);
        }
        Ok(s)
    }

    /// Raw table without enforcing antisymmetry; useful for negative tests.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> Expr) -> Self {
        let mut s = Self::abelian(dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    s.set(i, j, k, f(i, j, k));
                }
            }
        }
        s
    }

    pub fn from_rational(t: &RatTensor3) -> Self {
        Self::from_fn(t.dim(), |i, j, k| Expr::constant(t[(i, j, k)].clone()))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Expr {
        &self.f[(i * self.dim + j) * self.dim + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, e: Expr) {
        self.f[(i * self.dim + j) * self.dim + k] = e;
    }

    pub fn parameters(&self) -> BTreeSet<Symbol> {
        self.f.iter().flat_map(|e| e.free_symbols()).filter(Symbol::is_parameter).collect()
    }

    /// Exact table at a parameter assignment.
    pub fn instantiate(&self, a: &Assignment) -> Result<RatTensor3, EvalError> {
        let vals = self.f.iter().map(|e| e.eval_exact(a)).collect::<Result<Vec<_>, _>>()?;
        let d = self.dim;
        Ok(RatTensor3::from_fn(d, |i, j, k| vals[(i * d + j) * d + k].clone()))
    }
}

/// Max `|f_{ij}^k + f_{ji}^k|`.
pub fn check_antisymmetry(f: &RatTensor3) -> ExactResidual {
    let n = f.dim();
    let mut r = ExactResidual::zero();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                r.observe(&(&f[(i, j, k)] + &f[(j, i, k)]), &[i, j, k]);
            }
        }
    }
    r
}

/// Max over `(i,j,k,m)` of `f_{ij}^l f_{lk}^m + f_{jk}^l f_{li}^m + f_{ki}^l f_{lj}^m`.
pub fn check_jacobi(f: &RatTensor3) -> ExactResidual {
    let n = f.dim();
    let mut r = ExactResidual::zero();
    let mut acc = vec![Rational::zero(); n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                acc.iter_mut().for_each(|v| v.set_zero());
                for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
                    for l in 0..n {
                        let fab = &f[(a, b, l)];
                        if fab.is_zero() {
                            continue;
                        }
                        for (m, slot) in acc.iter_mut().enumerate() {
                            let flc = &f[(l, c, m)];
                            if !flc.is_zero() {
                                *slot += fab * flc;
                            }
                        }
                    }
                }
                for (m, v) in acc.iter().enumerate() {
                    r.observe(v, &[i, j, k, m]);
                }
            }
        }
    }
    r
}

/// A pair of dual algebras; `gdual` uses the shared storage convention.
#[derive(Debug, Clone, PartialEq)]
pub struct LieBialgebra {
    pub g: StructureConstants,
    pub gdual: StructureConstants,
}

impl LieBialgebra {
    pub fn new(g: StructureConstants, gdual: StructureConstants) -> Result<Self, LieError> {
        if g.dim() != gdual.dim() {
            return Err(LieError::Dimension(g.dim(), gdual.dim()));
        }
        Ok(Self { g, gdual })
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn parameters(&self) -> BTreeSet<Symbol> {
        let mut p = self.g.parameters();
        p.extend(self.gdual.parameters());
        p
    }
}

/// Structure constants of the double `g ⊕ g̃` on the basis
/// `(X_1..X_n, X̃^1..X̃^n)`, with the mixed bracket
/// `[X_i, X̃^j] = f̃^{jk}_i X_k + f_{ki}^j X̃^k`.
pub fn build_double(b: &LieBialgebra) -> StructureConstants {
    build_double_from(&b.g, &b.gdual)
}

fn build_double_from(g: &StructureConstants, gd: &StructureConstants) -> StructureConstants {
    let n = g.dim();
    let mut d = StructureConstants::abelian(2 * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                d.set(i, j, k, g.get(i, j, k).clone());
                d.set(n + i, n + j, n + k, gd.get(i, j, k).clone());
                // [X_i, X̃^j] components
                d.set(i, n + j, k, gd.get(j, k, i).clone());
                d.set(i, n + j, n + k, g.get(k, i, j).clone());
                d.set(n + j, i, k, gd.get(j, k, i).neg());
                d.set(n + j, i, n + k, g.get(k, i, j).neg());
            }
        }
    }
    d
}

/// Exact counterpart of [`build_double`] on instantiated tables.
pub fn build_double_exact(g: &RatTensor3, gd: &RatTensor3) -> Result<RatTensor3, LieError> {
    if g.dim() != gd.dim() {
        return Err(LieError::Dimension(g.dim(), gd.dim()));
    }
    let d = build_double_from(&StructureConstants::from_rational(g), &StructureConstants::from_rational(gd));
    Ok(d.instantiate(&Assignment::new())?)
}

/// Result of checking the Manin triple conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct ManinReport {
    pub double_jacobi: ExactResidual,
    pub ad_invariance: ExactResidual,
    /// Jacobi residual of the double under the opposite mixed-bracket sign,
    /// computed only when the normative double fails.
    pub opposite_sign_jacobi: Option<ExactResidual>,
}

impl ManinReport {
    pub fn passes(&self) -> bool {
        self.double_jacobi.is_zero() && self.ad_invariance.is_zero()
    }
}

/// Checks Jacobi of the double and ad-invariance of the canonical pairing
/// `<X_i, X̃^j> = δ_i^j` (blocks isotropic), exactly.
pub fn verify_manin_triple(g: &RatTensor3, gd: &RatTensor3) -> Result<ManinReport, LieError> {
    let n = g.dim();
    let d = build_double_exact(g, gd)?;
    let double_jacobi = check_jacobi(&d);
    let pair = |u: usize, v: usize| -> bool { (u < n && v == u + n) || (v < n && u == v + n) };
    let mut ad = ExactResidual::zero();
    for z in 0..2 * n {
        for u in 0..2 * n {
            for v in 0..2 * n {
                let mut s = Rational::zero();
                for l in 0..2 * n {
                    if pair(l, v) {
                        s += &d[(z, u, l)];
                    }
                    if pair(u, l) {
                        s += &d[(z, v, l)];
                    }
                }
                ad.observe(&s, &[z, u, v]);
            }
        }
    }
    let opposite_sign_jacobi = if double_jacobi.is_zero() {
        None
    } else {
        let mut flipped = d.clone();
        for i in 0..n {
            for j in 0..n {
                for k in 0..2 * n {
                    flipped[(i, n + j, k)] = -flipped[(i, n + j, k)].clone();
                    flipped[(n + j, i, k)] = -flipped[(n + j, i, k)].clone();
                }
            }
        }
        Some(check_jacobi(&flipped))
    };
    Ok(ManinReport {
        double_jacobi,
        ad_invariance: ad,
        opposite_sign_jacobi,
    })
}

/// Coefficients of `δ(X_a) = [1⊗X_a + X_a⊗1, r]` on `X_b⊗X_c`, stored as the
/// candidate dual table `out[b][c][a]`.
pub fn cobracket_from_r(r: &RatMatrix, f: &RatTensor3) -> Result<RatTensor3, LieError> {
    let n = f.dim();
    if r.rows() != n || r.cols() != n {
        return Err(LieError::Dimension(r.rows(), n));
    }
    let mut out = RatTensor3::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut s = Rational::zero();
                for i in 0..n {
                    s += &r[(i, c)] * &f[(a, i, b)];
                    s += &r[(b, i)] * &f[(a, i, c)];
                }
                out[(b, c, a)] = s;
            }
        }
    }
    Ok(out)
}

/// `C^{il} C^{jm} f_{lm}^s (C⁻¹)_{sk}`.
pub fn apply_isomorphism(c: &RatMatrix, f: &RatTensor3) -> Result<RatTensor3, LieError> {
    let n = f.dim();
    if c.rows() != n || c.cols() != n {
        return Err(LieError::Dimension(c.rows(), n));
    }
    let ci = c.inverse()?;
    // Contract one index at a time: t1[i][m][s] = C^{il} f_{lm}^s, etc.
    let t1 = RatTensor3::from_fn(n, |i, m, s| (0..n).map(|l| &c[(i, l)] * &f[(l, m, s)]).sum());
    let t2 = RatTensor3::from_fn(n, |i, j, s| (0..n).map(|m| &c[(j, m)] * &t1[(i, m, s)]).sum());
    Ok(RatTensor3::from_fn(n, |i, j, k| (0..n).map(|s| &t2[(i, j, s)] * &ci[(s, k)]).sum()))
}

/// A matrix representation with parameter-only entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRep {
    pub rho: Vec<ExprMatrix>,
}

impl MatrixRep {
    pub fn new(rho: Vec<ExprMatrix>) -> Result<Self, LieError> {
        let m = rho.first().map_or(0, ExprMatrix::rows);
        if let Some(bad) = rho.iter().find(|r| r.rows() != m || r.cols() != m) {
            return Err(LieError::Dimension(bad.rows(), m));
        }
        Ok(Self { rho })
    }

    pub fn size(&self) -> usize {
        self.rho.first().map_or(0, ExprMatrix::rows)
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn instantiate(&self, a: &Assignment) -> Result<Vec<RatMatrix>, EvalError> {
        self.rho.iter().map(|m| m.eval_exact(a)).collect()
    }

    /// `ρ'_l = Σ_i M_{li} ρ_i`, a change of basis in the represented algebra.
    pub fn recombine(&self, m: &ExprMatrix) -> Self {
        let rho = (0..m.rows())
            .map(|l| {
                let mut acc = ExprMatrix::zeros(self.size(), self.size());
                for (i, r) in self.rho.iter().enumerate() {
                    if !m.get(l, i).is_zero() {
                        acc = acc.add(&r.scale(m.get(l, i))).expect("equal sizes");
                    }
                }
                acc
            })
            .collect();
        Self { rho }
    }
}

/// Max entrywise residual of `[ρ_i, ρ_j] − f_{ij}^k ρ_k`, with witness `(i, j, row, col)`.
pub fn check_representation(rho: &[RatMatrix], f: &RatTensor3) -> Result<ExactResidual, LieError> {
    let n = f.dim();
    if rho.len() != n {
        return Err(LieError::Dimension(rho.len(), n));
    }
    let mut r = ExactResidual::zero();
    for i in 0..n {
        for j in i + 1..n {
            let mut diff = rho[i].commutator(&rho[j])?;
            for (k, rk) in rho.iter().enumerate() {
                if !f[(i, j, k)].is_zero() {
                    diff = diff.sub(&rk.scale(&f[(i, j, k)]))?;
                }
            }
            let m = diff.max_abs();
            if let Some(w) = &m.witness {
                let mut idx = vec![i, j];
                idx.extend(w);
                r.observe(&m.max, &idx);
            }
        }
    }
    Ok(r)
}
