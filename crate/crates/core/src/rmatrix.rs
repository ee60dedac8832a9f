//! r-matrices, the classical Yang–Baxter equation in structure-constant
//! form, and r transformation under algebra isomorphisms.

use num_traits::Zero;

use crate::exact::{ExactResidual, RatMatrix, RatTensor3};
use crate::expr::{Assignment, EvalError, Expr, ExprMatrix, Rational};
use crate::liealg::LieError;

/// Whether the stored matrix carries upper (`r^{ij}`) or lower (`r̃_{ij}`) indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variance {
    Upper,
    Lower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RMatrix {
    pub variance: Variance,
    pub r: ExprMatrix,
}

impl RMatrix {
    pub fn zero(dim: usize, variance: Variance) -> Self {
        Self {
            variance,
            r: ExprMatrix::zeros(dim, dim),
        }
    }

    /// Sums `c·(X_i ∧ X_j)` with `X ∧ Y = X⊗Y − Y⊗X`; indices zero-based.
    pub fn from_wedges(dim: usize, variance: Variance, wedges: &[(usize, usize, Expr)]) -> Result<Self, LieError> {
        let mut r = ExprMatrix::zeros(dim, dim);
        for (i, j, c) in wedges {
            if *i >= dim || *j >= dim {
                return Err(LieError::Index {
                    index: (*i).max(*j),
                    dim,
                });
            }
            let v = r.get(*i, *j).add(c);
            r.set(*i, *j, v);
            let v = r.get(*j, *i).sub(c);
            r.set(*j, *i, v);
        }
        Ok(Self { variance, r })
    }

    pub fn dim(&self) -> usize {
        self.r.rows()
    }

    pub fn instantiate(&self, a: &Assignment) -> Result<RatMatrix, EvalError> {
        self.r.eval_exact(a)
    }
}

/// Max `|r^{ij} + r^{ji}|`.
pub fn skew_residual(r: &RatMatrix) -> ExactResidual {
    let mut res = ExactResidual::zero();
    for i in 0..r.rows() {
        for j in 0..r.cols() {
            res.observe(&(&r[(i, j)] + &r[(j, i)]), &[i, j]);
        }
    }
    res
}

/// The CYBE in structure-constant form:
/// `R_{mjl} = r^{ij} r^{kl} f_{ik}^m + r^{mi} r^{kl} f_{ik}^j + r^{mi} r^{jk} f_{ik}^l`.
/// Returns the full residual tensor and its maximum.
pub fn cybe_residual(r: &RatMatrix, f: &RatTensor3) -> Result<(RatTensor3, ExactResidual), LieError> {
    let n = f.dim();
    if r.rows() != n || r.cols() != n {
        return Err(LieError::Dimension(r.rows(), n));
    }
    // First term: w[j][l][m] = Σ_{i,k} r^{ij} r^{kl} f_{ik}^m.
    let mut w = RatTensor3::zeros(n);
    for i in 0..n {
        for k in 0..n {
            for c in 0..n {
                let fikc = &f[(i, k, c)];
                if fikc.is_zero() {
                    continue;
                }
                for a in 0..n {
                    let ria = &r[(i, a)];
                    if ria.is_zero() {
                        continue;
                    }
                    let t = ria * fikc;
                    for b in 0..n {
                        let rkb = &r[(k, b)];
                        if !rkb.is_zero() {
                            w[(a, b, c)] += &t * rkb;
                        }
                    }
                }
            }
        }
    }
    // The other two terms share the leading r^{mi}; r need not be skew.
    let mut out = RatTensor3::zeros(n);
    let mut res = ExactResidual::zero();
    for m in 0..n {
        for j in 0..n {
            for l in 0..n {
                let mut s = w[(j, l, m)].clone();
                for i in 0..n {
                    let rmi = &r[(m, i)];
                    if rmi.is_zero() {
                        continue;
                    }
                    let mut inner = Rational::zero();
                    for k in 0..n {
                        let fj = &f[(i, k, j)];
                        let fl = &f[(i, k, l)];
                        if !fj.is_zero() {
                            inner += &r[(k, l)] * fj;
                        }
                        if !fl.is_zero() {
                            inner += &r[(j, k)] * fl;
                        }
                    }
                    s += rmi * inner;
                }
                res.observe(&s, &[m, j, l]);
                out[(m, j, l)] = s;
            }
        }
    }
    Ok((out, res))
}

/// `r̃_{ij} = (C⁻¹)_{ki} r^{kl} (C⁻¹)_{lj}`, i.e. `(C⁻¹)ᵀ r C⁻¹`.
pub fn transform_r(c: &RatMatrix, r: &RatMatrix) -> Result<RatMatrix, LieError> {
    let ci = c.inverse()?;
    Ok(ci.transpose().mul(r)?.mul(&ci)?)
}
