//! Exact rational linear algebra and rank-3 tensors.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::expr::identity::{default_param_choices, Sampler};
use crate::expr::{Assignment, EvalError, ExprMatrix, Rational, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("matrix is singular")]
    Singular,
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    Shape(usize, usize, usize, usize),
}

/// Largest absolute entry of a residual together with the indices where it
/// occurs. Zero residual means the identity holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactResidual {
    pub max: Rational,
    pub witness: Option<Vec<usize>>,
}

impl ExactResidual {
    pub fn zero() -> Self {
        Self {
            max: Rational::zero(),
            witness: None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.max.is_zero()
    }

    /// Records a candidate residual value at `idx`, keeping the largest.
    pub fn observe(&mut self, value: &Rational, idx: &[usize]) {
        let a = value.abs();
        if a > self.max {
            self.max = a;
            self.witness = Some(idx.to_vec());
        }
    }

    /// Combines two residuals, keeping the larger.
    pub fn merge(mut self, other: ExactResidual) -> Self {
        if other.max > self.max {
            self = other;
        }
        self
    }
}

/// Dense row-major matrix of exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct RatMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, o: &Self) -> Result<Self, LinalgError> {
        if self.cols != o.rows {
            return Err(LinalgError::Shape(self.rows, self.cols, o.rows, o.cols));
        }
        Ok(Self::from_fn(self.rows, o.cols, |i, j| {
            let mut acc = Rational::zero();
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if !a.is_zero() {
                    acc += a * &o[(k, j)];
                }
            }
            acc
        }))
    }

    pub fn add(&self, o: &Self) -> Result<Self, LinalgError> {
        self.check_same(o)?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &o[(i, j)]))
    }

    pub fn sub(&self, o: &Self) -> Result<Self, LinalgError> {
        self.check_same(o)?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &o[(i, j)]))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] * c)
    }

    pub fn commutator(&self, o: &Self) -> Result<Self, LinalgError> {
        self.mul(o)?.sub(&o.mul(self)?)
    }

    fn check_same(&self, o: &Self) -> Result<(), LinalgError> {
        if self.rows == o.rows && self.cols == o.cols {
            Ok(())
        } else {
            Err(LinalgError::Shape(self.rows, self.cols, o.rows, o.cols))
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn max_abs(&self) -> ExactResidual {
        let mut r = ExactResidual::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                r.observe(&self[(i, j)], &[i, j]);
            }
        }
        r
    }

    /// Determinant by fraction-exact Gaussian elimination.
    pub fn det(&self) -> Rational {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rational::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !a[(r, col)].is_zero()) else {
                return Rational::zero();
            };
            if p != col {
                a.swap_rows(p, col);
                det = -det;
            }
            let pivot = a[(col, col)].clone();
            det *= &pivot;
            for r in col + 1..n {
                let factor = &a[(r, col)] / &pivot;
                if factor.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = &a[(col, c)] * &factor;
                    a[(r, c)] -= v;
                }
            }
        }
        det
    }

    /// Inverse by Gauss–Jordan elimination.
    pub fn inverse(&self) -> Result<Self, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::Shape(self.rows, self.cols, self.cols, self.rows));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let p = (col..n)
                .find(|&r| !a[(r, col)].is_zero())
                .ok_or(LinalgError::Singular)?;
            a.swap_rows(p, col);
            inv.swap_rows(p, col);
            let pivot = a[(col, col)].recip();
            for c in 0..n {
                a[(col, c)] *= &pivot;
                inv[(col, c)] *= &pivot;
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let factor = a[(r, col)].clone();
                for c in 0..n {
                    let va = &a[(col, c)] * &factor;
                    a[(r, c)] -= va;
                    let vi = &inv[(col, c)] * &factor;
                    inv[(r, c)] -= vi;
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// Solves `self * x = rhs` for a possibly overdetermined system. Returns
    /// `None` when the system is inconsistent or the solution is not unique.
    pub fn solve_unique(&self, rhs: &[Rational]) -> Option<Vec<Rational>> {
        assert_eq!(rhs.len(), self.rows);
        let (m, n) = (self.rows, self.cols);
        let mut aug = Self::from_fn(m, n + 1, |i, j| {
            if j < n {
                self[(i, j)].clone()
            } else {
                rhs[i].clone()
            }
        });
        let mut row = 0;
        for col in 0..n {
            let p = (row..m).find(|&r| !aug[(r, col)].is_zero())?;
            aug.swap_rows(p, row);
            let pivot = aug[(row, col)].recip();
            for c in 0..=n {
                aug[(row, c)] *= &pivot;
            }
            for r in 0..m {
                if r == row || aug[(r, col)].is_zero() {
                    continue;
                }
                let factor = aug[(r, col)].clone();
                for c in 0..=n {
                    let v = &aug[(row, c)] * &factor;
                    aug[(r, c)] -= v;
                }
            }
            row += 1;
        }
        if (row..m).any(|r| !aug[(r, n)].is_zero()) {
            return None;
        }
        Some((0..n).map(|i| aug[(i, n)].clone()).collect())
    }

    pub fn to_expr_matrix(&self) -> ExprMatrix {
        ExprMatrix::from_rationals(self.rows, self.cols, &self.data)
    }
}

impl std::ops::Index<(usize, usize)> for RatMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

/// Dense cube of rationals indexed `[i][j][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatTensor3 {
    dim: usize,
    data: Vec<Rational>,
}

impl RatTensor3 {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Rational::zero(); dim * dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize, usize) -> Rational) -> Self {
        let mut data = Vec::with_capacity(dim * dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    data.push(f(i, j, k));
                }
            }
        }
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn max_abs(&self) -> ExactResidual {
        let mut r = ExactResidual::zero();
        let d = self.dim;
        for (n, v) in self.data.iter().enumerate() {
            r.observe(v, &[n / (d * d), (n / d) % d, n % d]);
        }
        r
    }
}

impl std::ops::Index<(usize, usize, usize)> for RatTensor3 {
    type Output = Rational;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &Rational {
        &self.data[(i * self.dim + j) * self.dim + k]
    }
}

impl std::ops::IndexMut<(usize, usize, usize)> for RatTensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut Rational {
        &mut self.data[(i * self.dim + j) * self.dim + k]
    }
}

impl ExprMatrix {
    /// Evaluates every entry exactly under `a`.
    pub fn eval_exact(&self, a: &Assignment) -> Result<RatMatrix, EvalError> {
        let vals = self
            .entries()
            .iter()
            .map(|e| e.eval_exact(a))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RatMatrix::from_fn(self.rows(), self.cols(), |i, j| vals[i * self.cols() + j].clone()))
    }
}

/// Exact parameter assignments drawn deterministically from the nonzero
/// choice set, one per requested sample. With no parameters a single empty
/// assignment is returned.
pub fn parameter_samples(params: &[Symbol], seed: u64, count: usize) -> Vec<Assignment> {
    if params.is_empty() {
        return vec![Assignment::new()];
    }
    let sampler = Sampler {
        coords: Vec::new(),
        params: params.to_vec(),
        coord_millis: (200, 1500),
        param_choices: default_param_choices(),
    };
    (0..count).map(|p| sampler.parameter_assignment(seed, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{int, rat};
    use proptest::prelude::*;

    fn m(rows: &[&[i64]]) -> RatMatrix {
        RatMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&v| int(v)).collect()).collect())
    }

    #[test]
    fn inverse_and_det() {
        let c = m(&[&[0, 0, 0, 1], &[0, 0, 1, 0], &[0, -1, 0, 1], &[-1, 0, 0, 0]]);
        let ci = c.inverse().unwrap();
        assert_eq!(ci, m(&[&[0, 0, 0, -1], &[1, 0, -1, 0], &[0, 1, 0, 0], &[1, 0, 0, 0]]));
        assert_eq!(c.mul(&ci).unwrap(), RatMatrix::identity(4));
        assert_eq!(c.det(), int(1));
        assert_eq!(m(&[&[1, 2], &[2, 4]]).inverse(), Err(LinalgError::Singular));
        assert_eq!(m(&[&[1, 2], &[2, 4]]).det(), int(0));
    }

    #[test]
    fn overdetermined_solve() {
        let a = m(&[&[1, 0], &[0, 1], &[1, 1]]);
        assert_eq!(a.solve_unique(&[int(2), int(3), int(5)]), Some(vec![int(2), int(3)]));
        assert_eq!(a.solve_unique(&[int(2), int(3), int(6)]), None);
        let rank_deficient = m(&[&[1, 1], &[2, 2]]);
        assert_eq!(rank_deficient.solve_unique(&[int(1), int(2)]), None);
    }

    #[test]
    fn samples_are_deterministic() {
        let ps = vec![Symbol::parameter("a"), Symbol::parameter("b")];
        let s1 = parameter_samples(&ps, 3, 5);
        assert_eq!(s1, parameter_samples(&ps, 3, 5));
        assert_eq!(s1.len(), 5);
        assert!(s1.iter().all(|a| a.exact(&ps[0]).is_some_and(|v| !v.is_zero())));
        assert_eq!(parameter_samples(&[], 3, 5).len(), 1);
    }

    proptest! {
        #[test]
        fn inverse_round_trips(vals in proptest::collection::vec(-4i64..5, 9), den in 1i64..4) {
            let a = RatMatrix::from_fn(3, 3, |i, j| rat(vals[3 * i + j], den));
            match a.inverse() {
                Ok(inv) => {
                    prop_assert_eq!(a.mul(&inv).unwrap(), RatMatrix::identity(3));
                    prop_assert_eq!(inv.inverse().unwrap(), a.clone());
                    prop_assert_eq!(a.det() * inv.det(), int(1));
                }
                Err(_) => prop_assert!(a.det().is_zero()),
            }
        }
    }
}
