use thiserror::Error;

use super::{Assignment, Expr, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    Shape(usize, usize, usize, usize),
}

/// Dense row-major matrix of expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Expr>,
}

impl ExprMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Expr::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Expr::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Expr) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds from rows; all rows must have equal length.
    pub fn from_rows(rows: Vec<Vec<Expr>>) -> Result<Self, MatrixError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(MatrixError::Shape(r, c, r, bad.len()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_rationals(rows: usize, cols: usize, values: &[Rational]) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self {
            rows,
            cols,
            data: values.iter().cloned().map(Expr::constant).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Expr {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, e: Expr) {
        self.data[i * self.cols + j] = e;
    }

    pub fn entries(&self) -> &[Expr] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn scale(&self, c: &Expr) -> Self {
        self.map(|e| c.mul(e))
    }

    fn same_shape(&self, o: &Self) -> Result<(), MatrixError> {
        if self.rows == o.rows && self.cols == o.cols {
            Ok(())
        } else {
            Err(MatrixError::Shape(self.rows, self.cols, o.rows, o.cols))
        }
    }

    pub fn add(&self, o: &Self) -> Result<Self, MatrixError> {
        self.same_shape(o)?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).add(o.get(i, j))))
    }

    pub fn sub(&self, o: &Self) -> Result<Self, MatrixError> {
        self.same_shape(o)?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).sub(o.get(i, j))))
    }

    pub fn mul(&self, o: &Self) -> Result<Self, MatrixError> {
        if self.cols != o.rows {
            return Err(MatrixError::Shape(self.rows, self.cols, o.rows, o.cols));
        }
        Ok(Self::from_fn(self.rows, o.cols, |i, j| {
            Expr::sum((0..self.cols).map(|k| self.get(i, k).mul(o.get(k, j))))
        }))
    }

    /// Matrix commutator `AB - BA`.
    pub fn commutator(&self, o: &Self) -> Result<Self, MatrixError> {
        self.mul(o)?.sub(&o.mul(self)?)
    }

    pub fn trace(&self) -> Expr {
        Expr::sum((0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()))
    }

    /// Kronecker product; entry `((a,c),(b,d))` at row `a*m+c`, column `b*m'+d`.
    pub fn kron(&self, o: &Self) -> Self {
        Self::from_fn(self.rows * o.rows, self.cols * o.cols, |r, c| {
            let (a, ci) = (r / o.rows, r % o.rows);
            let (b, d) = (c / o.cols, c % o.cols);
            self.get(a, b).mul(o.get(ci, d))
        })
    }

    pub fn with_parameters(&self, params: &Assignment) -> Self {
        self.map(|e| e.with_parameters(params))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Determinant by cofactor expansion. Intended for the small (≤ 6)
    /// matrices of the catalog; zero entries are skipped.
    pub fn determinant(&self) -> Result<Expr, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::Shape(self.rows, self.cols, self.cols, self.rows));
        }
        let all: Vec<usize> = (0..self.cols).collect();
        Ok(self.minor_det(0, &all))
    }

    fn minor_det(&self, row: usize, cols: &[usize]) -> Expr {
        if cols.is_empty() {
            return Expr::one();
        }
        let mut terms = Vec::new();
        for (pos, &c) in cols.iter().enumerate() {
            let e = self.get(row, c);
            if e.is_zero() {
                continue;
            }
            let rest: Vec<usize> = cols.iter().copied().filter(|&k| k != c).collect();
            let t = e.mul(&self.minor_det(row + 1, &rest));
            terms.push(if pos % 2 == 0 { t } else { t.neg() });
        }
        Expr::sum(terms)
    }

    /// Symbolic inverse `adj(M)/det(M)`. Invertibility is not decided here:
    /// a vanishing determinant shows up as a singular evaluation.
    pub fn inverse(&self) -> Result<Self, MatrixError> {
        let det = self.determinant()?;
        let n = self.rows;
        let all: Vec<usize> = (0..n).collect();
        let cofactor = |i: usize, j: usize| {
            let rows: Vec<usize> = all.iter().copied().filter(|&k| k != i).collect();
            let cols: Vec<usize> = all.iter().copied().filter(|&k| k != j).collect();
            let sub = Self::from_fn(n - 1, n - 1, |a, b| self.get(rows[a], cols[b]).clone());
            let m = sub.minor_det(0, &(0..n - 1).collect::<Vec<_>>());
            if (i + j).is_multiple_of(2) {
                m
            } else {
                m.neg()
            }
        };
        Ok(Self::from_fn(n, n, |i, j| cofactor(j, i).div(&det)))
    }
}
