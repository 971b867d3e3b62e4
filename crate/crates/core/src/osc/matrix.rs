//! Vectors and matrices of oscillating functions sharing one basis.

use num_complex::Complex;

use super::basis::Basis;
use super::func::OscFn;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::Real;

/// Column vector of [`OscFn`] entries over a common basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OscVector<T: Real> {
    components: Vec<OscFn<T>>,
}

impl<T: Real> OscVector<T> {
    pub fn new(components: Vec<OscFn<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let basis = components[0].basis().clone();
        for c in &components[1..] {
            if *c.basis() != basis {
                return Err(Error::BasisMismatch);
            }
        }
        Ok(Self { components })
    }

    pub fn zero(basis: &Basis<T>, dim: usize) -> Self {
        Self {
            components: (0..dim).map(|_| OscFn::zero(basis)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn basis(&self) -> &Basis<T> {
        self.components[0].basis()
    }

    pub fn component(&self, i: usize) -> &OscFn<T> {
        &self.components[i]
    }

    pub fn components(&self) -> &[OscFn<T>] {
        &self.components
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    pub fn is_real(&self) -> bool {
        self.components.iter().all(|c| c.is_real())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_>>()?;
        Ok(Self { components })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.negate())
    }

    pub fn negate(&self) -> Self {
        Self {
            components: self.components.iter().map(|c| c.negate()).collect(),
        }
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            components: self.components.iter().map(|c| c.scale(factor)).collect(),
        }
    }

    pub fn scale_real(&self, factor: T) -> Self {
        Self {
            components: self.components.iter().map(|c| c.scale_real(factor)).collect(),
        }
    }

    /// Entrywise product with one scalar function.
    pub fn mul_fn(&self, f: &OscFn<T>) -> Result<Self> {
        let components = self
            .components
            .iter()
            .map(|c| c.mul(f))
            .collect::<Result<_>>()?;
        Ok(Self { components })
    }

    pub fn differentiate(&self) -> Self {
        Self {
            components: self.components.iter().map(|c| c.differentiate()).collect(),
        }
    }

    pub fn real_part(&self) -> Self {
        Self {
            components: self.components.iter().map(|c| c.real_part()).collect(),
        }
    }

    pub fn mean_value(&self) -> Vec<Complex<T>> {
        self.components.iter().map(|c| c.mean_value()).collect()
    }

    pub fn evaluate(&self, t: T) -> Vec<Complex<T>> {
        self.components.iter().map(|c| c.evaluate(t)).collect()
    }

    pub fn evaluate_real(&self, t: T) -> Vec<T> {
        self.components.iter().map(|c| c.evaluate_real(t)).collect()
    }

    /// Largest coefficient modulus over all components.
    pub fn max_coeff_norm(&self) -> T {
        self.components
            .iter()
            .map(|c| c.max_coeff_norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Apply a real matrix on the left.
    pub fn apply_real_matrix(&self, a: &[Vec<T>]) -> Result<Self> {
        let n = self.dim();
        if a.len() != n || a.iter().any(|row| row.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.len(),
            });
        }
        let basis = self.basis();
        let mut out = Vec::with_capacity(n);
        for row in a {
            let mut acc = OscFn::zero(basis);
            for (j, &w) in row.iter().enumerate() {
                if w.is_zero() {
                    continue;
                }
                acc = acc.add(&self.components[j].scale_real(w))?;
            }
            out.push(acc);
        }
        Ok(Self { components: out })
    }

    /// Apply a complex matrix on the left.
    pub fn apply_complex_matrix(&self, a: &CMat<T>) -> Result<Self> {
        let n = self.dim();
        if a.n_cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.n_cols(),
            });
        }
        let basis = self.basis();
        let mut out = Vec::with_capacity(a.n_rows());
        for i in 0..a.n_rows() {
            let mut acc = OscFn::zero(basis);
            for j in 0..n {
                let w = a[(i, j)];
                if w.norm().is_zero() {
                    continue;
                }
                acc = acc.add(&self.components[j].scale(w))?;
            }
            out.push(acc);
        }
        Ok(Self { components: out })
    }
}

/// Rectangular array of oscillating functions (rows of equal length, shared
/// basis). Used for Jacobians.
#[derive(Debug, Clone, PartialEq)]
pub struct OscMatrix<T: Real> {
    rows: Vec<Vec<OscFn<T>>>,
}

impl<T: Real> OscMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<OscFn<T>>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let cols = rows[0].len();
        let basis = rows[0][0].basis().clone();
        for row in &rows {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            for e in row {
                if *e.basis() != basis {
                    return Err(Error::BasisMismatch);
                }
            }
        }
        Ok(Self { rows })
    }

    /// Build from columns (e.g. per-variable partial derivatives).
    pub fn from_columns(cols: Vec<OscVector<T>>) -> Result<Self> {
        if cols.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, got: 0 });
        }
        let n = cols[0].dim();
        let mut rows = vec![Vec::with_capacity(cols.len()); n];
        for col in &cols {
            if col.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: col.dim(),
                });
            }
            for (i, row) in rows.iter_mut().enumerate() {
                row.push(col.component(i).clone());
            }
        }
        Self::from_rows(rows)
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn entry(&self, i: usize, j: usize) -> &OscFn<T> {
        &self.rows[i][j]
    }

    pub fn mean_value(&self) -> CMat<T> {
        let mut m = CMat::zeros(self.n_rows(), self.n_cols());
        for i in 0..self.n_rows() {
            for j in 0..self.n_cols() {
                m[(i, j)] = self.rows[i][j].mean_value();
            }
        }
        m
    }

    /// Similarity transform `L · self · R` with constant complex matrices.
    pub fn conjugate(&self, l: &CMat<T>, r: &CMat<T>) -> Result<Self> {
        let basis = self.rows[0][0].basis().clone();
        let n = l.n_rows();
        let m = r.n_cols();
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(m);
            for j in 0..m {
                let mut acc = OscFn::zero(&basis);
                for k in 0..self.n_rows() {
                    for p in 0..self.n_cols() {
                        let w = l[(i, k)] * r[(p, j)];
                        if w.norm().is_zero() {
                            continue;
                        }
                        acc = acc.add(&self.rows[k][p].scale(w))?;
                    }
                }
                row.push(acc);
            }
            rows.push(row);
        }
        Ok(Self { rows })
    }
}
