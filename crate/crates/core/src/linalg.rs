//! Small dense complex linear algebra: Gaussian solves, a complex Schur
//! triangularization via shifted QR, and eigenvector extraction.
//!
//! Sized for the system matrices that occur here (n of a few), not for large
//! problems. Everything is generic over the working scalar.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::Real;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat<T> {
    n_rows: usize,
    n_cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            data: vec![Complex::zero(); n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Self {
        let n_rows = rows.len();
        let n_cols = if n_rows == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            assert_eq!(r.len(), n_cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            n_rows,
            n_cols,
            data,
        }
    }

    /// Lift a real row-major matrix into the complex plane.
    pub fn from_real(rows: &[Vec<T>]) -> Self {
        let cr: Vec<Vec<Complex<T>>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex::new(x, T::zero())).collect())
            .collect();
        Self::from_rows(&cr)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n_cols, rhs.n_rows);
        let mut out = Self::zeros(self.n_rows, rhs.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.n_cols {
                    out[(i, j)] = out[(i, j)] + a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.n_cols, v.len());
        (0..self.n_rows)
            .map(|i| {
                let mut acc = Complex::zero();
                for j in 0..self.n_cols {
                    acc = acc + self[(i, j)] * v[j];
                }
                acc
            })
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.n_rows).map(|i| self[(i, j)]).collect()
    }

    /// Max-modulus norm (matches the paper's matrix norm).
    pub fn norm_max(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// 1-norm (max column sum), used for conditioning estimates.
    pub fn norm_one(&self) -> T {
        (0..self.n_cols)
            .map(|j| {
                (0..self.n_rows)
                    .map(|i| self[(i, j)].norm())
                    .fold(T::zero(), |a, b| a + b)
            })
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Solve `self * x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        assert_eq!(self.n_rows, self.n_cols);
        let n = self.n_rows;
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut a = self.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let mut pivot = col;
            let mut best = a[(col, col)].norm();
            for r in col + 1..n {
                let v = a[(r, col)].norm();
                if v > best {
                    best = v;
                    pivot = r;
                }
            }
            if best <= T::epsilon() * T::of(16.0) * self.norm_max().max(T::one()) {
                return Err(Error::SingularMatrix { pivot: col });
            }
            if pivot != col {
                for j in 0..n {
                    let tmp = a[(col, j)];
                    a[(col, j)] = a[(pivot, j)];
                    a[(pivot, j)] = tmp;
                }
                x.swap(col, pivot);
            }
            let inv = Complex::new(T::one(), T::zero()) / a[(col, col)];
            for r in col + 1..n {
                let factor = a[(r, col)] * inv;
                if factor.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[(col, j)];
                    a[(r, j)] = a[(r, j)] - factor * v;
                }
                let xc = x[col];
                x[r] = x[r] - factor * xc;
            }
        }
        for col in (0..n).rev() {
            let mut acc = x[col];
            for j in col + 1..n {
                acc = acc - a[(col, j)] * x[j];
            }
            x[col] = acc / a[(col, col)];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<Self> {
        assert_eq!(self.n_rows, self.n_cols);
        let n = self.n_rows;
        let mut out = Self::zeros(n, n);
        for j in 0..n {
            let mut e = vec![Complex::zero(); n];
            e[j] = Complex::new(T::one(), T::zero());
            let col = self.solve(&e)?;
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        Ok(out)
    }

    /// 1-norm condition number via the explicit inverse.
    pub fn cond_one(&self) -> Result<T> {
        let inv = self.inverse()?;
        Ok(self.norm_one() * inv.norm_one())
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.n_cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.n_cols + j]
    }
}

/// Unitary similarity `A = Q T Q^H` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur<T> {
    pub q: CMat<T>,
    pub t: CMat<T>,
}

impl<T: Real> Schur<T> {
    /// Eigenvalues in diagonal order of `t` (not sorted).
    pub fn eigenvalues(&self) -> Vec<Complex<T>> {
        (0..self.t.n_rows()).map(|i| self.t[(i, i)]).collect()
    }
}

/// Complex Givens rotation `G = [[c, s], [-conj(s), c]]` with real `c`,
/// chosen so that `G (f, g)^T = (r, 0)^T`.
fn givens<T: Real>(f: Complex<T>, g: Complex<T>) -> (T, Complex<T>) {
    let gn = g.norm();
    if gn.is_zero() {
        return (T::one(), Complex::zero());
    }
    let fn_ = f.norm();
    if fn_.is_zero() {
        // Pure swap with a phase.
        return (T::zero(), g.conj() / gn);
    }
    let r = (fn_ * fn_ + gn * gn).sqrt();
    let c = fn_ / r;
    let s = (f / fn_) * (g.conj() / r);
    (c, s)
}

fn apply_givens_rows<T: Real>(m: &mut CMat<T>, k: usize, c: T, s: Complex<T>, lo: usize, hi: usize) {
    for j in lo..hi {
        let a = m[(k, j)];
        let b = m[(k + 1, j)];
        m[(k, j)] = a.scale(c) + s * b;
        m[(k + 1, j)] = b.scale(c) - s.conj() * a;
    }
}

fn apply_givens_cols<T: Real>(m: &mut CMat<T>, k: usize, c: T, s: Complex<T>, lo: usize, hi: usize) {
    for i in lo..hi {
        let a = m[(i, k)];
        let b = m[(i, k + 1)];
        m[(i, k)] = a.scale(c) + s.conj() * b;
        m[(i, k + 1)] = b.scale(c) - s * a;
    }
}

/// Reduce to upper Hessenberg form by Givens rotations, accumulating `q`.
fn hessenberg<T: Real>(h: &mut CMat<T>, q: &mut CMat<T>) {
    let n = h.n_rows();
    for col in 0..n.saturating_sub(2) {
        for row in (col + 2..n).rev() {
            let f = h[(row - 1, col)];
            let g = h[(row, col)];
            if g.norm() <= T::zero() {
                continue;
            }
            let (c, s) = givens(f, g);
            apply_givens_rows(h, row - 1, c, s, col, n);
            h[(row, col)] = Complex::zero();
            apply_givens_cols(h, row - 1, c, s, 0, n);
            apply_givens_cols(q, row - 1, c, s, 0, n);
        }
    }
}

/// Eigenvalue of the trailing 2x2 block closest to its (1,1) entry.
fn wilkinson_shift<T: Real>(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Complex<T> {
    let two = T::of(2.0);
    let mid = (a + d).unscale(two);
    let disc = ((a - d).unscale(two)).powu(2) + b * c;
    let root = disc.sqrt();
    let l1 = mid + root;
    let l2 = mid - root;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Schur factorization of a square complex matrix by single-shift QR
/// with deflation. Returns `A = Q T Q^H`, `T` upper triangular.
pub fn schur<T: Real>(a: &CMat<T>) -> Result<Schur<T>> {
    assert_eq!(a.n_rows(), a.n_cols());
    let n = a.n_rows();
    let mut t = a.clone();
    let mut q = CMat::identity(n);
    if n <= 1 {
        return Ok(Schur { q, t });
    }
    hessenberg(&mut t, &mut q);

    let scale = t.norm_max().max(T::one());
    let tiny = T::epsilon() * scale;
    let mut hi = n - 1;
    let mut iters_here = 0usize;
    let mut total = 0usize;
    let max_total = 60 * n;

    while hi > 0 {
        // Deflate converged subdiagonal entries.
        let mut lo = hi;
        while lo > 0 {
            let sub = t[(lo, lo - 1)].norm();
            let local = t[(lo - 1, lo - 1)].norm() + t[(lo, lo)].norm();
            if sub <= T::epsilon() * local.max(tiny) {
                t[(lo, lo - 1)] = Complex::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iters_here = 0;
            continue;
        }

        total += 1;
        iters_here += 1;
        if total > max_total {
            return Err(Error::SchurNoConvergence { iterations: total });
        }

        let sigma = if iters_here % 16 == 0 {
            // Exceptional shift to break rare symmetric stalls.
            let off = t[(hi, hi - 1)].norm()
                + if hi >= 2 { t[(hi - 1, hi - 2)].norm() } else { T::zero() };
            t[(hi, hi)] + Complex::new(off * T::of(0.75), T::zero())
        } else {
            wilkinson_shift(
                t[(hi - 1, hi - 1)],
                t[(hi - 1, hi)],
                t[(hi, hi - 1)],
                t[(hi, hi)],
            )
        };

        // Implicit single-shift sweep over the active block [lo, hi].
        let mut x = t[(lo, lo)] - sigma;
        let mut y = t[(lo + 1, lo)];
        for k in lo..hi {
            let (c, s) = givens(x, y);
            apply_givens_rows(&mut t, k, c, s, lo.saturating_sub(1), n);
            let col_hi = (k + 2).min(hi) + 1;
            apply_givens_cols(&mut t, k, c, s, 0, col_hi);
            apply_givens_cols(&mut q, k, c, s, 0, n);
            if k + 1 < hi {
                x = t[(k + 1, k)];
                y = t[(k + 2, k)];
            }
        }
        // Clean below the first subdiagonal of the swept block.
        for i in lo + 2..=hi {
            for j in lo..i - 1 {
                t[(i, j)] = Complex::zero();
            }
        }
    }
    // The sweep never touches entries below the subdiagonal elsewhere.
    for i in 1..n {
        t[(i, i - 1)] = Complex::zero();
    }
    Ok(Schur { q, t })
}

/// Complex Schur factorization of a real square matrix.
pub fn schur_real<T: Real>(a: &[Vec<T>]) -> Result<Schur<T>> {
    schur(&CMat::from_real(a))
}

/// Eigen decomposition via Schur: eigenvalues plus an eigenvector matrix with
/// columns normalized so the largest-modulus entry is 1. Pairs are sorted by
/// `(re, im)` ascending for a canonical order. Fails when the matrix is
/// (numerically) defective.
#[derive(Debug, Clone)]
pub struct Eigen<T> {
    pub values: Vec<Complex<T>>,
    /// Columns are the eigenvectors, ordered like `values`.
    pub vectors: CMat<T>,
}

pub fn eigen_decompose<T: Real>(a: &[Vec<T>]) -> Result<Eigen<T>> {
    let s = schur_real(a)?;
    let n = s.t.n_rows();
    let scale = s.t.norm_max().max(T::one());

    // Back-substitute eigenvectors of the triangular factor, then map by Q.
    let mut pairs: Vec<(Complex<T>, Vec<Complex<T>>)> = Vec::with_capacity(n);
    for j in 0..n {
        let lambda = s.t[(j, j)];
        let mut w = vec![Complex::<T>::zero(); n];
        w[j] = Complex::new(T::one(), T::zero());
        for i in (0..j).rev() {
            let mut acc = Complex::<T>::zero();
            for l in i + 1..=j {
                acc = acc + s.t[(i, l)] * w[l];
            }
            let denom = s.t[(i, i)] - lambda;
            let sep = denom.norm();
            if sep <= T::epsilon() * T::of(64.0) * scale {
                return Err(Error::DefectiveMatrix {
                    separation: sep.to_f64().unwrap_or(0.0),
                });
            }
            w[i] = -acc / denom;
        }
        let v = s.q.matvec(&w);
        // Canonical scaling: first entry of largest modulus becomes 1.
        let mut best = 0usize;
        let mut best_norm = T::zero();
        for (idx, z) in v.iter().enumerate() {
            if z.norm() > best_norm {
                best_norm = z.norm();
                best = idx;
            }
        }
        let pivot = v[best];
        let v: Vec<Complex<T>> = v.into_iter().map(|z| z / pivot).collect();
        pairs.push((lambda, v));
    }

    pairs.sort_by(|(a, _), (b, _)| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut vectors = CMat::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (j, (lambda, v)) in pairs.into_iter().enumerate() {
        values.push(lambda);
        for i in 0..n {
            vectors[(i, j)] = v[i];
        }
    }
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only (canonically sorted by `(re, im)`).
pub fn eigenvalues_real<T: Real>(a: &[Vec<T>]) -> Result<Vec<Complex<T>>> {
    let s = schur_real(a)?;
    let mut vals = s.eigenvalues();
    vals.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(vals)
}

/// Solve a real linear system (convenience wrapper over the complex path).
pub fn solve_real<T: Real>(a: &[Vec<T>], b: &[T]) -> Result<Vec<T>> {
    let m = CMat::from_real(a);
    let bc: Vec<Complex<T>> = b.iter().map(|&x| Complex::new(x, T::zero())).collect();
    Ok(m.solve(&bc)?.into_iter().map(|z| z.re).collect())
}
