//! Dense determinant, Gram-volume and distance kernels.
//!
//! Every magnitude that can be a product of many factors is carried as a
//! [`LogMagnitude`] so that objectives over dozens of columns neither
//! underflow nor overflow.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct RealMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> RealMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn diagonal(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from a list of rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Builds a `d x k` matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<T>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::Dimension("columns of unequal length".into()));
        }
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Submatrix keeping the listed columns, in the listed order.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.rows, cols.len());
        for i in 0..self.rows {
            for (k, &j) in cols.iter().enumerate() {
                m[(i, k)] = self[(i, j)];
            }
        }
        m
    }

    /// Principal submatrix `A[S, S]`.
    pub fn principal(&self, set: &[usize]) -> Self {
        let mut m = Self::zeros(set.len(), set.len());
        for (a, &i) in set.iter().enumerate() {
            for (b, &j) in set.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    /// `A^T A`.
    pub fn gram(&self) -> Self {
        self.transpose().matmul(self).expect("A^T A is always conformable")
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension("shape mismatch in comparison".into()));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs())))
    }

    pub fn max_column_norm(&self) -> T {
        (0..self.cols).map(|j| norm(&self.column(j))).fold(T::zero(), T::max)
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }
}

impl<T> Index<(usize, usize)> for RealMatrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for RealMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: fmt::Debug> fmt::Debug for RealMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RealMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn flip(self) -> Self {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    pub fn times(self, other: Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }
}

/// Sign and natural log of the absolute value of a real number.
///
/// `sign == Sign::Zero` exactly when `log_abs` is negative infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogMagnitude<T> {
    pub log_abs: T,
    pub sign: Sign,
}

impl<T: Scalar> LogMagnitude<T> {
    pub fn zero() -> Self {
        Self {
            log_abs: T::neg_infinity(),
            sign: Sign::Zero,
        }
    }

    pub fn one() -> Self {
        Self {
            log_abs: T::zero(),
            sign: Sign::Positive,
        }
    }

    pub fn from_value(x: T) -> Self {
        if x == T::zero() {
            Self::zero()
        } else {
            Self {
                log_abs: x.abs().ln(),
                sign: if x > T::zero() { Sign::Positive } else { Sign::Negative },
            }
        }
    }

    fn positive(log_abs: T) -> Self {
        Self {
            log_abs,
            sign: Sign::Positive,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    /// Signed value `sign * exp(log_abs)`.
    pub fn value(&self) -> T {
        match self.sign {
            Sign::Zero => T::zero(),
            Sign::Positive => self.log_abs.exp(),
            Sign::Negative => -self.log_abs.exp(),
        }
    }

    pub fn abs(&self) -> Self {
        match self.sign {
            Sign::Zero => *self,
            _ => Self::positive(self.log_abs),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let sign = self.sign.times(other.sign);
        if sign == Sign::Zero {
            Self::zero()
        } else {
            Self {
                log_abs: self.log_abs + other.log_abs,
                sign,
            }
        }
    }

    /// `|self|^k` for a positive integer-valued exponent.
    pub fn powi_abs(&self, k: i32) -> Self {
        if self.is_zero() {
            Self::zero()
        } else {
            Self::positive(self.log_abs * T::of(f64::from(k)))
        }
    }

    /// Orders by absolute value; zero is the minimum.
    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self.log_abs.partial_cmp(&other.log_abs).unwrap_or(Ordering::Equal),
        }
    }
}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Euclidean norm, scaled to avoid overflow.
pub(crate) fn norm<T: Scalar>(a: &[T]) -> T {
    let scale = a.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    let sum: T = a.iter().map(|&x| (x / scale) * (x / scale)).sum();
    scale * sum.sqrt()
}

/// Sign and log-magnitude of `det(A)` by LU with partial pivoting.
///
/// A pivot smaller than `rank_tol * max column norm` makes the result zero.
pub fn det_logmag<T: Scalar>(a: &RealMatrix<T>) -> Result<LogMagnitude<T>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    if n == 0 {
        return Ok(LogMagnitude::one());
    }
    let tol = T::rank_tol() * a.max_column_norm();
    if tol == T::zero() {
        return Ok(LogMagnitude::zero());
    }
    let mut lu = a.clone();
    let mut negative = false;
    let mut log_abs = T::zero();
    for k in 0..n {
        let (pivot_row, pivot_abs) =
            (k..n).map(|i| (i, lu[(i, k)].abs())).fold(
                (k, T::neg_infinity()),
                |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                },
            );
        if pivot_abs < tol {
            return Ok(LogMagnitude::zero());
        }
        if pivot_row != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(pivot_row, j)];
                lu[(pivot_row, j)] = tmp;
            }
            negative = !negative;
        }
        let pivot = lu[(k, k)];
        if pivot < T::zero() {
            negative = !negative;
        }
        log_abs = log_abs + pivot_abs.ln();
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            if factor == T::zero() {
                continue;
            }
            for j in k + 1..n {
                lu[(i, j)] = lu[(i, j)] - factor * lu[(k, j)];
            }
        }
    }
    Ok(LogMagnitude {
        log_abs,
        sign: if negative { Sign::Negative } else { Sign::Positive },
    })
}

/// `(1/2) log det(U^T U)` computed from a Householder QR of `U`.
///
/// The volume is the product of `|R_kk|`; the Gram matrix is never formed.
pub fn gram_volume_logmag<T: Scalar>(u: &RealMatrix<T>) -> Result<LogMagnitude<T>> {
    let (d, r) = (u.rows(), u.cols());
    if r == 0 {
        return Err(Error::Dimension("gram volume needs at least one column".into()));
    }
    if d < r {
        return Err(Error::Dimension(format!("gram volume of {r} vectors in dimension {d}")));
    }
    let tol = T::rank_tol() * u.max_column_norm();
    if tol == T::zero() {
        return Ok(LogMagnitude::zero());
    }
    let mut a = u.clone();
    let mut log_abs = T::zero();
    let mut v = vec![T::zero(); d];
    for k in 0..r {
        let x: Vec<T> = (k..d).map(|i| a[(i, k)]).collect();
        let alpha = norm(&x);
        if alpha < tol {
            return Ok(LogMagnitude::zero());
        }
        log_abs = log_abs + alpha.ln();
        // Householder vector mapping x to -sign(x0) * alpha * e1.
        let s = if x[0] >= T::zero() { T::one() } else { -T::one() };
        for (i, &xi) in x.iter().enumerate() {
            v[i] = xi;
        }
        v[0] = v[0] + s * alpha;
        let vnorm2 = dot(&v[..d - k], &v[..d - k]);
        if vnorm2 == T::zero() {
            continue;
        }
        for j in k + 1..r {
            let proj: T = (k..d).map(|i| v[i - k] * a[(i, j)]).sum();
            let f = (proj + proj) / vnorm2;
            for i in k..d {
                a[(i, j)] = a[(i, j)] - f * v[i - k];
            }
        }
    }
    Ok(LogMagnitude::positive(log_abs))
}

/// Euclidean distance from `u` to `span(basis)`.
///
/// Uses modified Gram-Schmidt with one reorthogonalisation pass; columns of
/// `basis` whose residual falls below the rank tolerance are skipped.
pub fn dist_to_span<T: Scalar>(u: &[T], basis: &[Vec<T>]) -> Result<T> {
    if let Some(bad) = basis.iter().find(|p| p.len() != u.len()) {
        return Err(Error::Dimension(format!(
            "vector of length {} against spanning vector of length {}",
            u.len(),
            bad.len()
        )));
    }
    let scale = basis.iter().map(|p| norm(p)).fold(norm(u), T::max);
    let tol = T::rank_tol() * scale;
    let mut q: Vec<Vec<T>> = Vec::with_capacity(basis.len());
    for p in basis {
        let mut w = p.clone();
        orthogonalize(&mut w, &q);
        let n = norm(&w);
        if n > tol {
            q.push(w.into_iter().map(|x| x / n).collect());
        }
    }
    let mut w = u.to_vec();
    orthogonalize(&mut w, &q);
    let dist = norm(&w);
    Ok(if dist <= tol { T::zero() } else { dist })
}

fn orthogonalize<T: Scalar>(w: &mut [T], q: &[Vec<T>]) {
    for _ in 0..2 {
        for qk in q {
            let c = dot(w, qk);
            for (wi, &qi) in w.iter_mut().zip(qk) {
                *wi = *wi - c * qi;
            }
        }
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues and the matrix whose columns are the eigenvectors.
pub fn symmetric_eigen<T: Scalar>(a: &RealMatrix<T>) -> Result<(Vec<T>, RealMatrix<T>)> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut m = a.clone();
    let mut q = RealMatrix::identity(n);
    let frob2: T = m.as_slice().iter().map(|&x| x * x).sum();
    let target = frob2 * T::epsilon() * T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off = off + m[(i, j)] * m[(i, j)];
                }
            }
        }
        if off <= target {
            break;
        }
        for p in 0..n {
            for r in p + 1..n {
                let apq = m[(p, r)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(r, r)] - m[(p, p)]) / (apq + apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let t = if theta == T::zero() { T::one() } else { t };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkr = m[(k, r)];
                    m[(k, p)] = c * mkp - s * mkr;
                    m[(k, r)] = s * mkp + c * mkr;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mrk = m[(r, k)];
                    m[(p, k)] = c * mpk - s * mrk;
                    m[(r, k)] = s * mpk + c * mrk;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[(i, i)]).collect();
    Ok((values, q))
}

/// Checks squareness, finiteness and symmetry of a kernel matrix.
pub fn check_symmetric<T: Scalar>(l: &RealMatrix<T>) -> Result<()> {
    if !l.is_square() {
        return Err(Error::NotSquare {
            rows: l.rows(),
            cols: l.cols(),
        });
    }
    let tol = T::recon_tol() * l.max_abs().max(T::one());
    for i in 0..l.rows() {
        for j in i + 1..l.cols() {
            let gap = (l[(i, j)] - l[(j, i)]).abs();
            if gap > tol {
                return Err(Error::Asymmetric {
                    row: i,
                    col: j,
                    gap: gap.to_f64_lossy(),
                });
            }
        }
    }
    Ok(())
}

/// Factor a PSD matrix as `L = V^T V` with `V` of shape `rank x m`.
///
/// Eigenvalues in `[-tol_psd, tol_psd]` are treated as zero, where
/// `tol_psd = psd_tol * trace(L) / m`; rows of `V` follow the eigenvalues
/// in descending order.
pub fn psd_factor<T: Scalar>(l: &RealMatrix<T>) -> Result<RealMatrix<T>> {
    check_symmetric(l)?;
    let m = l.rows();
    if m == 0 {
        return Ok(RealMatrix::zeros(0, 0));
    }
    let tol_psd = T::psd_tol() * (l.trace() / T::of_usize(m)).abs();
    let (values, vectors) = symmetric_eigen(l)?;
    if let Some(&bad) = values.iter().find(|&&v| v < -tol_psd) {
        return Err(Error::NotPsd {
            eigenvalue: bad.to_f64_lossy(),
            tolerance: tol_psd.to_f64_lossy(),
        });
    }
    let mut order: Vec<usize> = (0..m).filter(|&k| values[k] > tol_psd).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal));
    let mut v = RealMatrix::zeros(order.len(), m);
    for (row, &k) in order.iter().enumerate() {
        let s = values[k].sqrt();
        for j in 0..m {
            v[(row, j)] = s * vectors[(j, k)];
        }
    }
    let error = v.gram().max_abs_diff(l)?;
    let tolerance = T::recon_tol() * l.max_abs().max(T::one());
    if error > tolerance {
        return Err(Error::Reconstruction {
            error: error.to_f64_lossy(),
            tolerance: tolerance.to_f64_lossy(),
        });
    }
    Ok(v)
}
