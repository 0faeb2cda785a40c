//! Dense complex linear algebra for small n.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const JACOBI_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Square complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn from_real(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Argument("rows must form a square array".into()));
        }
        Ok(Self::from_fn(n, |i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn from_parts(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<Self> {
        let n = re.len();
        if re.iter().chain(im.iter()).any(|r| r.len() != n) || im.len() != n {
            return Err(Error::Argument("re and im must be n x n".into()));
        }
        let m = Self::from_fn(n, |i, j| C64::new(re[i][j], im[i][j]));
        if !m.is_finite() {
            return Err(Error::Argument("non-finite entry".into()));
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)].conj())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| (0..n).map(|l| self[(i, l)] * other[(l, j)]).sum())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)] - other[(i, j)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_fn(self.n, |i, j| self[(i, j)] * s)
    }

    /// Bottom-right k x k block.
    pub fn bottom_right(&self, k: usize) -> Self {
        let o = self.n - k;
        Self::from_fn(k, |i, j| self[(o + i, o + j)])
    }

    /// Entries of the submatrix with the given (0-based) rows and columns.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<C64>> {
        rows.iter().map(|&r| cols.iter().map(|&c| self[(r, c)]).collect()).collect()
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.n).map(|i| self.data[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

/// Hermitian matrix; only the upper triangle and the real part of the diagonal
/// of the source are read, so the stored matrix is exactly Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: ComplexMatrix,
}

impl HermitianMatrix {
    pub fn from_upper(src: &ComplexMatrix) -> Self {
        let n = src.n();
        let m = ComplexMatrix::from_fn(n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => src[(i, j)],
            std::cmp::Ordering::Equal => C64::new(src[(i, i)].re, 0.0),
            std::cmp::Ordering::Greater => src[(j, i)].conj(),
        });
        Self { m }
    }

    /// Accepts `src` if it is Hermitian to `tol` (relative to 1 + max entry).
    pub fn try_new(src: ComplexMatrix, tol: f64) -> Result<Self> {
        if !src.is_finite() {
            return Err(Error::Argument("non-finite entry".into()));
        }
        let scale = 1.0 + src.max_abs();
        let dev = src.max_diff(&src.adjoint());
        if dev > tol * scale {
            return Err(Error::Argument(format!("matrix is not Hermitian (deviation {dev:e})")));
        }
        Ok(Self::from_upper(&src))
    }

    pub fn from_real_symmetric(rows: &[Vec<f64>]) -> Result<Self> {
        Self::try_new(ComplexMatrix::from_real(rows)?, 1e-12)
    }

    pub fn identity(n: usize) -> Self {
        Self { m: ComplexMatrix::identity(n) }
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        Self { m: ComplexMatrix::from_fn(n, |i, j| if i == j { C64::new(d[i], 0.0) } else { C64::new(0.0, 0.0) }) }
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    pub fn bottom_right(&self, k: usize) -> Self {
        Self { m: self.m.bottom_right(k) }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { m: self.m.scale(C64::new(s, 0.0)) }
    }

    pub fn shifted(&self, u: f64) -> Self {
        let mut m = self.m.clone();
        for i in 0..m.n() {
            m[(i, i)] += u;
        }
        Self { m }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_upper(&ComplexMatrix::from_fn(self.n(), |i, j| self.m[(i, j)] + other.m[(i, j)]))
    }

    pub fn transpose(&self) -> Self {
        Self { m: self.m.transpose() }
    }

    pub fn conj(&self) -> Self {
        Self { m: self.m.conj() }
    }

    /// u A u* for a unitary (or any) u.
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        Self::from_upper(&u.mul(&self.m).mul(&u.adjoint()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n()).map(|i| self.m[(i, i)].re).sum()
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;
    fn index(&self, ij: (usize, usize)) -> &C64 {
        &self.m[ij]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Descending.
    pub values: Vec<f64>,
    /// Column i is a unit eigenvector for `values[i]`.
    pub vectors: ComplexMatrix,
}

fn off_norm(a: &ComplexMatrix) -> f64 {
    let n = a.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

fn frobenius(a: &ComplexMatrix) -> f64 {
    let n = a.n();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// Cyclic complex Jacobi. Values come out descending; each eigenvector's entry
/// of largest modulus (lowest index on ties) is real and nonnegative.
pub fn eig_hermitian(a: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = a.n();
    let mut m = a.as_matrix().clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = frobenius(&m).max(f64::MIN_POSITIVE);
    let mut sweeps = 0;
    while off_norm(&m) > JACOBI_TOL * scale {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, residual: off_norm(&m) });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = apq / mag;
                let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * mag);
                let t = if tau == 0.0 { 1.0 } else { tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt()) };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // G = [[c, s], [-s e^{-ia}, c e^{-ia}]] acting on columns p, q.
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -phase.conj() * s;
                let gqq = phase.conj() * c;
                for i in 0..n {
                    let (xp, xq) = (m[(i, p)], m[(i, q)]);
                    m[(i, p)] = xp * gpp + xq * gqp;
                    m[(i, q)] = xp * gpq + xq * gqq;
                    let (vp, vq) = (v[(i, p)], v[(i, q)]);
                    v[(i, p)] = vp * gpp + vq * gqp;
                    v[(i, q)] = vp * gpq + vq * gqq;
                }
                for j in 0..n {
                    let (xp, xq) = (m[(p, j)], m[(q, j)]);
                    m[(p, j)] = gpp.conj() * xp + gqp.conj() * xq;
                    m[(q, j)] = gpq.conj() * xp + gqq.conj() * xq;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].re.total_cmp(&m[(i, i)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    for j in 0..n {
        let mut best = 0;
        for i in 1..n {
            if vectors[(i, j)].norm() > vectors[(best, j)].norm() {
                best = i;
            }
        }
        anchor_column(&mut vectors, j, best);
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Rotates column `j` so that entry `row` becomes real and nonnegative.
pub fn anchor_column(m: &mut ComplexMatrix, j: usize, row: usize) {
    let e = m[(row, j)];
    if e.norm() == 0.0 {
        return;
    }
    let ph = e.conj() / e.norm();
    for i in 0..m.n() {
        m[(i, j)] *= ph;
    }
    m[(row, j)] = C64::new(m[(row, j)].norm(), 0.0);
}

/// Eigenvalues only, descending.
pub fn eigenvalues(a: &HermitianMatrix) -> Result<Vec<f64>> {
    Ok(eig_hermitian(a)?.values)
}

/// The unique upper triangular b with positive diagonal and b b* = M.
pub fn upper_cholesky(m: &HermitianMatrix) -> Result<ComplexMatrix> {
    let vals = eigenvalues(m)?;
    if let Some((index, &value)) = vals.iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(Error::NotPositiveDefinite { index, value });
    }
    // R = J L J with L the lower factor of J M J; written directly on M.
    let n = m.n();
    let mut b = ComplexMatrix::zeros(n);
    for j in (0..n).rev() {
        let mut d = m[(j, j)].re;
        for l in j + 1..n {
            d -= b[(j, l)].norm_sqr();
        }
        if d <= 0.0 {
            return Err(Error::NotPositiveDefinite { index: j, value: d });
        }
        let djj = d.sqrt();
        b[(j, j)] = C64::new(djj, 0.0);
        for i in (0..j).rev() {
            let mut s = m[(i, j)];
            for l in j + 1..n {
                s -= b[(i, l)] * b[(j, l)].conj();
            }
            b[(i, j)] = s / djj;
        }
    }
    Ok(b)
}

/// Determinant of a small square array.
pub fn det(rows: &[Vec<C64>]) -> C64 {
    let k = rows.len();
    match k {
        0 => C64::new(1.0, 0.0),
        1 => rows[0][0],
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        3 => {
            let r = rows;
            r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
                + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
        }
        _ => det_lu(rows.to_vec()),
    }
}

fn det_lu(mut a: Vec<Vec<C64>>) -> C64 {
    let k = a.len();
    let mut d = C64::new(1.0, 0.0);
    for c in 0..k {
        let p = (c..k).max_by(|&x, &y| a[x][c].norm().total_cmp(&a[y][c].norm())).unwrap();
        if a[p][c].norm() == 0.0 {
            return C64::new(0.0, 0.0);
        }
        if p != c {
            a.swap(p, c);
            d = -d;
        }
        d *= a[c][c];
        for r in c + 1..k {
            let f = a[r][c] / a[c][c];
            for j in c..k {
                let x = a[c][j];
                a[r][j] -= f * x;
            }
        }
    }
    d
}

/// Minor with 1-based row set `rows` and column set `cols`.
pub fn minor(a: &ComplexMatrix, rows: &[usize], cols: &[usize]) -> Result<C64> {
    if rows.len() != cols.len() || rows.is_empty() {
        return Err(Error::Argument(format!("index sets of sizes {} and {}", rows.len(), cols.len())));
    }
    let n = a.n();
    if rows.iter().chain(cols).any(|&i| i == 0 || i > n) {
        return Err(Error::Argument(format!("index out of range 1..{n}")));
    }
    let r: Vec<usize> = rows.iter().map(|i| i - 1).collect();
    let c: Vec<usize> = cols.iter().map(|i| i - 1).collect();
    Ok(det(&a.select(&r, &c)))
}

/// Singular values (descending) by one-sided Jacobi, which keeps relative
/// accuracy on graded triangular matrices.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.n();
    let mut x = a.clone();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = C64::new(0.0, 0.0);
                for i in 0..n {
                    alpha += x[(i, p)].norm_sqr();
                    beta += x[(i, q)].norm_sqr();
                    gamma += x[(i, p)].conj() * x[(i, q)];
                }
                let g = gamma.norm();
                if g <= 1e-16 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let ph = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 { 1.0 } else { zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt()) };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let (xp, xq) = (x[(i, p)], x[(i, q)]);
                    x[(i, p)] = xp * c - xq * ph.conj() * s;
                    x[(i, q)] = xp * ph * s + xq * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut s: Vec<f64> = (0..n).map(|j| (0..n).map(|i| x[(i, j)].norm_sqr()).sum::<f64>().sqrt()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}
