//! Gelfand-Zeitlin actions and angles on Hermitian matrices.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{anchor_column, eig_hermitian, eigenvalues, ComplexMatrix, HermitianMatrix, C64};

/// Gap below which a matrix is treated as outside H_0.
pub const H0_THRESHOLD: f64 = 1e-8;

/// Reduces an angle to [0, 2pi).
pub fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Representative of an angle difference in (-pi, pi].
pub fn wrap_angle(x: f64) -> f64 {
    let r = reduce_angle(x);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

fn check_triangle(rows: &[Vec<f64>], first: usize) -> Result<()> {
    for (idx, row) in rows.iter().enumerate() {
        if row.len() != idx + first {
            return Err(Error::Argument(format!("level {} has {} entries", idx + first, row.len())));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::Argument("non-finite entry".into()));
        }
    }
    Ok(())
}

/// lambda[k-1][i-1] = lambda_i^(k): descending eigenvalues of the k x k
/// bottom-right block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GzPattern {
    pub lambda: Vec<Vec<f64>>,
}

impl GzPattern {
    pub fn new(lambda: Vec<Vec<f64>>) -> Result<Self> {
        check_triangle(&lambda, 1)?;
        Ok(Self { lambda })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    /// lambda_i^(k), 1-based.
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.lambda[k - 1][i - 1]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { lambda: self.lambda.iter().map(|l| l.iter().map(|&x| f(x)).collect()).collect() }
    }

    pub fn gap(&self) -> f64 {
        cone_gap(&to_ladder(self)).delta
    }

    pub fn max_abs(&self) -> f64 {
        self.lambda.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        flat_diff(&self.lambda, &other.lambda)
    }
}

fn flat_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// ell[k-1][i-1] = lambda_1^(k) + ... + lambda_i^(k).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderVector {
    pub ell: Vec<Vec<f64>>,
}

impl LadderVector {
    pub fn new(ell: Vec<Vec<f64>>) -> Result<Self> {
        check_triangle(&ell, 1)?;
        Ok(Self { ell })
    }

    pub fn n(&self) -> usize {
        self.ell.len()
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.ell[k - 1][i - 1]
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { ell: self.ell.iter().map(|l| l.iter().map(|x| c * x).collect()).collect() }
    }

    pub fn max_diff(&self, other: &Self) -> f64 {
        flat_diff(&self.ell, &other.ell)
    }

    /// Entries in the order (1,1), (1,2), (2,2), (1,3), ...
    pub fn flat(&self) -> Vec<f64> {
        self.ell.iter().flatten().copied().collect()
    }
}

/// psi[k-1][i-1] = psi_i^(k) in [0, 2pi), for 1 <= i <= k < n.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnglePattern {
    pub psi: Vec<Vec<f64>>,
}

impl AnglePattern {
    pub fn new(psi: Vec<Vec<f64>>) -> Result<Self> {
        check_triangle(&psi, 1)?;
        Ok(Self { psi: psi.into_iter().map(|l| l.into_iter().map(reduce_angle).collect()).collect() })
    }

    pub fn zeros(n: usize) -> Self {
        Self { psi: (1..n).map(|k| vec![0.0; k]).collect() }
    }

    pub fn n(&self) -> usize {
        self.psi.len() + 1
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.psi[k - 1][i - 1]
    }

    pub fn negated(&self) -> Self {
        Self { psi: self.psi.iter().map(|l| l.iter().map(|&x| reduce_angle(-x)).collect()).collect() }
    }

    /// Largest wrapped difference.
    pub fn max_diff(&self, other: &Self) -> f64 {
        self.psi.iter().flatten().zip(other.psi.iter().flatten()).fold(0.0, |m, (x, y)| m.max(wrap_angle(x - y).abs()))
    }

    pub fn flat(&self) -> Vec<f64> {
        self.psi.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConeGap {
    pub delta: f64,
}

pub fn gz_actions(a: &HermitianMatrix) -> Result<GzPattern> {
    let n = a.n();
    let lambda = (1..=n).map(|k| eigenvalues(&a.bottom_right(k))).collect::<Result<Vec<_>>>()?;
    Ok(GzPattern { lambda })
}

pub fn to_ladder(p: &GzPattern) -> LadderVector {
    let ell = p
        .lambda
        .iter()
        .map(|l| {
            l.iter()
                .scan(0.0, |s, x| {
                    *s += x;
                    Some(*s)
                })
                .collect()
        })
        .collect();
    LadderVector { ell }
}

pub fn from_ladder(l: &LadderVector) -> GzPattern {
    let lambda = l.ell.iter().map(|row| (0..row.len()).map(|i| if i == 0 { row[0] } else { row[i] - row[i - 1] }).collect()).collect();
    GzPattern { lambda }
}

/// Minimum slack over both rhombus families (with ell_0 = 0).
pub fn cone_gap(l: &LadderVector) -> ConeGap {
    let n = l.n();
    let mut delta = f64::INFINITY;
    for k in 1..n {
        for i in 1..=k {
            let up = l.get(i, k + 1) + l.get(i - 1, k) - l.get(i - 1, k + 1) - l.get(i, k);
            let down = l.get(i, k + 1) + l.get(i, k) - l.get(i + 1, k + 1) - l.get(i - 1, k);
            delta = delta.min(up).min(down);
        }
    }
    ConeGap { delta }
}

fn require_h0(a: &HermitianMatrix) -> Result<GzPattern> {
    let p = gz_actions(a)?;
    let gap = p.gap();
    if a.n() > 1 && gap < H0_THRESHOLD {
        return Err(Error::Domain(format!("matrix is outside H_0 (cone gap {gap:e})")));
    }
    Ok(p)
}

/// Eigenvectors of a block with the first component of every column real and
/// positive.
fn first_row_anchored(a: &HermitianMatrix) -> Result<ComplexMatrix> {
    let mut u = eig_hermitian(a)?.vectors;
    for j in 0..a.n() {
        anchor_column(&mut u, j, 0);
    }
    Ok(u)
}

/// Border eigen-components v^(k) for k = 1..n-1, where v_i is the i-th
/// component of the border row of A^(k+1) in the eigenbasis of A^(k).
pub fn border_components(a: &HermitianMatrix) -> Result<Vec<Vec<C64>>> {
    let n = a.n();
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for k in 1..n {
        let block = a.bottom_right(k + 1);
        let u = first_row_anchored(&a.bottom_right(k))?;
        let scale = 1.0 + block.as_matrix().max_abs();
        let v: Vec<C64> = (0..k).map(|i| (0..k).map(|j| block[(0, j + 1)] * u[(j, i)]).sum()).collect();
        for (i, vi) in v.iter().enumerate() {
            if vi.norm() < 1e-12 * scale {
                return Err(Error::DegenerateBorder { level: k, index: i + 1, modulus: vi.norm() });
            }
        }
        out.push(v);
    }
    Ok(out)
}

/// psi_i^(k) = Arg v_i^(k).
pub fn gz_angles(a: &HermitianMatrix) -> Result<AnglePattern> {
    require_h0(a)?;
    let v = border_components(a)?;
    Ok(AnglePattern { psi: v.iter().map(|l| l.iter().map(|z| reduce_angle(z.arg())).collect()).collect() })
}

/// Actions and angles together.
pub fn action_angle(a: &HermitianMatrix) -> Result<(GzPattern, AnglePattern)> {
    let p = require_h0(a)?;
    let v = border_components(a)?;
    let psi = v.iter().map(|l| l.iter().map(|z| reduce_angle(z.arg())).collect()).collect();
    Ok((p, AnglePattern { psi }))
}

/// Squared border moduli |v_i|^2 for the step from `lower` (k values) to
/// `upper` (k+1 values), evaluated as a product of ratios in log form.
pub fn border_moduli(lower: &[f64], upper: &[f64]) -> Vec<f64> {
    let k = lower.len();
    (0..k)
        .map(|i| {
            let mut s: f64 = upper.iter().map(|mu| (lower[i] - mu).abs().ln()).sum();
            for (j, l) in lower.iter().enumerate() {
                if j != i {
                    s -= (lower[i] - l).abs().ln();
                }
            }
            s.exp()
        })
        .collect()
}

fn strict_levels(p: &GzPattern) -> Result<()> {
    for k in 1..p.n() {
        let (l, u) = (&p.lambda[k - 1], &p.lambda[k]);
        for i in 0..k {
            if !(u[i] > l[i] && l[i] > u[i + 1]) {
                return Err(Error::Domain(format!("interlacing is not strict at level {} index {}", k, i + 1)));
            }
        }
    }
    Ok(())
}

/// Builds the Hermitian matrix with the given actions and angles, one bordering
/// step per level. Eigenvectors of each new block come in closed form, so no
/// eigensolver is involved.
pub fn gz_inverse(p: &GzPattern, a: &AnglePattern) -> Result<HermitianMatrix> {
    let n = p.n();
    if a.n() != n {
        return Err(Error::Argument(format!("angle pattern is for n = {}, pattern for n = {n}", a.n())));
    }
    strict_levels(p)?;
    let mut m = ComplexMatrix::from_fn(1, |_, _| C64::new(p.lambda[0][0], 0.0));
    let mut u = ComplexMatrix::identity(1);
    for k in 1..n {
        let (lower, upper) = (&p.lambda[k - 1], &p.lambda[k]);
        let diag = upper.iter().sum::<f64>() - lower.iter().sum::<f64>();
        let moduli = border_moduli(lower, upper);
        let v: Vec<C64> = moduli.iter().zip(&a.psi[k - 1]).map(|(m2, &psi)| C64::from_polar(m2.sqrt(), psi)).collect();
        let r: Vec<C64> = (0..k).map(|j| (0..k).map(|i| v[i] * u[(j, i)].conj()).sum()).collect();
        let next = ComplexMatrix::from_fn(k + 1, |i, j| match (i, j) {
            (0, 0) => C64::new(diag, 0.0),
            (0, j) => r[j - 1],
            (i, 0) => r[i - 1].conj(),
            (i, j) => m[(i - 1, j - 1)],
        });
        let mut nu = ComplexMatrix::zeros(k + 1);
        for (col, mu) in upper.iter().enumerate() {
            let y: Vec<C64> = (0..k).map(|i| v[i].conj() / (mu - lower[i])).collect();
            let norm = (1.0 + y.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
            nu[(0, col)] = C64::new(1.0 / norm, 0.0);
            for row in 0..k {
                nu[(row + 1, col)] = (0..k).map(|i| u[(row, i)] * y[i]).sum::<C64>() / norm;
            }
        }
        m = next;
        u = nu;
    }
    Ok(HermitianMatrix::from_upper(&m))
}

/// The point of the real symmetric section with the given actions (psi = 0).
pub fn symmetric_section_point(p: &GzPattern) -> Result<HermitianMatrix> {
    gz_inverse(p, &AnglePattern::zeros(p.n()))
}
