//! The Ginzburg-Weinstein map gamma and its scalings gw_t(A) = h^{-1}(gamma(tA)).

use serde::Serialize;

use crate::dual::AnMatrix;
use crate::error::{Error, Result};
use crate::gz::{action_angle, cone_gap, gz_inverse, to_ladder, AnglePattern, ConeGap, GzPattern};
use crate::matrix::{ComplexMatrix, HermitianMatrix, C64};

pub const OVERFLOW_GUARD: f64 = 600.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GwResult {
    pub b: AnMatrix,
    pub gamma: HermitianMatrix,
    pub t: f64,
    pub source_gap: ConeGap,
}

/// gamma(A): the positive definite matrix with actions exp(lambda(A)) and the
/// same angles as A.
pub fn gamma(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let (p, psi) = action_angle(a)?;
    gz_inverse(&p.map(f64::exp), &psi)
}

/// gw_t(A).
pub fn gw(a: &HermitianMatrix, t: f64) -> Result<GwResult> {
    let (p, psi) = action_angle(a)?;
    gw_from_coordinates(&p, &psi, t)
}

/// gw_t of the point with actions `p` and angles `psi`.
pub fn gw_from_coordinates(p: &GzPattern, psi: &AnglePattern, t: f64) -> Result<GwResult> {
    if !(t > 0.0) {
        return Err(Error::Argument(format!("t = {t} must be positive")));
    }
    let bound = t * p.max_abs();
    if bound > OVERFLOW_GUARD {
        return Err(Error::Scale(bound));
    }
    let source_gap = cone_gap(&to_ladder(p));
    let scaled = p.map(|x| t * x);
    let gamma = gz_inverse(&scaled.map(f64::exp), psi)?;
    let b = structured_factor(&gamma, &scaled)?;
    Ok(GwResult { b, gamma, t, source_gap })
}

/// Upper factor of M = gamma(tA) with the pivots taken from the actions:
/// b_jj^2 = det M^(k) / det M^(k-1) = exp(sum t lambda^(k) - sum t lambda^(k-1))
/// for k = n - j + 1. Plain Cholesky recomputes these by subtraction and loses
/// them once the spectrum spreads over many orders of magnitude.
fn structured_factor(m: &HermitianMatrix, scaled: &GzPattern) -> Result<AnMatrix> {
    let n = m.n();
    let level_sum = |k: usize| if k == 0 { 0.0 } else { scaled.lambda[k - 1].iter().sum::<f64>() };
    let mut b = ComplexMatrix::zeros(n);
    for j in (0..n).rev() {
        let k = n - j;
        let d = ((level_sum(k) - level_sum(k - 1)) / 2.0).exp();
        b[(j, j)] = C64::new(d, 0.0);
        for i in (0..j).rev() {
            let mut s = m[(i, j)];
            for l in j + 1..n {
                s -= b[(i, l)] * b[(j, l)].conj();
            }
            b[(i, j)] = s / d;
        }
    }
    AnMatrix::new(b)
}

/// The explicit 2 x 2 formula for A = [[x+y, rho e^{i theta}], [rho e^{-i theta}, x-y]].
pub fn gw_u2_closed_form(x: f64, y: f64, rho: f64, theta: f64, t: f64) -> Result<AnMatrix> {
    if !(rho > 0.0) || !(t > 0.0) {
        return Err(Error::Domain(format!("need rho > 0 and t > 0 (rho = {rho}, t = {t})")));
    }
    let r = (y * y + rho * rho).sqrt();
    // e^{t(x+r)} + e^{t(x-r)} - e^{t(x+y)} - e^{t(x-y)}, factored to avoid cancellation
    let radicand = (t * (x + r)).exp() * (-(-t * (r - y)).exp_m1()) * (-(-t * (r + y)).exp_m1());
    if radicand < -1e-12 {
        return Err(Error::Evaluation(format!("negative radicand {radicand:e}")));
    }
    let corner = C64::from_polar(radicand.max(0.0).sqrt(), theta);
    let m = ComplexMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => C64::new((t * (x + y) / 2.0).exp(), 0.0),
        (0, 1) => corner,
        (1, 1) => C64::new((t * (x - y) / 2.0).exp(), 0.0),
        _ => C64::new(0.0, 0.0),
    });
    AnMatrix::new(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct U2Params {
    pub x: f64,
    pub y: f64,
    pub rho: f64,
    pub theta: f64,
}

impl U2Params {
    pub fn matrix(&self) -> HermitianMatrix {
        HermitianMatrix::from_upper(&ComplexMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => C64::new(self.x + self.y, 0.0),
            (1, 1) => C64::new(self.x - self.y, 0.0),
            _ => C64::from_polar(self.rho, self.theta),
        }))
    }
}

/// Largest entrywise error relative to the largest entry.
pub fn relative_error(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.max_diff(b) / b.max_abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{cluster_chart, corner_minor, flaschka_ratiu, h_map, master_equation_residual};
    use crate::gz::{gz_actions, gz_angles, wrap_angle};
    use crate::sampling::{sample_point, PatternSampler};
    use std::f64::consts::{E, PI};

    fn swap() -> HermitianMatrix {
        HermitianMatrix::from_real_symmetric(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn gamma_of_swap() {
        let s = (E + 1.0 / E - 2.0).sqrt();
        let want = HermitianMatrix::from_real_symmetric(&[vec![E + 1.0 / E - 1.0, s], vec![s, 1.0]]).unwrap();
        assert!(relative_error(gamma(&swap()).unwrap().as_matrix(), want.as_matrix()) < 1e-14);
        let b = gw_u2_closed_form(0.0, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(relative_error(h_map(&b).as_matrix(), want.as_matrix()) < 1e-14);
    }

    #[test]
    fn swap_scaling() {
        for t in [0.5, 1.0, 7.0, 20.0] {
            let b = gw(&swap(), t).unwrap().b;
            let want = ComplexMatrix::from_real(&[vec![1.0, (t / 2.0).exp() - (-t / 2.0).exp()], vec![0.0, 1.0]]).unwrap();
            assert!(relative_error(b.as_matrix(), &want) < 1e-12);
        }
        assert!(matches!(gw(&HermitianMatrix::identity(2), 1.0), Err(Error::Domain(_))));
        assert!(matches!(gw(&swap().scaled(100.0), 10.0), Err(Error::Scale(_))));
    }

    #[test]
    fn closed_form_examples() {
        let b = gw_u2_closed_form(0.0, 0.0, 1.0, 0.0, 1.0).unwrap();
        assert!((b[(0, 1)].re - (E + 1.0 / E - 2.0).sqrt()).abs() < 1e-15);
        let r = gw_u2_closed_form(0.2, 0.1, 0.6, PI / 3.0, 2.0).unwrap();
        let r0 = gw_u2_closed_form(0.2, 0.1, 0.6, 0.0, 2.0).unwrap();
        assert!((r[(0, 1)] - r0[(0, 1)] * C64::from_polar(1.0, PI / 3.0)).norm() < 1e-15);
        assert_eq!(r[(0, 0)], r0[(0, 0)]);
        let b = gw_u2_closed_form(0.0, 0.0, 1.0, 0.0, 20.0).unwrap();
        let z = cluster_chart(&b, 20.0).unwrap();
        assert!((z.zeta(1, 2) - 0.5).abs() <= 1e-8);
        assert!(gw_u2_closed_form(0.0, 0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn numeric_matches_closed_form() {
        let p = U2Params { x: 0.3, y: -0.2, rho: 0.5, theta: 1.2 };
        for t in [1.0, 5.0, 10.0] {
            let b = gw(&p.matrix(), t).unwrap().b;
            let c = gw_u2_closed_form(p.x, p.y, p.rho, p.theta, t).unwrap();
            assert!(relative_error(b.as_matrix(), c.as_matrix()) < 1e-12);
        }
    }

    fn samples(n: usize, delta: f64, count: u64, seed: u64) -> Vec<HermitianMatrix> {
        (0..count).map(|i| sample_point(n, delta, PatternSampler::Interlacing, seed, i).unwrap().matrix).collect()
    }

    #[test]
    fn gamma_properties() {
        for (idx, a) in samples(3, 0.2, 100, 11).iter().enumerate() {
            let g = gamma(a).unwrap();
            // actions intertwined, angles preserved
            let pa = gz_actions(a).unwrap();
            assert!(gz_actions(&g).unwrap().map(f64::ln).max_diff(&pa) < 1e-9);
            assert!(gz_angles(&g).unwrap().max_diff(&gz_angles(a).unwrap()) < 1e-9);
            let u = -1.0 + 2.0 * (idx as f64) / 99.0;
            let shifted = gamma(&a.shifted(u)).unwrap();
            assert!(relative_error(shifted.as_matrix(), g.scaled(u.exp()).as_matrix()) < 1e-9);
            let conj = gamma(&a.conj()).unwrap();
            assert!(relative_error(conj.as_matrix(), g.conj().as_matrix()) < 1e-9);
        }
    }

    #[test]
    fn symmetric_section_maps_to_real() {
        for i in 0..100 {
            let s = sample_point(3, 0.2, PatternSampler::Interlacing, 12, i).unwrap();
            let a = crate::gz::symmetric_section_point(&s.pattern).unwrap();
            let g = gamma(&a).unwrap();
            assert!(g.as_matrix().rows().iter().flatten().all(|z| z.im == 0.0));
            let b = gw(&a, 5.0).unwrap().b;
            assert!(b.is_real(0.0));
        }
    }

    #[test]
    fn fr_recovers_ladder() {
        for n in 2..=4 {
            for (i, a) in samples(n, 0.3, 200 / 3 + 1, 13 + n as u64).iter().enumerate() {
                let l = to_ladder(&gz_actions(a).unwrap());
                for t in [1.0, 5.0, 10.0] {
                    let b = gw(a, t).unwrap().b;
                    let err = flaschka_ratiu(&b, t).max_diff(&l);
                    assert!(err <= 1e-8, "n={n} sample {i} t={t}: {err:e}");
                }
            }
        }
    }

    #[test]
    fn torus_equivariance() {
        for (idx, a) in samples(3, 0.3, 20, 14).iter().enumerate() {
            let th = [0.3 * idx as f64, 1.1, -0.7];
            let u = ComplexMatrix::from_fn(3, |i, j| if i == j { C64::from_polar(1.0, th[i]) } else { C64::new(0.0, 0.0) });
            let b0 = gw(a, 5.0).unwrap().b;
            let b1 = gw(&a.conjugate_by(&u), 5.0).unwrap().b;
            for k in 1..=3 {
                for i in 1..=k {
                    let (d0, d1) = (corner_minor(&b0, i, k).unwrap(), corner_minor(&b1, i, k).unwrap());
                    assert!((d0.norm() - d1.norm()).abs() <= 1e-8 * d0.norm());
                    // rows n-k+1..n-k+i, columns n-i+1..n pick up the phase
                    // sum of row angles minus sum of column angles
                    let shift: f64 = (3 - k..3 - k + i).map(|r| th[r]).sum::<f64>() - (3 - i..3).map(|c| th[c]).sum::<f64>();
                    assert!(wrap_angle(d1.arg() - d0.arg() - shift).abs() < 1e-8, "{i} {k}");
                }
            }
        }
    }

    #[test]
    fn master_equations_on_gw() {
        for n in 2..=4 {
            for a in samples(n, 0.3, 20, 15) {
                let l = to_ladder(&gz_actions(&a).unwrap());
                for t in [1.0, 4.0, 10.0] {
                    let b = gw(&a, t).unwrap().b;
                    assert!(master_equation_residual(&b, t, &l).unwrap() <= 1e-9);
                }
            }
        }
    }
}
