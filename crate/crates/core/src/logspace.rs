//! Log-domain evaluation of network minors and Flaschka-Ratiu coordinates for
//! weights large enough to overflow a dense matrix.

use num_complex::Complex64;

use crate::dual::log_sum_exp;
use crate::error::{Error, Result};
use crate::gz::LadderVector;
use crate::tropical::{MinorTable, PositiveLaurentPoly};

/// ln of a nonzero complex number, split into modulus and phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub ln_abs: f64,
    pub arg: f64,
}

/// Evaluates p at variables exp(ln_mod + i phase).
pub fn eval_log(p: &PositiveLaurentPoly, ln_mod: &[f64], phase: &[f64]) -> LogComplex {
    let terms: Vec<(f64, f64)> = p
        .monomials
        .iter()
        .map(|m| {
            let lm = m.coefficient.ln() + m.exponents.iter().zip(ln_mod).map(|(&e, &l)| e as f64 * l).sum::<f64>();
            let ph = m.exponents.iter().zip(phase).map(|(&e, &f)| e as f64 * f).sum::<f64>();
            (lm, ph)
        })
        .collect();
    let top = terms.iter().map(|t| t.0).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return LogComplex { ln_abs: f64::NEG_INFINITY, arg: 0.0 };
    }
    let s: Complex64 = terms.iter().map(|&(lm, ph)| Complex64::from_polar((lm - top).exp(), ph)).sum();
    LogComplex { ln_abs: top + s.norm().ln(), arg: s.arg() }
}

/// ln e_i^(k) for i = 0..=k and every level k; e_i^(k) is the sum of squared
/// moduli of the i x i minors of the bottom-right k x k block.
pub fn log_elementary(table: &MinorTable, ln_mod: &[f64], phase: &[f64]) -> Vec<Vec<f64>> {
    table
        .entries
        .iter()
        .map(|level| {
            let mut row = vec![0.0];
            for list in level {
                let sq: Vec<f64> = list.iter().map(|(_, _, p)| 2.0 * eval_log(p, ln_mod, phase).ln_abs).collect();
                row.push(log_sum_exp(&sq));
            }
            row
        })
        .collect()
}

/// ln of the roots, descending, of sum_i (-1)^i e_i x^(k-i) given ln e_0..ln e_k.
/// Newton iteration with Maehly deflation, carried out on s = ln x.
pub fn log_roots(ln_e: &[f64]) -> Result<Vec<f64>> {
    let k = ln_e.len() - 1;
    if ln_e.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation("elementary symmetric function vanishes".into()));
    }
    let mut found: Vec<f64> = Vec::with_capacity(k);
    for j in 0..k {
        let mut s = ln_e[j + 1] - ln_e[j];
        for _ in 0..200 {
            let terms: Vec<f64> = (0..=k).map(|i| ln_e[i] + (k - i) as f64 * s).collect();
            let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sign = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
            let p: f64 = (0..=k).map(|i| sign(i) * (terms[i] - top).exp()).sum();
            let xp: f64 = (0..=k).map(|i| sign(i) * (k - i) as f64 * (terms[i] - top).exp()).sum();
            let deflate: f64 = found.iter().map(|&f| 1.0 / (1.0 - (f - s).exp())).sum();
            let q = p / xp;
            let step = q / (1.0 - q * deflate);
            if !step.is_finite() {
                break;
            }
            if step.abs() < 1e-16 {
                break;
            }
            s = if step < 1.0 { s + (-step).ln_1p() } else { s - 5.0 };
        }
        if !s.is_finite() {
            return Err(Error::NoConvergence { sweeps: 200, residual: f64::NAN });
        }
        found.push(s);
    }
    found.sort_by(|a, b| b.total_cmp(a));
    Ok(found)
}

/// Flaschka-Ratiu coordinates of the factorization with x = e^(t w_x) and
/// z = e^(t w_z + i phi), evaluated without forming the matrix.
pub fn log_flaschka_ratiu(table: &MinorTable, w: &[f64], phi: &[f64], t: f64) -> Result<LadderVector> {
    let n = table.word.n;
    if w.len() != table.word.variables() || phi.len() != table.word.len() {
        return Err(Error::Argument("weight or phase vector has the wrong length".into()));
    }
    if !(t > 0.0) {
        return Err(Error::Domain("t must be positive".into()));
    }
    let ln_mod: Vec<f64> = w.iter().map(|v| t * v).collect();
    let phase: Vec<f64> = std::iter::repeat_n(0.0, n).chain(phi.iter().cloned()).collect();
    let ell = log_elementary(table, &ln_mod, &phase)
        .iter()
        .map(|ln_e| {
            let roots = log_roots(ln_e)?;
            Ok(roots
                .iter()
                .scan(0.0, |acc, r| {
                    *acc += r;
                    Some(*acc / t)
                })
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(LadderVector { ell })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::flaschka_ratiu;
    use crate::matrix::C64;
    use crate::tropical::{matrix_factorization, Word};
    use proptest::prelude::*;

    #[test]
    fn roots_of_known_polynomial() {
        // (x - 100)(x - 2)(x - 0.5): e1 = 102.5, e2 = 200 + 50 + 1, e3 = 100
        let ln_e = [0.0, 102.5f64.ln(), 251.0f64.ln(), 100.0f64.ln()];
        let r = log_roots(&ln_e).unwrap();
        for (a, b) in r.iter().zip([100.0f64, 2.0, 0.5]) {
            assert!((a - b.ln()).abs() < 1e-13);
        }
    }

    #[test]
    fn huge_weights_stay_finite() {
        let table = MinorTable::new(&Word::standard(3)).unwrap();
        let w = [0.55, -1.1, 2.2, -4.4, 8.8, 17.6];
        let l = log_flaschka_ratiu(&table, &w, &[0.3, 1.0, 2.0], 20.0).unwrap();
        assert!(l.flat().iter().all(|v| v.is_finite()));
        assert!(l.max_diff(&table.tropical_gz(&w)) < 1e-3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn matches_dense_evaluation(n in 2usize..=4, w in prop::collection::vec(-1.0f64..1.0, 10), phi in prop::collection::vec(0.0f64..std::f64::consts::TAU, 6), t in 0.5f64..3.0) {
            let word = Word::standard(n);
            let table = MinorTable::new(&word).unwrap();
            let w = &w[..word.variables()];
            let phi = &phi[..word.len()];
            let x: Vec<f64> = w[..n].iter().map(|v| (t * v).exp()).collect();
            let z: Vec<C64> = w[n..].iter().zip(phi).map(|(v, &f)| C64::from_polar((t * v).exp(), f)).collect();
            let b = matrix_factorization(&word, &x, &z).unwrap();
            let dense = flaschka_ratiu(&b, t);
            let logd = log_flaschka_ratiu(&table, w, phi, t).unwrap();
            prop_assert!(dense.max_diff(&logd) < 1e-8, "{:?} vs {:?}", dense, logd);
        }
    }
}
