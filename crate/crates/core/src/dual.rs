//! Upper triangular matrices with positive diagonal (the dual group AN):
//! the map b -> bb*, corner minors, the polar chart, Flaschka-Ratiu actions,
//! sign chambers and the Cauchy-Binet identities.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gz::{reduce_angle, LadderVector};
use crate::matrix::{det, singular_values, upper_cholesky, ComplexMatrix, HermitianMatrix, C64};

/// Moduli below this are treated as zero by the chart.
pub const VANISHING_MINOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct AnMatrix {
    m: ComplexMatrix,
}

impl AnMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let n = m.n();
        let mut m = m;
        for i in 0..n {
            for j in 0..i {
                if m[(i, j)] != C64::new(0.0, 0.0) {
                    return Err(Error::Argument(format!("entry ({},{}) below the diagonal is nonzero", i + 1, j + 1)));
                }
            }
            let d = m[(i, i)];
            if !(d.re > 0.0) || d.im.abs() > 1e-14 * d.re {
                return Err(Error::Argument(format!("diagonal entry {} is not real positive", i + 1)));
            }
            m[(i, i)] = C64::new(d.re, 0.0);
        }
        if !m.is_finite() {
            return Err(Error::Argument("non-finite entry".into()));
        }
        Ok(Self { m })
    }

    pub fn identity(n: usize) -> Self {
        Self { m: ComplexMatrix::identity(n) }
    }

    pub fn n(&self) -> usize {
        self.m.n()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.m.rows().iter().flatten().all(|z| z.im.abs() <= tol * (1.0 + z.re.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for AnMatrix {
    type Output = C64;
    fn index(&self, ij: (usize, usize)) -> &C64 {
        &self.m[ij]
    }
}

pub fn h_map(b: &AnMatrix) -> HermitianMatrix {
    HermitianMatrix::from_upper(&b.m.mul(&b.m.adjoint()))
}

pub fn h_inverse(m: &HermitianMatrix) -> Result<AnMatrix> {
    AnMatrix::new(upper_cholesky(m)?)
}

/// 0-based rows and columns of the corner minor (i, k): rows n-k+1..n-k+i and
/// the last i columns.
pub fn corner_indices(n: usize, i: usize, k: usize) -> (Vec<usize>, Vec<usize>) {
    ((n - k..n - k + i).collect(), (n - i..n).collect())
}

pub fn corner_minor(b: &AnMatrix, i: usize, k: usize) -> Result<C64> {
    let n = b.n();
    if i == 0 || i > k || k > n {
        return Err(Error::Argument(format!("corner minor ({i},{k}) needs 1 <= i <= k <= {n}")));
    }
    let (rows, cols) = corner_indices(n, i, k);
    Ok(det(&b.m.select(&rows, &cols)))
}

/// Chart values: Delta_i^(k) = exp(t zeta_i^(k) + i phi_i^(k)); phi is stored
/// for i < k only (phi[k-1] has k-1 entries).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterPoint {
    pub zeta: Vec<Vec<f64>>,
    pub phi: Vec<Vec<f64>>,
    pub t: f64,
}

impl ClusterPoint {
    pub fn zeta(&self, i: usize, k: usize) -> f64 {
        self.zeta[k - 1][i - 1]
    }

    pub fn phi(&self, i: usize, k: usize) -> f64 {
        if i == k {
            0.0
        } else {
            self.phi[k - 1][i - 1]
        }
    }

    pub fn minor(&self, i: usize, k: usize) -> C64 {
        C64::from_polar((self.t * self.zeta(i, k)).exp(), self.phi(i, k))
    }
}

pub fn cluster_chart(b: &AnMatrix, t: f64) -> Result<ClusterPoint> {
    if !(t > 0.0) {
        return Err(Error::Argument(format!("t = {t} must be positive")));
    }
    let n = b.n();
    let mut zeta = Vec::with_capacity(n);
    let mut phi = Vec::with_capacity(n);
    for k in 1..=n {
        let mut z = Vec::with_capacity(k);
        let mut p = Vec::with_capacity(k - 1);
        for i in 1..=k {
            let d = corner_minor(b, i, k)?;
            if d.norm() < VANISHING_MINOR {
                return Err(Error::VanishingMinor { i, k });
            }
            z.push(d.norm().ln() / t);
            if i < k {
                p.push(reduce_angle(d.arg()));
            }
        }
        zeta.push(z);
        phi.push(p);
    }
    Ok(ClusterPoint { zeta, phi, t })
}

/// (1/t) sum_{j<=i} ln lambda_j^(k)(bb*). Eigenvalues of (bb*)^(k) are the
/// squared singular values of the block b^(k), which one-sided Jacobi
/// resolves to relative accuracy.
pub fn flaschka_ratiu(b: &AnMatrix, t: f64) -> LadderVector {
    let n = b.n();
    let ell = (1..=n)
        .map(|k| {
            let s = singular_values(&b.m.bottom_right(k));
            s.iter()
                .scan(0.0, |acc, x| {
                    *acc += 2.0 * x.ln() / t;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    LadderVector { ell }
}

/// Signs of the non-principal corner minors; signs[k-1][i-1] for i < k.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ChamberSign {
    pub signs: Vec<Vec<i8>>,
}

impl ChamberSign {
    pub fn flat(&self) -> Vec<i8> {
        self.signs.iter().flatten().copied().collect()
    }
}

pub fn chamber_of(b: &AnMatrix) -> Result<ChamberSign> {
    let n = b.n();
    let mut signs = Vec::with_capacity(n);
    for k in 1..=n {
        let mut row = Vec::with_capacity(k - 1);
        for i in 1..k {
            let d = corner_minor(b, i, k)?;
            if d.im.abs() > 1e-10 * (1.0 + d.re.abs()) {
                return Err(Error::Domain(format!("minor ({i},{k}) is not real")));
            }
            if d.norm() < VANISHING_MINOR {
                return Err(Error::VanishingMinor { i, k });
            }
            row.push(if d.re > 0.0 { 1 } else { -1 });
        }
        signs.push(row);
    }
    Ok(ChamberSign { signs })
}

pub fn is_totally_positive(b: &AnMatrix) -> Result<bool> {
    Ok(chamber_of(b)?.flat().iter().all(|&s| s > 0))
}

/// All subsets of `items` of size `size`.
pub fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    fn rec(items: &[usize], size: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for idx in start..items.len() {
            cur.push(items[idx]);
            rec(items, size, idx + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = vec![];
    rec(items, size, 0, &mut vec![], &mut out);
    out
}

/// ln sum exp(x_i), with the largest term factored out.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Largest relative residual of the Cauchy-Binet identities
/// sum_{|I|=j} exp(t L_I(ell^(k))) = sum_{|I|=|J|=j} |Delta_{I,J}(b)|^2 over the
/// bottom-right k x k blocks.
pub fn master_equation_residual(b: &AnMatrix, t: f64, l: &LadderVector) -> Result<f64> {
    let n = b.n();
    if n > 6 {
        return Err(Error::Unsupported(format!("subset enumeration for n = {n} > 6")));
    }
    if l.n() != n {
        return Err(Error::Argument("ladder and matrix sizes differ".into()));
    }
    let mut worst: f64 = 0.0;
    for k in 1..=n {
        let lambda: Vec<f64> = (1..=k).map(|i| l.get(i, k) - l.get(i - 1, k)).collect();
        let idx: Vec<usize> = (0..k).collect();
        let block: Vec<usize> = (n - k..n).collect();
        for j in 1..=k {
            let lhs: Vec<f64> = subsets(&idx, j).iter().map(|s| t * s.iter().map(|&i| lambda[i]).sum::<f64>()).collect();
            let sets = subsets(&block, j);
            let mut rhs = Vec::with_capacity(sets.len() * sets.len());
            for rows in &sets {
                for cols in &sets {
                    let d = det(&b.m.select(rows, cols)).norm();
                    if d > 0.0 {
                        rhs.push(2.0 * d.ln());
                    }
                }
            }
            let r = (log_sum_exp(&lhs) - log_sum_exp(&rhs)).exp_m1().abs();
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

/// Relative gap between tr(bb*) and the n = 3, j = 1, k = 3 identity written
/// in chart coordinates.
pub fn trace_identity_residual(b: &AnMatrix, t: f64) -> Result<f64> {
    if b.n() != 3 {
        return Err(Error::Argument("the identity is stated for n = 3".into()));
    }
    let c = cluster_chart(b, t)?;
    let z = |i, k| c.zeta(i, k);
    let e = |x: f64| (t * x).exp();
    let rhs = e(2.0 * z(1, 3))
        + e(2.0 * z(1, 2))
        + e(2.0 * z(1, 1))
        + e(2.0 * (z(2, 2) - z(1, 1)))
        + e(2.0 * (z(3, 3) - z(2, 2)))
        + e(2.0 * (z(2, 3) - z(1, 2)))
        + e(2.0 * (z(1, 3) + z(2, 2) - z(1, 2) - z(1, 1)))
        + 2.0 * e(z(2, 3) - z(1, 1) + z(1, 3) + z(2, 2) - 2.0 * z(1, 2)) * (c.phi(2, 3) - c.phi(1, 3)).cos();
    let lhs = h_map(b).trace();
    Ok((lhs - rhs).abs() / lhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::eigenvalues;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn an(rows: &[Vec<f64>]) -> AnMatrix {
        AnMatrix::new(ComplexMatrix::from_real(rows).unwrap()).unwrap()
    }

    pub(crate) fn random_an(n: usize, vals: &[f64]) -> AnMatrix {
        let mut it = vals.iter().cycle();
        let m = ComplexMatrix::from_fn(n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => C64::new(*it.next().unwrap(), *it.next().unwrap()),
            std::cmp::Ordering::Equal => C64::new(0.3 + it.next().unwrap().abs(), 0.0),
            std::cmp::Ordering::Greater => C64::new(0.0, 0.0),
        });
        AnMatrix::new(m).unwrap()
    }

    #[test]
    fn h_examples() {
        let b = an(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let m = h_map(&b);
        assert_eq!(m, HermitianMatrix::from_real_symmetric(&[vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap());
        assert_eq!(h_map(&AnMatrix::identity(3)), HermitianMatrix::identity(3));
        assert!(h_inverse(&m).unwrap().as_matrix().max_diff(b.as_matrix()) < 1e-14);
    }

    #[test]
    fn corner_examples() {
        let b = an(&[vec![1.0, 2.0], vec![0.0, 3.0]]);
        assert_eq!(corner_minor(&b, 1, 1).unwrap(), C64::new(3.0, 0.0));
        assert_eq!(corner_minor(&b, 1, 2).unwrap(), C64::new(2.0, 0.0));
        assert_eq!(corner_minor(&b, 2, 2).unwrap(), C64::new(3.0, 0.0));
        let id = AnMatrix::identity(3);
        for k in 1..=3 {
            for i in 1..k {
                assert_eq!(corner_minor(&id, i, k).unwrap(), C64::new(0.0, 0.0));
            }
            assert_eq!(corner_minor(&id, k, k).unwrap(), C64::new(1.0, 0.0));
        }
        assert!(corner_minor(&id, 3, 2).is_err());
    }

    #[test]
    fn three_letter_factorization_minor() {
        let (x1, x2, x3, z1, z2, z3) = (1.3, 0.7, 2.1, 0.4, 1.9, 0.8);
        let b = an(&[vec![x1, x1 * (z1 + z3), x1 * z1 * z2], vec![0.0, x2, x2 * z2], vec![0.0, 0.0, x3]]);
        let d = corner_minor(&b, 2, 3).unwrap();
        assert!((d.re - x1 * x2 * z2 * z3).abs() < 1e-12);
    }

    #[test]
    fn chart_examples() {
        let b = an(&[vec![1.0, 2.0], vec![0.0, 3.0]]);
        let c = cluster_chart(&b, 1.0).unwrap();
        assert!((c.zeta(1, 1) - 3f64.ln()).abs() < 1e-15);
        assert!((c.zeta(1, 2) - 2f64.ln()).abs() < 1e-15);
        assert!((c.zeta(2, 2) - 3f64.ln()).abs() < 1e-15);
        assert_eq!(c.phi(1, 2), 0.0);
        let c2 = cluster_chart(&b, 2.0).unwrap();
        assert!((c2.zeta(1, 2) - c.zeta(1, 2) / 2.0).abs() < 1e-15);
        let neg = an(&[vec![1.0, -2.0], vec![0.0, 3.0]]);
        assert!((cluster_chart(&neg, 1.0).unwrap().phi(1, 2) - PI).abs() < 1e-15);
        assert!(matches!(cluster_chart(&AnMatrix::identity(2), 1.0), Err(Error::VanishingMinor { i: 1, k: 2 })));
    }

    #[test]
    fn flaschka_ratiu_examples() {
        let fr = flaschka_ratiu(&AnMatrix::identity(3), 2.0);
        assert!(fr.flat().iter().all(|&x| x.abs() < 1e-15));
        let fr = flaschka_ratiu(&an(&[vec![1.0, 1.0], vec![0.0, 1.0]]), 1.0);
        assert!((fr.get(1, 2) - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-14);
        assert!(fr.get(2, 2).abs() < 1e-14 && fr.get(1, 1).abs() < 1e-15);
    }

    #[test]
    fn chamber_examples() {
        let b = an(&[vec![1.0, 0.5], vec![0.0, 2.0]]);
        assert_eq!(chamber_of(&b).unwrap().flat(), vec![1]);
        assert!(is_totally_positive(&b).unwrap());
        let b = an(&[vec![1.0, -0.5], vec![0.0, 2.0]]);
        assert_eq!(chamber_of(&b).unwrap().flat(), vec![-1]);
        let c = AnMatrix::new(ComplexMatrix::from_parts(&[vec![1.0, 0.5], vec![0.0, 1.0]], &[vec![0.0, 0.5], vec![0.0, 0.0]]).unwrap())
            .unwrap();
        assert!(chamber_of(&c).is_err());
    }

    #[test]
    fn master_equation_trace_case() {
        let b = an(&[vec![1.0, 1.0], vec![0.0, 1.0]]);
        let l = flaschka_ratiu(&b, 1.0);
        assert!(master_equation_residual(&b, 1.0, &l).unwrap() < 1e-14);
    }

    #[test]
    fn an_validation() {
        assert!(AnMatrix::new(ComplexMatrix::from_real(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap()).is_err());
        assert!(AnMatrix::new(ComplexMatrix::from_real(&[vec![-1.0, 0.0], vec![0.0, 1.0]]).unwrap()).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn h_round_trip(n in 1usize..=5, vals in prop::collection::vec(-2.0f64..2.0, 40)) {
            let b = random_an(n, &vals);
            let back = h_inverse(&h_map(&b)).unwrap();
            prop_assert!(back.as_matrix().max_diff(b.as_matrix()) <= 1e-10 * (1.0 + b.as_matrix().max_abs()));
        }

        #[test]
        fn chart_reconstructs_minors(n in 2usize..=5, vals in prop::collection::vec(-2.0f64..2.0, 40), t in 0.5f64..10.0) {
            let b = random_an(n, &vals);
            let c = cluster_chart(&b, t).unwrap();
            for k in 1..=n {
                for i in 1..=k {
                    let d = corner_minor(&b, i, k).unwrap();
                    prop_assert!((c.minor(i, k) - d).norm() <= 1e-10 * d.norm());
                }
            }
        }

        #[test]
        fn principal_minors_are_diagonal_products(n in 1usize..=5, vals in prop::collection::vec(-2.0f64..2.0, 40)) {
            let b = random_an(n, &vals);
            for k in 1..=n {
                let p: f64 = (n - k..n).map(|j| b[(j, j)].re).product();
                let d = corner_minor(&b, k, k).unwrap();
                prop_assert!((d.re - p).abs() <= 1e-12 * p && d.im.abs() <= 1e-12 * p);
            }
        }

        #[test]
        fn blocks_of_gram_are_gram_of_blocks(n in 1usize..=5, vals in prop::collection::vec(-2.0f64..2.0, 40)) {
            let b = random_an(n, &vals);
            let m = h_map(&b);
            for k in 1..=n {
                let blk = b.as_matrix().bottom_right(k);
                prop_assert!(m.as_matrix().bottom_right(k).max_diff(&blk.mul(&blk.adjoint())) <= 1e-12 * (1.0 + m.as_matrix().max_abs()));
            }
        }

        #[test]
        fn fr_matches_dense_eigenvalues(n in 1usize..=4, vals in prop::collection::vec(-2.0f64..2.0, 40), t in 0.5f64..5.0) {
            let b = random_an(n, &vals);
            let fr = flaschka_ratiu(&b, t);
            let m = h_map(&b);
            for k in 1..=n {
                let ev = eigenvalues(&m.bottom_right(k)).unwrap();
                let mut acc = 0.0;
                for i in 1..=k {
                    acc += ev[i - 1].ln() / t;
                    prop_assert!((fr.get(i, k) - acc).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn trace_identity(vals in prop::collection::vec(-2.0f64..2.0, 40), t in 0.5f64..5.0) {
            let b = random_an(3, &vals);
            prop_assert!(trace_identity_residual(&b, t).unwrap() <= 1e-9);
        }

        #[test]
        fn master_equations_hold_for_any_b(n in 1usize..=4, vals in prop::collection::vec(-2.0f64..2.0, 40), t in 0.5f64..10.0) {
            let b = random_an(n, &vals);
            let l = flaschka_ratiu(&b, t);
            prop_assert!(master_equation_residual(&b, t, &l).unwrap() <= 1e-9);
        }
    }
}
