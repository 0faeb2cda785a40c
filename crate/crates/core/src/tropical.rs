//! Reduced words, matrix factorizations, planar networks, Lindstrom minors
//! and the tropical Gelfand-Zeitlin map.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::dual::{subsets, AnMatrix};
use crate::error::{Error, Result};
use crate::gz::{cone_gap, LadderVector};
use crate::matrix::{ComplexMatrix, C64};
use crate::sampling::REJECTION_BUDGET;

/// A word in the simple transpositions s_1..s_{n-1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Word {
    pub n: usize,
    pub letters: Vec<usize>,
}

impl Word {
    pub fn new(n: usize, letters: Vec<usize>) -> Result<Self> {
        if n < 1 || letters.iter().any(|&l| l == 0 || l >= n) {
            return Err(Error::Argument(format!("letters must lie in 1..{}", n.saturating_sub(1))));
        }
        Ok(Self { n, letters })
    }

    /// (1, ..., n-1, 1, ..., n-2, ..., 1, 2, 1).
    pub fn standard(n: usize) -> Self {
        let letters = (1..n).rev().flat_map(|top| 1..=top).collect();
        Self { n, letters }
    }

    /// The product s_{i1} ... s_{ik} has as many inversions as letters.
    pub fn is_reduced(&self) -> bool {
        let mut perm: Vec<usize> = (0..self.n).collect();
        for &l in &self.letters {
            perm.swap(l - 1, l);
        }
        let inversions = (0..self.n).flat_map(|i| (i + 1..self.n).map(move |j| (i, j))).filter(|&(i, j)| perm[i] > perm[j]).count();
        inversions == self.letters.len()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// Number of variables: n horizontal weights then one per letter.
    pub fn variables(&self) -> usize {
        self.n + self.letters.len()
    }
}

/// diag(x) e_{i1}(z_1) ... e_{ik}(z_k), e_i(z) = I + z E_{i,i+1}.
pub fn matrix_factorization(word: &Word, x: &[f64], z: &[C64]) -> Result<AnMatrix> {
    if x.len() != word.n || z.len() != word.len() {
        return Err(Error::Argument(format!("need {} x and {} z values", word.n, word.len())));
    }
    if x.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("x must be positive".into()));
    }
    let n = word.n;
    let mut m = ComplexMatrix::from_fn(n, |i, j| if i == j { C64::new(x[i], 0.0) } else { C64::new(0.0, 0.0) });
    for (&l, &zj) in word.letters.iter().zip(z) {
        // right multiplication by e_l(z) adds z * column l to column l+1
        for r in 0..n {
            let v = m[(r, l - 1)];
            m[(r, l)] += v * zj;
        }
    }
    AnMatrix::new(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EdgeKind {
    HorizontalSource,
    Crossing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub id: usize,
    pub kind: EdgeKind,
    /// Index into the variable vector (x_1..x_n, z_1..z_m).
    pub variable: usize,
    /// (line, position) of the tail and head; positions count crossings.
    pub from: (usize, usize),
    pub to: (usize, usize),
}

/// Wiring diagram of a factorization: n horizontal lines, sources weighted by
/// x, and one upward step per letter weighted by z.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlanarNetwork {
    pub n: usize,
    pub word: Word,
    pub edges: Vec<Edge>,
}

impl PlanarNetwork {
    pub fn new(word: &Word) -> Self {
        let n = word.n;
        let mut edges: Vec<Edge> =
            (0..n).map(|i| Edge { id: i, kind: EdgeKind::HorizontalSource, variable: i, from: (i + 1, 0), to: (i + 1, 0) }).collect();
        for (j, &l) in word.letters.iter().enumerate() {
            edges.push(Edge { id: n + j, kind: EdgeKind::Crossing, variable: n + j, from: (l, j + 1), to: (l + 1, j + 1) });
        }
        Self { n, word: word.clone(), edges }
    }

    /// Exponent vectors of the vertex-disjoint path families from sources I to
    /// sinks J (1-based, sorted).
    fn multipaths(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<i32>> {
        let nv = self.word.variables();
        let mut out = vec![];
        let mut lines: Vec<usize> = rows.to_vec();
        let mut exps = vec![0i32; nv];
        for &r in rows {
            exps[r - 1] += 1;
        }
        self.walk(0, &mut lines, &mut exps, cols, &mut out);
        out
    }

    fn walk(&self, pos: usize, lines: &mut Vec<usize>, exps: &mut Vec<i32>, cols: &[usize], out: &mut Vec<Vec<i32>>) {
        if pos == self.word.len() {
            if lines.as_slice() == cols {
                out.push(exps.clone());
            }
            return;
        }
        // a path that has passed its sink cannot come back down
        if lines.iter().zip(cols).any(|(l, c)| l > c) {
            return;
        }
        let l = self.word.letters[pos];
        self.walk(pos + 1, lines, exps, cols, out);
        if let Some(p) = lines.iter().position(|&x| x == l) {
            if !lines.contains(&(l + 1)) {
                lines[p] = l + 1;
                exps[self.n + pos] += 1;
                self.walk(pos + 1, lines, exps, cols, out);
                exps[self.n + pos] -= 1;
                lines[p] = l;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Monomial {
    pub coefficient: f64,
    pub exponents: Vec<i32>,
}

/// Sum of monomials with positive coefficients and distinct exponents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositiveLaurentPoly {
    pub variables: usize,
    pub monomials: Vec<Monomial>,
}

impl PositiveLaurentPoly {
    fn from_exponents(variables: usize, exps: Vec<Vec<i32>>) -> Self {
        let mut merged: BTreeMap<Vec<i32>, f64> = BTreeMap::new();
        for e in exps {
            *merged.entry(e).or_insert(0.0) += 1.0;
        }
        Self { variables, monomials: merged.into_iter().map(|(exponents, coefficient)| Monomial { coefficient, exponents }).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Evaluation at vars = (x, z).
    pub fn eval(&self, vars: &[C64]) -> C64 {
        self.monomials
            .iter()
            .map(|m| m.exponents.iter().zip(vars).fold(C64::new(m.coefficient, 0.0), |acc, (&e, &v)| acc * v.powi(e)))
            .sum()
    }
}

pub fn minor_polynomial(network: &PlanarNetwork, rows: &[usize], cols: &[usize]) -> Result<PositiveLaurentPoly> {
    let n = network.n;
    if rows.len() != cols.len() || rows.is_empty() {
        return Err(Error::Argument("index sets must have equal nonzero size".into()));
    }
    let valid = |s: &[usize]| s.windows(2).all(|w| w[0] < w[1]) && s.iter().all(|&i| (1..=n).contains(&i));
    if !valid(rows) || !valid(cols) {
        return Err(Error::Argument(format!("index sets must be increasing within 1..{n}")));
    }
    Ok(PositiveLaurentPoly::from_exponents(network.word.variables(), network.multipaths(rows, cols)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AffineForm {
    /// ln of the coefficient; kept but not used by `eval`.
    pub offset: f64,
    pub gradient: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TropicalPoly {
    pub forms: Vec<AffineForm>,
}

impl TropicalPoly {
    pub fn eval(&self, w: &[f64]) -> f64 {
        self.forms.iter().map(|f| dot(&f.gradient, w)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Forms attaining the maximum within `tol`.
    pub fn argmax(&self, w: &[f64], tol: f64) -> Vec<usize> {
        let best = self.eval(w);
        (0..self.forms.len()).filter(|&i| dot(&self.forms[i].gradient, w) >= best - tol).collect()
    }
}

pub fn dot(e: &[i32], w: &[f64]) -> f64 {
    e.iter().zip(w).map(|(&a, &b)| a as f64 * b).sum()
}

pub fn tropicalize(p: &PositiveLaurentPoly) -> Result<TropicalPoly> {
    if p.is_zero() {
        return Err(Error::Domain("the zero polynomial has no tropicalization".into()));
    }
    let mut merged: BTreeMap<Vec<i32>, f64> = BTreeMap::new();
    for m in &p.monomials {
        *merged.entry(m.exponents.clone()).or_insert(0.0) += m.coefficient;
    }
    Ok(TropicalPoly { forms: merged.into_iter().map(|(gradient, c)| AffineForm { offset: c.ln(), gradient }).collect() })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TropicalPoint {
    /// Weights of x_1..x_n then z_1..z_m.
    pub w: Vec<f64>,
}

/// Nonzero minors of the bottom-right blocks, grouped by (k, i).
#[derive(Debug, Clone)]
pub struct MinorTable {
    pub word: Word,
    pub network: PlanarNetwork,
    /// entries[k-1][i-1] lists (rows, cols, polynomial) over I, J in the block.
    pub entries: Vec<Vec<Vec<(Vec<usize>, Vec<usize>, PositiveLaurentPoly)>>>,
}

impl MinorTable {
    pub fn new(word: &Word) -> Result<Self> {
        if !word.is_reduced() {
            return Err(Error::Domain("word is not reduced".into()));
        }
        let n = word.n;
        let network = PlanarNetwork::new(word);
        let mut entries = Vec::with_capacity(n);
        for k in 1..=n {
            let block: Vec<usize> = (n - k + 1..=n).collect();
            let mut level = Vec::with_capacity(k);
            for i in 1..=k {
                let mut list = vec![];
                for rows in subsets(&block, i) {
                    for cols in subsets(&block, i) {
                        let p = minor_polynomial(&network, &rows, &cols)?;
                        if !p.is_zero() {
                            list.push((rows.clone(), cols, p));
                        }
                    }
                }
                level.push(list);
            }
            entries.push(level);
        }
        Ok(Self { word: word.clone(), network, entries })
    }

    pub fn corner(&self, i: usize, k: usize) -> &PositiveLaurentPoly {
        let n = self.word.n;
        let rows: Vec<usize> = (n - k + 1..=n - k + i).collect();
        let cols: Vec<usize> = (n - i + 1..=n).collect();
        &self.entries[k - 1][i - 1].iter().find(|(r, c, _)| *r == rows && *c == cols).expect("corner minors are nonzero").2
    }

    /// m_i^(k)(w) = max over the block minors of 2 x their tropicalization.
    pub fn tropical_gz(&self, w: &[f64]) -> LadderVector {
        let ell = self
            .entries
            .iter()
            .map(|level| {
                level
                    .iter()
                    .map(|list| {
                        list.iter()
                            .flat_map(|(_, _, p)| p.monomials.iter().map(|m| 2.0 * dot(&m.exponents, w)))
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect()
            })
            .collect();
        LadderVector { ell }
    }

    /// True iff every maximum in m(w) is attained only by the corner monomial.
    pub fn in_linearity_chamber(&self, w: &[f64], tol: f64) -> bool {
        let m = self.tropical_gz(w);
        let n = self.word.n;
        for k in 1..=n {
            for i in 1..=k {
                let corner = &self.corner(i, k).monomials[0].exponents;
                let mut hits = 0;
                for (_, _, p) in &self.entries[k - 1][i - 1] {
                    for mono in &p.monomials {
                        if 2.0 * dot(&mono.exponents, w) >= m.get(i, k) - tol {
                            if mono.exponents != *corner {
                                return false;
                            }
                            hits += 1;
                        }
                    }
                }
                if hits != 1 {
                    return false;
                }
            }
        }
        true
    }
}

pub fn tropical_gz_map(w: &TropicalPoint, word: &Word) -> Result<LadderVector> {
    let table = MinorTable::new(word)?;
    if w.w.len() != word.variables() {
        return Err(Error::Argument(format!("need {} weights", word.variables())));
    }
    Ok(table.tropical_gz(&w.w))
}

/// n with n + n(n-1)/2 = len.
pub fn size_for_variables(len: usize) -> Result<usize> {
    (1..=8).find(|n| n + n * (n - 1) / 2 == len).ok_or_else(|| Error::Argument(format!("{len} weights fit no n")))
}

/// Membership in W^delta for the standard word: m(w) satisfies the strict
/// delta-rhombus inequalities and any two disjoint sets of edges (not both
/// empty) have weight sums more than delta apart.
pub fn in_w_delta(w: &TropicalPoint, delta: f64) -> Result<bool> {
    let n = size_for_variables(w.w.len())?;
    if n > 4 {
        return Err(Error::Unsupported(format!("exhaustive W^delta check needs n <= 4, got {n}")));
    }
    let table = MinorTable::new(&Word::standard(n))?;
    if n > 1 && cone_gap(&table.tropical_gz(&w.w)).delta <= delta {
        return Ok(false);
    }
    Ok(min_signed_sum(&w.w) > delta)
}

/// min |sum c_e w_e| over nonzero c in {-1, 0, 1}^N.
pub fn min_signed_sum(w: &[f64]) -> f64 {
    fn rec(w: &[f64], acc: f64, nonzero: bool, best: &mut f64) {
        match w.split_first() {
            None => {
                if nonzero {
                    *best = best.min(acc.abs());
                }
            }
            Some((&x, rest)) => {
                rec(rest, acc, nonzero, best);
                rec(rest, acc + x, true, best);
                rec(rest, acc - x, true, best);
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(w, 0.0, false, &mut best);
    best
}

/// Draws w in W^delta for the standard word: superincreasing magnitudes
/// 1.1 delta 2^j with 1% jitter, random signs and order, rejected until
/// `in_w_delta` holds.
pub fn sample_w_delta(n: usize, delta: f64, rng: &mut impl Rng) -> Result<TropicalPoint> {
    let nv = n + n * (n - 1) / 2;
    for _ in 0..REJECTION_BUDGET / 1000 {
        let mut w: Vec<f64> = (0..nv).map(|j| 1.1 * delta * 2f64.powi(j as i32) * (1.0 + 0.01 * rng.gen::<f64>())).collect();
        w.shuffle(rng);
        for v in &mut w {
            if rng.gen::<bool>() {
                *v = -*v;
            }
        }
        let w = TropicalPoint { w };
        if in_w_delta(&w, delta)? {
            return Ok(w);
        }
    }
    Err(Error::Sampling(format!("no point of W^{delta} found for n = {n}")))
}

/// Solves 2 (corner exponents) . w = ell for the standard word.
pub fn invert_tropical(l: &LadderVector) -> Result<TropicalPoint> {
    let n = l.n();
    let gap = cone_gap(l).delta;
    if n > 1 && !(gap > 0.0) {
        return Err(Error::Domain(format!("ladder is not inside the cone (gap {gap:e})")));
    }
    let table = MinorTable::new(&Word::standard(n))?;
    let nv = table.word.variables();
    let mut rows = Vec::with_capacity(nv);
    for k in 1..=n {
        for i in 1..=k {
            let e = &table.corner(i, k).monomials[0].exponents;
            let mut row: Vec<f64> = e.iter().map(|&x| 2.0 * x as f64).collect();
            row.push(l.get(i, k));
            rows.push(row);
        }
    }
    let w = solve(rows).ok_or_else(|| Error::Evaluation("corner system is singular".into()))?;
    Ok(TropicalPoint { w })
}

/// Gaussian elimination with partial pivoting on an augmented system.
fn solve(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))?;
        if a[p][c].abs() < 1e-12 {
            return None;
        }
        a.swap(p, c);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for j in c..=n {
                        let v = a[c][j];
                        a[r][j] -= f * v;
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::minor;
    use proptest::prelude::*;

    fn net3() -> PlanarNetwork {
        PlanarNetwork::new(&Word::standard(3))
    }

    fn mono(p: &PositiveLaurentPoly) -> Vec<(f64, Vec<i32>)> {
        p.monomials.iter().map(|m| (m.coefficient, m.exponents.clone())).collect()
    }

    #[test]
    fn words() {
        assert_eq!(Word::standard(3).letters, vec![1, 2, 1]);
        assert_eq!(Word::standard(4).letters, vec![1, 2, 3, 1, 2, 1]);
        assert!(Word::standard(5).is_reduced());
        assert!(!Word::new(3, vec![1, 1]).unwrap().is_reduced());
        assert!(Word::new(3, vec![3]).is_err());
    }

    #[test]
    fn factorization_examples() {
        let (x, z) = ([1.3, 0.7, 2.1], [0.4, 1.9, 0.8]);
        let zc: Vec<C64> = z.iter().map(|&v| C64::new(v, 0.0)).collect();
        let b = matrix_factorization(&Word::standard(3), &x, &zc).unwrap();
        assert!((b[(0, 1)].re - x[0] * (z[0] + z[2])).abs() < 1e-15);
        assert!((b[(0, 2)].re - x[0] * z[0] * z[1]).abs() < 1e-15);
        assert!((b[(1, 2)].re - x[1] * z[1]).abs() < 1e-15);
        let b0 = matrix_factorization(&Word::standard(3), &x, &[C64::new(0.0, 0.0); 3]).unwrap();
        assert_eq!(
            b0.as_matrix().max_diff(&ComplexMatrix::from_real(&[vec![1.3, 0.0, 0.0], vec![0.0, 0.7, 0.0], vec![0.0, 0.0, 2.1]]).unwrap()),
            0.0
        );
        let b2 = matrix_factorization(&Word::standard(2), &[2.0, 3.0], &[C64::new(5.0, 0.0)]).unwrap();
        assert_eq!(b2[(0, 1)], C64::new(10.0, 0.0));
        assert!(matrix_factorization(&Word::standard(2), &[0.0, 3.0], &[C64::new(5.0, 0.0)]).is_err());
    }

    #[test]
    fn lindstrom_examples() {
        let net = net3();
        // corner (2,3): rows {1,2}, cols {2,3}; variables x1 x2 x3 z1 z2 z3
        let p = minor_polynomial(&net, &[1, 2], &[2, 3]).unwrap();
        assert_eq!(mono(&p), vec![(1.0, vec![1, 1, 0, 0, 1, 1])]);
        let p = minor_polynomial(&net, &[1], &[2]).unwrap();
        let mut got = mono(&p);
        got.sort_by(|a, b| a.1.cmp(&b.1));
        assert_eq!(got, vec![(1.0, vec![1, 0, 0, 0, 0, 1]), (1.0, vec![1, 0, 0, 1, 0, 0])]);
        assert!(minor_polynomial(&net, &[2], &[1]).unwrap().is_zero());
        let t = MinorTable::new(&Word::standard(4)).unwrap();
        for k in 1..=4 {
            for i in 1..=k {
                assert_eq!(t.corner(i, k).monomials.len(), 1);
            }
        }
    }

    #[test]
    fn tropicalize_examples() {
        let p = PositiveLaurentPoly {
            variables: 2,
            monomials: vec![Monomial { coefficient: 1.0, exponents: vec![2, 1] }, Monomial { coefficient: 5.0, exponents: vec![1, 0] }],
        };
        assert_eq!(tropicalize(&p).unwrap().eval(&[1.0, 0.0]), 2.0);
        let single = PositiveLaurentPoly { variables: 2, monomials: vec![Monomial { coefficient: 3.0, exponents: vec![1, -1] }] };
        assert_eq!(tropicalize(&single).unwrap().eval(&[2.0, 0.5]), 1.5);
        let d = tropicalize(&minor_polynomial(&net3(), &[1], &[2]).unwrap()).unwrap();
        let w = [0.2, 0.0, 0.0, -0.3, 0.0, 0.4];
        assert!((d.eval(&w) - (0.2 + 0.4f64.max(-0.3))).abs() < 1e-15);
        assert!(tropicalize(&PositiveLaurentPoly { variables: 1, monomials: vec![] }).is_err());
    }

    #[test]
    fn tropical_map_n2() {
        let word = Word::standard(2);
        let w = TropicalPoint { w: vec![0.3, -0.4, 0.25] };
        let m = tropical_gz_map(&w, &word).unwrap();
        assert!((m.get(1, 1) - 2.0 * -0.4).abs() < 1e-15);
        assert!((m.get(2, 2) - 2.0 * (0.3 - 0.4)).abs() < 1e-15);
        assert!((m.get(1, 2) - 2.0 * 0.3f64.max(0.55).max(-0.4)).abs() < 1e-15);
        let zero = tropical_gz_map(&TropicalPoint { w: vec![0.0; 6] }, &Word::standard(3)).unwrap();
        assert!(zero.flat().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn w_delta_examples() {
        assert!(!in_w_delta(&TropicalPoint { w: vec![0.0; 3] }, 0.1).unwrap());
        // x2 carries weight 0, so alpha = {x2}, beta = {} already has gap 0
        assert!(!in_w_delta(&TropicalPoint { w: vec![0.9, 0.0, 0.4] }, 0.3).unwrap());
        let w = TropicalPoint { w: vec![0.7, -2.9, 1.4] };
        let inside = in_w_delta(&w, 0.3).unwrap();
        let scaled = TropicalPoint { w: w.w.iter().map(|x| 2.0 * x).collect() };
        assert_eq!(inside, in_w_delta(&scaled, 0.6).unwrap());
        assert!(in_w_delta(&TropicalPoint { w: vec![0.0; 15] }, 0.1).is_err());
    }

    #[test]
    fn w_delta_sampler() {
        let mut rng = crate::sampling::stream(4, 0);
        for _ in 0..5 {
            let w = sample_w_delta(3, 0.5, &mut rng).unwrap();
            assert!(in_w_delta(&w, 0.5).unwrap());
        }
    }

    #[test]
    fn invert_examples() {
        let l = LadderVector::new(vec![vec![0.0], vec![1.0, 0.0]]).unwrap();
        let w = invert_tropical(&l).unwrap();
        assert!(w.w.iter().zip([0.0, 0.0, 0.5]).all(|(a, b)| (a - b).abs() < 1e-15));
        let l2 = l.scaled(3.0);
        let w2 = invert_tropical(&l2).unwrap();
        assert!(w2.w.iter().zip(&w.w).all(|(a, b)| (a - 3.0 * b).abs() < 1e-14));
        let boundary = LadderVector::new(vec![vec![1.0], vec![1.0, 2.0]]).unwrap();
        assert!(invert_tropical(&boundary).is_err());
    }

    fn positive_vars(raw: &[f64], nv: usize) -> Vec<C64> {
        raw.iter().take(nv).map(|&v| C64::new(0.2 + v, 0.0)).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn lindstrom_matches_numeric_minors(n in 2usize..=4, raw in prop::collection::vec(0.0f64..2.0, 10), picks in prop::collection::vec(0usize..1000, 100)) {
            let word = Word::standard(n);
            let vars = positive_vars(&raw, word.variables());
            let x: Vec<f64> = vars[..n].iter().map(|v| v.re).collect();
            let b = matrix_factorization(&word, &x, &vars[n..]).unwrap();
            let table = MinorTable::new(&word).unwrap();
            let net = &table.network;
            let all: Vec<usize> = (1..=n).collect();
            let mut pairs = vec![];
            for k in 1..=n {
                for i in 1..=k {
                    pairs.push(((n - k + 1..=n - k + i).collect::<Vec<_>>(), (n - i + 1..=n).collect::<Vec<_>>()));
                }
            }
            for &p in picks.iter().take(50) {
                let size = 1 + p % n;
                let sets = subsets(&all, size);
                pairs.push((sets[p % sets.len()].clone(), sets[(p / 7) % sets.len()].clone()));
            }
            for (rows, cols) in pairs {
                let poly = minor_polynomial(net, &rows, &cols).unwrap();
                let num = minor(b.as_matrix(), &rows, &cols).unwrap();
                let val = poly.eval(&vars);
                prop_assert!((val - num).norm() <= 1e-10 * (1.0 + num.norm()));
                prop_assert!(poly.monomials.iter().all(|m| m.coefficient > 0.0));
            }
        }

        #[test]
        fn inverse_round_trip(n in 2usize..=4, seed in 0u64..1000) {
            let mut rng = crate::sampling::stream(seed, 0);
            let p = crate::sampling::sample_pattern(n, 0.1, crate::sampling::PatternSampler::Interlacing, &mut rng).unwrap();
            let l = crate::gz::to_ladder(&p);
            let w = invert_tropical(&l).unwrap();
            let table = MinorTable::new(&Word::standard(n)).unwrap();
            prop_assert!(table.tropical_gz(&w.w).max_diff(&l) <= 1e-12 * (1.0 + l.flat().iter().fold(0.0f64, |a, b| a.max(b.abs()))));
            prop_assert!(table.in_linearity_chamber(&w.w, 1e-9));
        }

        #[test]
        fn images_satisfy_rhombus(n in 2usize..=4, w in prop::collection::vec(-3.0f64..3.0, 10)) {
            let table = MinorTable::new(&Word::standard(n)).unwrap();
            let m = table.tropical_gz(&w[..table.word.variables()]);
            prop_assert!(cone_gap(&m).delta >= -1e-12);
        }
    }
}
