//! Experiment driver: seeded sampling, t-sweeps, limit fits, chamber searches
//! and flat reports.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::io::{self, Write};

use rand::Rng;
use serde::Serialize;

use crate::dual::{
    chamber_of, cluster_chart, corner_indices, flaschka_ratiu, h_inverse, h_map, is_totally_positive, master_equation_residual,
    trace_identity_residual, AnMatrix,
};
use crate::error::{Error, Result};
use crate::gw::{gamma, gw, gw_from_coordinates, gw_u2_closed_form, relative_error, U2Params, OVERFLOW_GUARD};
use crate::gz::{
    action_angle, cone_gap, from_ladder, gz_inverse, reduce_angle, to_ladder, wrap_angle, AnglePattern, GzPattern, LadderVector,
};
use crate::logspace::log_flaschka_ratiu;
use crate::matrix::{det, eig_hermitian, minor, ComplexMatrix, HermitianMatrix, C64};
use crate::poisson::{bracket_matrix, ScalarField};
use crate::sampling::{sample_pattern, sample_point, stream, H0Sample, PatternSampler};
use crate::tropical::{invert_tropical, matrix_factorization, sample_w_delta, MinorTable, Word};

/// Errors below this are treated as converged and left out of slope fits.
pub const NOISE_FLOOR: f64 = 1e-11;

pub const TOLERANCES: [(&str, f64); 12] = [
    ("u2", 1e-8),
    ("action", 1e-3),
    ("action_slope_margin", 0.05),
    ("angle_rounding", 1e-2),
    ("bracket", 5e-2),
    ("master", 1e-9),
    ("tropical", 1e-3),
    ("tropical_slope_margin", 0.1),
    ("roundtrip", 1e-12),
    ("rhombus", 1e-12),
    ("chamber_fr", 1e-2),
    ("property", 1e-9),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub delta: f64,
    pub t_grid: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub fd_step: f64,
    pub sampler: PatternSampler,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 3,
            delta: 0.5,
            t_grid: (1..=20).map(f64::from).collect(),
            samples: 20,
            seed: 0,
            fd_step: 1e-5,
            sampler: PatternSampler::Interlacing,
            tolerances: TOLERANCES.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=5).contains(&self.n) {
            return Err(Error::Argument(format!("n = {} outside 2..5", self.n)));
        }
        if !(self.delta > 0.0) {
            return Err(Error::Argument("delta must be positive".into()));
        }
        if self.t_grid.is_empty() || self.t_grid[0] <= 0.0 || self.t_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument("t grid must be positive and strictly increasing".into()));
        }
        if self.samples == 0 {
            return Err(Error::Argument("need at least one sample".into()));
        }
        if !(1e-7..=1e-3).contains(&self.fd_step) {
            return Err(Error::Argument(format!("fd step {:e} outside [1e-7, 1e-3]", self.fd_step)));
        }
        let reach = self.t_max() * self.spectral_bound();
        if reach > OVERFLOW_GUARD {
            return Err(Error::Argument(format!("max t x spectral bound = {reach} exceeds {OVERFLOW_GUARD}")));
        }
        for (k, v) in &self.tolerances {
            if !TOLERANCES.iter().any(|(name, _)| name == k) {
                return Err(Error::Argument(format!("unknown tolerance {k}")));
            }
            if !v.is_finite() {
                return Err(Error::Argument(format!("tolerance {k} is not finite")));
            }
        }
        Ok(())
    }

    pub fn t_max(&self) -> f64 {
        *self.t_grid.last().unwrap_or(&0.0)
    }

    /// Bound on |lambda| for patterns the sampler can produce.
    pub fn spectral_bound(&self) -> f64 {
        match self.sampler {
            PatternSampler::LadderBox { radius } => 2.0 * radius,
            PatternSampler::Interlacing => 1.0 + 2.0 * self.delta * (self.n - 1) as f64,
        }
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| TOLERANCES.iter().find(|(k, _)| *k == name).map(|&(_, v)| v))
            .unwrap_or_else(|| panic!("no tolerance named {name}"))
    }

    pub fn set_tol(&mut self, name: &str, value: f64) -> Result<()> {
        if !TOLERANCES.iter().any(|(k, _)| *k == name) {
            return Err(Error::Argument(format!("unknown tolerance {name}")));
        }
        self.tolerances.insert(name.to_string(), value);
        Ok(())
    }
}

/// One measurement, with everything needed to replay it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub seed: u64,
    pub sample: u64,
    pub t: f64,
    pub coordinate: String,
    pub value: f64,
    pub reference: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, pass: value <= tolerance }
    }

    /// A yes/no condition; `value` carries the measured quantity.
    pub fn holds(name: impl Into<String>, pass: bool, value: f64) -> Self {
        Self { name: name.into(), value, tolerance: f64::NAN, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub records: Vec<Record>,
    pub checks: Vec<Check>,
    pub skipped: Vec<String>,
}

impl Report {
    fn new(experiment: &str, cfg: &ExperimentConfig) -> Self {
        Self { experiment: experiment.into(), config: cfg.clone(), records: vec![], checks: vec![], skipped: vec![] }
    }

    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    fn record(&mut self, sample: u64, t: f64, coordinate: String, value: f64, reference: f64, error: f64) {
        self.records.push(Record { seed: self.config.seed, sample, t, coordinate, value, reference, error });
    }
}

/// CSV with one row per record; floats carry 17 significant digits.
pub fn write_csv(report: &Report, out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "experiment,seed,sample,t,coordinate,value,reference,error")?;
    for r in &report.records {
        writeln!(
            out,
            "{},{},{},{:.16e},{},{:.16e},{:.16e},{:.16e}",
            report.experiment, r.seed, r.sample, r.t, r.coordinate, r.value, r.reference, r.error
        )?;
    }
    Ok(())
}

pub fn sample_h0(cfg: &ExperimentConfig) -> Result<Vec<H0Sample>> {
    cfg.validate()?;
    (0..cfg.samples as u64).map(|i| sample_point(cfg.n, cfg.delta, cfg.sampler, cfg.seed, i)).collect()
}

/// Least-squares slope of ln err against t over points with t >= t_min and
/// err above the noise floor; None when fewer than three such points remain.
pub fn fit_log_slope(ts: &[f64], errs: &[f64], t_min: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ts.iter().zip(errs).filter(|&(&t, &e)| t >= t_min && e > NOISE_FLOOR).map(|(&t, &e)| (t, e.ln())).collect();
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let (mt, me) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - me)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    Some(sxy / sxx)
}

fn upper_half_start(ts: &[f64]) -> f64 {
    ts[(ts.len() - 1) / 2]
}

fn levels(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..=n).flat_map(|k| (1..=k).map(move |i| (i, k)))
}

fn angle_levels(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..n).flat_map(|k| (1..=k).map(move |i| (i, k)))
}

fn phi_levels(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (2..=n).flat_map(|k| (1..k).map(move |i| (i, k)))
}

/// |2 zeta(Delta_t(gw_t(A))) - ell(A)| over the t grid.
pub fn converge_action(cfg: &ExperimentConfig) -> Result<Report> {
    let samples = sample_h0(cfg)?;
    let mut rep = Report::new("converge-action", cfg);
    let t_min = upper_half_start(&cfg.t_grid);
    let slope_bound = -cfg.delta / 2.0 + cfg.tol("action_slope_margin");
    let (mut worst_final, mut worst_slope) = (0.0f64, f64::NEG_INFINITY);
    let (mut monotone, mut pairs) = (0usize, 0usize);
    for s in &samples {
        let ell = to_ladder(&s.pattern);
        let mut table: Vec<Vec<f64>> = vec![vec![]; ell.flat().len()];
        let mut worst = vec![];
        let mut ok = true;
        for &t in &cfg.t_grid {
            let chart = gw_from_coordinates(&s.pattern, &s.angles, t).and_then(|r| cluster_chart(&r.b, t));
            let chart = match chart {
                Ok(c) => c,
                Err(e) => {
                    rep.skipped.push(format!("sample {} t {t}: {e}", s.index));
                    ok = false;
                    break;
                }
            };
            let mut m = 0.0f64;
            for (c, (i, k)) in levels(cfg.n).enumerate() {
                let v = 2.0 * chart.zeta(i, k);
                let err = (v - ell.get(i, k)).abs();
                rep.record(s.index, t, format!("zeta_{i}^({k})"), v, ell.get(i, k), err);
                table[c].push(err);
                m = m.max(err);
            }
            worst.push(m);
        }
        if !ok {
            continue;
        }
        worst_final = worst_final.max(*worst.last().unwrap());
        if let Some(slope) = fit_log_slope(&cfg.t_grid, &worst, t_min) {
            worst_slope = worst_slope.max(slope);
        }
        for errs in &table {
            pairs += 1;
            let top = &errs[cfg.t_grid.iter().position(|&t| t >= t_min).unwrap_or(0)..];
            if top.windows(2).all(|w| w[1] <= w[0] || w[1] <= NOISE_FLOOR) {
                monotone += 1;
            }
        }
    }
    let used = samples.len() - rep.skipped.len();
    rep.checks.push(Check::holds("samples_used", used > 0, used as f64));
    rep.checks.push(Check::at_most("action_error_at_max_t", worst_final, cfg.tol("action")));
    rep.checks.push(Check::at_most("action_decay_slope", worst_slope, slope_bound));
    let frac = if pairs == 0 { 0.0 } else { monotone as f64 / pairs as f64 };
    rep.checks.push(Check::holds("monotone_fraction_at_least_0.95", frac >= 0.95, frac));
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleFit {
    /// Rows phi_i^(k) (k = 2..n, i < k), columns psi_q^(p) (p = 1..n-1, q <= p).
    pub b: Vec<Vec<f64>>,
    pub rounded: Vec<Vec<i64>>,
    pub max_rounding_error: f64,
    pub determinant: f64,
}

/// d phi / d psi at fixed actions, by central differences in psi.
pub fn angle_jacobian(p: &GzPattern, psi: &AnglePattern, t: f64, h: f64) -> Result<Vec<Vec<f64>>> {
    let n = p.n();
    let phi_at = |psi: &AnglePattern| -> Result<Vec<f64>> {
        let chart = cluster_chart(&gw_from_coordinates(p, psi, t)?.b, t)?;
        Ok(phi_levels(n).map(|(i, k)| chart.phi(i, k)).collect())
    };
    let cols: Vec<(usize, usize)> = angle_levels(n).collect();
    let mut jac = vec![vec![0.0; cols.len()]; cols.len()];
    for (c, &(q, pk)) in cols.iter().enumerate() {
        let shift = |d: f64| {
            let mut raw = psi.psi.clone();
            raw[pk - 1][q - 1] += d;
            AnglePattern { psi: raw.into_iter().map(|row| row.into_iter().map(reduce_angle).collect()).collect() }
        };
        let (plus, minus) = (phi_at(&shift(h))?, phi_at(&shift(-h))?);
        for r in 0..cols.len() {
            jac[r][c] = wrap_angle(plus[r] - minus[r]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Position of psi_q^(p) relative to psi_i^(k): higher when p < k, or p = k
/// and q > i.
fn is_higher(q: usize, p: usize, i: usize, k: usize) -> bool {
    p < k || (p == k && q > i)
}

/// Fits phi = B psi + c at the largest t from angle Jacobians averaged over
/// the samples.
pub fn converge_angle(cfg: &ExperimentConfig) -> Result<(AngleFit, Report)> {
    let samples = sample_h0(cfg)?;
    let t = cfg.t_max();
    let mut rep = Report::new("converge-angle", cfg);
    let n = cfg.n;
    let rows: Vec<(usize, usize)> = phi_levels(n).collect();
    let cols: Vec<(usize, usize)> = angle_levels(n).collect();
    let m = rows.len();
    let mut sum = vec![vec![0.0; m]; m];
    let mut used = 0usize;
    let mut jacs = vec![];
    for s in &samples {
        match angle_jacobian(&s.pattern, &s.angles, t, cfg.fd_step) {
            Ok(j) => {
                for r in 0..m {
                    for c in 0..m {
                        sum[r][c] += j[r][c];
                    }
                }
                used += 1;
                jacs.push((s.index, j));
            }
            Err(e) => rep.skipped.push(format!("sample {}: {e}", s.index)),
        }
    }
    if used == 0 {
        return Err(Error::RankDeficient("no usable samples for the angle fit; add samples".into()));
    }
    let b: Vec<Vec<f64>> = sum.iter().map(|row| row.iter().map(|v| v / used as f64).collect()).collect();
    let rounded: Vec<Vec<i64>> = b.iter().map(|row| row.iter().map(|v| v.round() as i64).collect()).collect();
    for (idx, j) in &jacs {
        for (r, &(i, k)) in rows.iter().enumerate() {
            for (c, &(q, p)) in cols.iter().enumerate() {
                let err = (j[r][c] - rounded[r][c] as f64).abs();
                rep.record(*idx, t, format!("dphi_{i}^({k})/dpsi_{q}^({p})"), j[r][c], rounded[r][c] as f64, err);
            }
        }
    }
    let max_rounding_error =
        b.iter().zip(&rounded).flat_map(|(x, y)| x.iter().zip(y).map(|(a, &r)| (a - r as f64).abs())).fold(0.0, f64::max);
    let det_rows: Vec<Vec<C64>> = rounded.iter().map(|r| r.iter().map(|&v| C64::new(v as f64, 0.0)).collect()).collect();
    let determinant = det(&det_rows).re;
    rep.checks.push(Check::at_most("angle_rounding_error", max_rounding_error, cfg.tol("angle_rounding")));
    rep.checks.push(Check::holds("angle_det_unimodular", (determinant.abs() - 1.0).abs() < 1e-9, determinant));
    let mut leading_ok = true;
    let mut lower_ok = true;
    for (r, &(i, k)) in rows.iter().enumerate() {
        for (c, &(q, p)) in cols.iter().enumerate() {
            if (q, p) == (i, k - 1) {
                leading_ok &= rounded[r][c] == 1;
            } else if !is_higher(q, p, i, k - 1) {
                lower_ok &= rounded[r][c] == 0;
            }
        }
    }
    rep.checks.push(Check::holds("angle_leading_coefficient_one", leading_ok, 1.0));
    rep.checks.push(Check::holds("angle_lower_terms_zero", lower_ok, 0.0));
    Ok((AngleFit { b, rounded, max_rounding_error, determinant }, rep))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketEntry {
    pub sample: u64,
    pub first: String,
    pub second: String,
    pub predicted: f64,
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitBracketTable {
    pub t: f64,
    /// Global sign s with measured ~ s * predicted.
    pub sign: f64,
    pub entries: Vec<BracketEntry>,
}

fn sign_of(x: i64) -> i64 {
    x.signum()
}

/// Shared rows and columns of the corner minors (i, k) and (q, p).
pub fn shared_rows_cols(n: usize, i: usize, k: usize, q: usize, p: usize) -> (usize, usize) {
    let (r1, c1) = corner_indices(n, i, k);
    let (r2, c2) = corner_indices(n, q, p);
    (r1.iter().filter(|x| r2.contains(x)).count(), c1.iter().filter(|x| c2.contains(x)).count())
}

/// Limit of {zeta_i^(k), phi_q^(p)}: (1/4)(eps(k - p) - 1)(C - R).
pub fn predicted_bracket(n: usize, i: usize, k: usize, q: usize, p: usize) -> f64 {
    if i == 0 {
        return 0.0;
    }
    let (r, c) = shared_rows_cols(n, i, k, q, p);
    0.25 * (sign_of(k as i64 - p as i64) - 1) as f64 * (c as f64 - r as f64)
}

#[derive(Clone, Copy, PartialEq)]
enum Coord {
    Zeta(usize, usize),
    Phi(usize, usize),
}

impl Coord {
    fn label(&self) -> String {
        match *self {
            Coord::Zeta(i, k) => format!("zeta_{i}^({k})"),
            Coord::Phi(i, k) => format!("phi_{i}^({k})"),
        }
    }
}

/// Lie-Poisson brackets of the pulled-back chart coordinates at t = max of
/// the grid, against the predicted limits.
pub fn bracket_limit(cfg: &ExperimentConfig) -> Result<(LimitBracketTable, Report)> {
    if cfg.n > 3 {
        return Err(Error::Unsupported("bracket limits need n <= 3".into()));
    }
    let samples = sample_h0(cfg)?;
    let t = cfg.t_max();
    let n = cfg.n;
    let coords: Vec<Coord> = levels(n).map(|(i, k)| Coord::Zeta(i, k)).chain(phi_levels(n).map(|(i, k)| Coord::Phi(i, k))).collect();
    let fields: Vec<ScalarField> = coords
        .iter()
        .map(|&c| match c {
            Coord::Zeta(i, k) => ScalarField::new(c.label(), false, move |a| Ok(cluster_chart(&gw(a, t)?.b, t)?.zeta(i, k))),
            Coord::Phi(i, k) => ScalarField::new(c.label(), true, move |a| Ok(cluster_chart(&gw(a, t)?.b, t)?.phi(i, k))),
        })
        .collect();
    let mut rep = Report::new("bracket-limit", cfg);
    let mut entries = vec![];
    for s in &samples {
        let mat = match bracket_matrix(&fields, &s.matrix, cfg.fd_step) {
            Ok(m) => m,
            Err(e @ Error::StepSize(_)) => return Err(e),
            Err(e) => {
                rep.skipped.push(format!("sample {}: {e}", s.index));
                continue;
            }
        };
        for (a, ca) in coords.iter().enumerate() {
            for (b, cb) in coords.iter().enumerate().skip(a + 1) {
                let predicted = match (*ca, *cb) {
                    (Coord::Zeta(i, k), Coord::Phi(q, p)) => predicted_bracket(n, i, k, q, p),
                    _ => 0.0,
                };
                entries.push(BracketEntry { sample: s.index, first: ca.label(), second: cb.label(), predicted, measured: mat[a][b] });
            }
        }
    }
    if entries.is_empty() {
        return Err(Error::Evaluation("every sample failed".into()));
    }
    let dev = |sign: f64| entries.iter().map(|e| (e.measured - sign * e.predicted).abs()).fold(0.0, f64::max);
    let sign = if dev(1.0) <= dev(-1.0) { 1.0 } else { -1.0 };
    for e in &entries {
        rep.record(
            e.sample,
            t,
            format!("{{{},{}}}", e.first, e.second),
            e.measured,
            sign * e.predicted,
            (e.measured - sign * e.predicted).abs(),
        );
    }
    let tol = cfg.tol("bracket");
    let worst = |pred: &dyn Fn(&BracketEntry) -> bool| {
        entries.iter().filter(|e| pred(e)).map(|e| (e.measured - sign * e.predicted).abs()).fold(0.0, f64::max)
    };
    let zz = worst(&|e| e.first.starts_with("zeta") && e.second.starts_with("zeta"));
    let pp = worst(&|e| e.first.starts_with("phi") && e.second.starts_with("phi"));
    let zp = worst(&|e| e.first.starts_with("zeta") && e.second.starts_with("phi"));
    rep.checks.push(Check::at_most("bracket_zeta_zeta", zz, tol));
    rep.checks.push(Check::at_most("bracket_phi_phi", pp, tol));
    rep.checks.push(Check::at_most("bracket_zeta_phi", zp, tol));
    if n == 3 {
        let spot = entries
            .iter()
            .filter(|e| e.first == "zeta_1^(2)" && e.second == "phi_1^(3)")
            .map(|e| (sign * e.measured + 0.5).abs())
            .fold(0.0, f64::max);
        rep.checks.push(Check::at_most("bracket_spot_zeta_1^(2)_phi_1^(3)", spot, tol));
    }
    Ok((LimitBracketTable { t, sign, entries }, rep))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChamberOutcome {
    pub sample: u64,
    pub ladder: Vec<f64>,
    pub distinct_chambers: usize,
    pub max_fr_residual: f64,
    /// psi sign patterns (0 or pi per angle) whose gw_t image is totally positive.
    pub positive_sections: Vec<Vec<u8>>,
}

fn sign_patterns(m: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..1usize << m).map(move |mask| (0..m).map(|b| ((mask >> b) & 1) as u8).collect())
}

/// Fiber candidates over a sampled ladder: one factorization per z sign
/// pattern, and the psi sign patterns whose gw_t image lies in AN_+.
pub fn chambers(cfg: &ExperimentConfig) -> Result<(Vec<ChamberOutcome>, Report)> {
    cfg.validate()?;
    if cfg.n > 3 {
        return Err(Error::Unsupported("chamber search needs n <= 3".into()));
    }
    let n = cfg.n;
    let t = cfg.t_max();
    let word = Word::standard(n);
    let m = word.len();
    let mut rep = Report::new("chambers", cfg);
    let mut outcomes = vec![];
    for idx in 0..cfg.samples as u64 {
        let mut rng = stream(cfg.seed, idx);
        let pattern = sample_pattern(n, cfg.delta, cfg.sampler, &mut rng)?;
        let ell = to_ladder(&pattern);
        let w = invert_tropical(&ell)?;
        let x: Vec<f64> = w.w[..n].iter().map(|v| (t * v).exp()).collect();
        let mut seen = BTreeSet::new();
        let mut max_fr = 0.0f64;
        for signs in sign_patterns(m) {
            let z: Vec<C64> =
                w.w[n..].iter().zip(&signs).map(|(v, &s)| C64::new(if s == 1 { -1.0 } else { 1.0 } * (t * v).exp(), 0.0)).collect();
            let b = matrix_factorization(&word, &x, &z)?;
            seen.insert(chamber_of(&b)?);
            let fr = flaschka_ratiu(&b, t);
            let res = fr.max_diff(&ell);
            max_fr = max_fr.max(res);
            rep.record(idx, t, format!("fr_residual_z_signs_{}", signs.iter().map(|s| s.to_string()).collect::<String>()), res, 0.0, res);
        }
        let mut positive = vec![];
        for signs in sign_patterns(m) {
            let mut it = signs.iter();
            let psi =
                AnglePattern { psi: (1..n).map(|k| (0..k).map(|_| if *it.next().unwrap() == 1 { PI } else { 0.0 }).collect()).collect() };
            let r = gw_from_coordinates(&pattern, &psi, t)?;
            let tp = r.b.is_real(1e-9 * r.b.as_matrix().max_abs()) && is_totally_positive(&r.b)?;
            rep.record(
                idx,
                t,
                format!("tp_psi_signs_{}", signs.iter().map(|s| s.to_string()).collect::<String>()),
                f64::from(u8::from(tp)),
                0.0,
                0.0,
            );
            if tp {
                positive.push(signs);
            }
        }
        outcomes.push(ChamberOutcome {
            sample: idx,
            ladder: ell.flat(),
            distinct_chambers: seen.len(),
            max_fr_residual: max_fr,
            positive_sections: positive,
        });
    }
    let min_distinct = outcomes.iter().map(|o| o.distinct_chambers).min().unwrap_or(0);
    rep.checks.push(Check::holds(format!("distinct_chambers_equal_{}", 1usize << m), min_distinct == 1 << m, min_distinct as f64));
    let worst = outcomes.iter().map(|o| o.max_fr_residual).fold(0.0, f64::max);
    rep.checks.push(Check::at_most("chamber_fr_residual", worst, cfg.tol("chamber_fr")));
    let unique = outcomes.iter().all(|o| o.positive_sections.len() == 1);
    let same = outcomes.windows(2).all(|w| w[0].positive_sections == w[1].positive_sections);
    rep.checks.push(Check::holds(
        "unique_positive_section",
        unique && same,
        outcomes.iter().map(|o| o.positive_sections.len()).max().unwrap_or(0) as f64,
    ));
    Ok((outcomes, rep))
}

/// Log-domain Flaschka-Ratiu of e^(tw)-factorizations for w in W^delta
/// against the tropical image m(w).
pub fn tropical_convergence(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    if cfg.n > 4 {
        return Err(Error::Unsupported("W^delta sampling needs n <= 4".into()));
    }
    let word = Word::standard(cfg.n);
    let table = MinorTable::new(&word)?;
    let mut rep = Report::new("tropical-convergence", cfg);
    let (mut worst_final, mut worst_slope) = (0.0f64, f64::NEG_INFINITY);
    let t_min = 5.0f64.min(upper_half_start(&cfg.t_grid));
    for idx in 0..cfg.samples as u64 {
        let mut rng = stream(cfg.seed, idx);
        let w = sample_w_delta(cfg.n, cfg.delta, &mut rng)?;
        let phi: Vec<f64> = (0..word.len()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect();
        let target = table.tropical_gz(&w.w);
        let mut errs = vec![];
        for &t in &cfg.t_grid {
            let fr = log_flaschka_ratiu(&table, &w.w, &phi, t)?;
            let e = fr.max_diff(&target);
            rep.record(idx, t, "max_ik".into(), e, 0.0, e);
            errs.push(e);
        }
        worst_final = worst_final.max(*errs.last().unwrap());
        if let Some(s) = fit_log_slope(&cfg.t_grid, &errs, t_min) {
            worst_slope = worst_slope.max(s);
        }
    }
    rep.checks.push(Check::at_most("tropical_error_at_max_t", worst_final, cfg.tol("tropical")));
    rep.checks.push(Check::at_most("tropical_decay_slope", worst_slope, -cfg.delta + cfg.tol("tropical_slope_margin")));
    Ok(rep)
}

/// Rhombus feasibility of tropical images of uniform w in [-1, 1]^N, and
/// round trips of ladders drawn from the cone with gap 0.1.
pub fn tropical_cone(cfg: &ExperimentConfig, images: usize, round_trips: usize) -> Result<Report> {
    cfg.validate()?;
    let mut rep = Report::new("tropical-cone", cfg);
    let tables: Vec<MinorTable> = (2..=4).map(|n| MinorTable::new(&Word::standard(n))).collect::<Result<_>>()?;
    let mut rng = stream(cfg.seed, 0);
    let mut worst_slack = f64::INFINITY;
    for j in 0..images {
        let table = &tables[j % 3];
        let w: Vec<f64> = (0..table.word.variables()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        worst_slack = worst_slack.min(cone_gap(&table.tropical_gz(&w)).delta);
    }
    let mut worst_trip = 0.0f64;
    for j in 0..round_trips {
        let table = &tables[j % 3];
        let p = sample_pattern(table.word.n, 0.1, PatternSampler::Interlacing, &mut rng)?;
        let ell = to_ladder(&p);
        let w = invert_tropical(&ell)?;
        let back = table.tropical_gz(&w.w);
        let scale = ell.flat().iter().fold(1.0f64, |a, b| a.max(b.abs()));
        let err = back.max_diff(&ell) / scale;
        rep.record(j as u64, 0.0, format!("round_trip_n{}", table.word.n), err, 0.0, err);
        worst_trip = worst_trip.max(err);
    }
    rep.checks.push(Check::at_most("rhombus_violation", (-worst_slack).max(0.0), cfg.tol("rhombus")));
    rep.checks.push(Check::at_most("tropical_round_trip", worst_trip, cfg.tol("roundtrip")));
    Ok(rep)
}

fn random_an(n: usize, rng: &mut impl Rng) -> Result<AnMatrix> {
    AnMatrix::new(ComplexMatrix::from_fn(n, |i, j| {
        if i == j {
            C64::new(rng.gen_range(0.3..3.0), 0.0)
        } else if i < j {
            C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

/// Invariant suite over every module plus the n = 3 trace identity.
pub fn verify(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let mut rep = Report::new("verify", cfg);
    let prop = cfg.tol("property");
    let mut rng = stream(cfg.seed, u64::MAX);

    let mut eig_err = 0.0f64;
    let mut gz_err = 0.0f64;
    let mut ladder_err = 0.0f64;
    let mut h_err = 0.0f64;
    let mut gamma_err = 0.0f64;
    for s in sample_h0(cfg)? {
        let e = eig_hermitian(&s.matrix)?;
        let d = ComplexMatrix::from_fn(cfg.n, |i, j| if i == j { C64::new(e.values[i], 0.0) } else { C64::new(0.0, 0.0) });
        let back = e.vectors.mul(&d).mul(&e.vectors.adjoint());
        eig_err = eig_err.max(back.max_diff(s.matrix.as_matrix()) / (1.0 + s.matrix.as_matrix().max_abs()));
        let (p, psi) = action_angle(&s.matrix)?;
        gz_err = gz_err.max(p.max_diff(&s.pattern)).max(psi.max_diff(&s.angles));
        gz_err = gz_err.max(gz_inverse(&p, &psi)?.as_matrix().max_diff(s.matrix.as_matrix()));
        ladder_err = ladder_err.max(from_ladder(&to_ladder(&s.pattern)).max_diff(&s.pattern));
        let g = gamma(&s.matrix)?;
        let (gp, gpsi) = action_angle(&g)?;
        gamma_err = gamma_err.max(gp.max_diff(&s.pattern.map(f64::exp))).max(gpsi.max_diff(&s.angles));
        let b = h_inverse(&g)?;
        h_err = h_err.max(h_map(&b).as_matrix().max_diff(g.as_matrix()) / g.as_matrix().max_abs());
    }
    rep.checks.push(Check::at_most("eigen_reconstruction", eig_err, prop));
    rep.checks.push(Check::at_most("gz_round_trip", gz_err, prop));
    rep.checks.push(Check::at_most("ladder_round_trip", ladder_err, prop));
    rep.checks.push(Check::at_most("gamma_preserves_coordinates", gamma_err, prop));
    rep.checks.push(Check::at_most("h_round_trip", h_err, prop));

    let mut u2 = 0.0f64;
    for _ in 0..cfg.samples {
        let p = U2Params {
            x: rng.gen_range(-1.0..1.0),
            y: rng.gen_range(-1.0..1.0),
            rho: rng.gen_range(0.2..1.0),
            theta: rng.gen_range(0.0..2.0 * PI),
        };
        for t in [1.0, 5.0, 10.0] {
            let num = gw(&p.matrix(), t)?;
            let exact = gw_u2_closed_form(p.x, p.y, p.rho, p.theta, t)?;
            u2 = u2.max(relative_error(num.b.as_matrix(), exact.as_matrix()));
        }
    }
    rep.checks.push(Check::at_most("u2_closed_form", u2, cfg.tol("u2")));

    let mut master = 0.0f64;
    let mut trace = 0.0f64;
    for _ in 0..cfg.samples {
        let n = rng.gen_range(2..=4);
        let b = random_an(n, &mut rng)?;
        let t = rng.gen_range(0.5..10.0);
        master = master.max(master_equation_residual(&b, t, &flaschka_ratiu(&b, t))?);
        let b3 = random_an(3, &mut rng)?;
        trace = trace.max(trace_identity_residual(&b3, rng.gen_range(0.5..10.0))?);
    }
    rep.checks.push(Check::at_most("master_equations", master, cfg.tol("master")));
    rep.checks.push(Check::at_most("trace_identity_n3", trace, cfg.tol("master")));

    let mut lind = 0.0f64;
    let mut trip = 0.0f64;
    for n in 2..=4usize {
        let word = Word::standard(n);
        let table = MinorTable::new(&word)?;
        for _ in 0..cfg.samples.min(5) {
            let vars: Vec<C64> = (0..word.variables()).map(|_| C64::new(rng.gen_range(0.2..2.0), 0.0)).collect();
            let x: Vec<f64> = vars[..n].iter().map(|v| v.re).collect();
            let b = matrix_factorization(&word, &x, &vars[n..])?;
            for level in &table.entries {
                for list in level {
                    for (r, c, poly) in list {
                        let num = minor(b.as_matrix(), r, c)?;
                        lind = lind.max((poly.eval(&vars) - num).norm() / (1.0 + num.norm()));
                    }
                }
            }
            let p = sample_pattern(n, 0.1, PatternSampler::Interlacing, &mut rng)?;
            let ell = to_ladder(&p);
            let w = invert_tropical(&ell)?;
            trip = trip.max(table.tropical_gz(&w.w).max_diff(&ell));
        }
    }
    rep.checks.push(Check::at_most("lindstrom_minors", lind, prop));
    rep.checks.push(Check::at_most("tropical_round_trip", trip, cfg.tol("roundtrip")));
    Ok(rep)
}

/// The ladder of a Hermitian matrix, for reports.
pub fn ladder_of(a: &HermitianMatrix) -> Result<LadderVector> {
    Ok(to_ladder(&action_angle(a)?.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(n: usize, samples: usize) -> ExperimentConfig {
        ExperimentConfig { n, samples, ..Default::default() }
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let mut c = ExperimentConfig::default();
        c.t_grid = vec![1.0, 1.0];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.t_grid = vec![1.0, 400.0];
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        assert!(c.set_tol("nonsense", 1.0).is_err());
        assert!(c.set_tol("master", 1e-30).is_ok());
        assert_eq!(c.tol("master"), 1e-30);
    }

    #[test]
    fn sampling_is_reproducible() {
        let cfg = ExperimentConfig { n: 2, ..small(2, 5) };
        let a = sample_h0(&cfg).unwrap();
        let b = sample_h0(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|s| s.pattern.gap() > 0.5));
        let thin = ExperimentConfig { delta: 2.5, sampler: PatternSampler::LadderBox { radius: 1.0 }, t_grid: vec![1.0], ..small(3, 1) };
        assert!(matches!(sample_h0(&thin), Err(Error::Sampling(_))));
    }

    #[test]
    fn slope_fit() {
        let ts: Vec<f64> = (1..=20).map(f64::from).collect();
        let errs: Vec<f64> = ts.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        assert!((fit_log_slope(&ts, &errs, 10.0).unwrap() + 0.7).abs() < 1e-12);
        assert_eq!(fit_log_slope(&ts, &vec![1e-14; 20], 10.0), None);
    }

    #[test]
    fn swap_action_error() {
        let a = HermitianMatrix::from_real_symmetric(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let t = 20.0;
        let chart = cluster_chart(&gw(&a, t).unwrap().b, t).unwrap();
        let ell = ladder_of(&a).unwrap();
        let closed = (2.0 / t) * ((t / 2.0).exp() - (-t / 2.0).exp()).ln();
        assert!((2.0 * chart.zeta(1, 2) - closed).abs() < 1e-12);
        assert!((2.0 * chart.zeta(1, 2) - ell.get(1, 2)).abs() < 1e-8);
        assert!((2.0 * chart.zeta(1, 1) - ell.get(1, 1)).abs() < 1e-12);
        assert!((2.0 * chart.zeta(2, 2) - ell.get(2, 2)).abs() < 1e-12);
    }

    #[test]
    fn predicted_brackets() {
        assert_eq!(predicted_bracket(3, 1, 2, 1, 3), -0.5);
        // same level: eps(0) = 0
        let (r, c) = shared_rows_cols(3, 2, 2, 1, 2);
        assert_eq!(predicted_bracket(3, 2, 2, 1, 2), -0.25 * (c as f64 - r as f64));
    }

    #[test]
    fn angle_fit_n2_is_identity() {
        let cfg = ExperimentConfig { t_grid: vec![10.0], ..small(2, 5) };
        let (fit, rep) = converge_angle(&cfg).unwrap();
        assert_eq!(fit.rounded, vec![vec![1]]);
        assert!(fit.max_rounding_error < 1e-6);
        assert!(rep.passed());
    }

    #[test]
    fn angle_fit_matches_bracket_prediction() {
        // d phi_q^(p) / d psi_i^(k) = 2 s ({zeta_i^(k), phi} - {zeta_(i-1)^(k), phi})
        let n = 3;
        let cfg = ExperimentConfig { t_grid: vec![15.0], ..small(n, 4) };
        let (fit, _) = converge_angle(&cfg).unwrap();
        let rows: Vec<_> = phi_levels(n).collect();
        let cols: Vec<_> = angle_levels(n).collect();
        let oracle = |s: f64| -> Vec<Vec<i64>> {
            rows.iter()
                .map(|&(q, p)| {
                    cols.iter()
                        .map(|&(i, k)| (2.0 * s * (predicted_bracket(n, i, k, q, p) - predicted_bracket(n, i - 1, k, q, p))).round() as i64)
                        .collect()
                })
                .collect()
        };
        assert!(fit.rounded == oracle(1.0) || fit.rounded == oracle(-1.0), "{:?}", fit.rounded);
    }

    #[test]
    fn symmetric_section_is_positive() {
        let cfg = small(3, 3);
        for s in sample_h0(&cfg).unwrap() {
            let r = gw_from_coordinates(&s.pattern, &AnglePattern::zeros(3), 20.0).unwrap();
            let chart = cluster_chart(&r.b, 20.0).unwrap();
            assert!(phi_levels(3).all(|(i, k)| wrap_angle(chart.phi(i, k)).abs() < 1e-9));
        }
    }

    #[test]
    fn chambers_n2() {
        let cfg = ExperimentConfig { t_grid: vec![10.0], ..small(2, 3) };
        let (out, rep) = chambers(&cfg).unwrap();
        assert!(out.iter().all(|o| o.distinct_chambers == 2));
        assert!(rep.passed(), "{:?}", rep.failures());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let cfg = ExperimentConfig { t_grid: vec![5.0, 10.0], ..small(2, 2) };
        let rep = converge_action(&cfg).unwrap();
        let mut buf = vec![];
        write_csv(&rep, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "experiment,seed,sample,t,coordinate,value,reference,error");
        assert_eq!(lines.len(), 1 + 2 * 2 * 3);
        assert!(lines[1].starts_with("converge-action,0,0,5.0000000000000000e0,zeta_1^(1),"));
    }

    #[test]
    fn verify_default_and_corrupted() {
        let cfg = small(3, 4);
        let rep = verify(&cfg).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures());
        let mut bad = cfg.clone();
        bad.set_tol("master", 1e-30).unwrap();
        let rep = verify(&bad).unwrap();
        assert!(!rep.passed());
        assert!(rep.failures().iter().any(|c| c.name == "master_equations"));
    }
}
