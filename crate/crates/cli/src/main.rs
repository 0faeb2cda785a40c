use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tropgz::dual::cluster_chart;
use tropgz::gw::gw;
use tropgz::gz::{action_angle, cone_gap, to_ladder};
use tropgz::lab::{self, Check, ExperimentConfig, Report};
use tropgz::tropical::{in_w_delta, size_for_variables, MinorTable, Word};
use tropgz::{ComplexMatrix, Error, HermitianMatrix, TropicalPoint};

#[derive(Parser)]
#[command(name = "tropgz", version, about = "Gelfand-Zeitlin, Ginzburg-Weinstein and tropical limit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Actions, angles and ladder of a matrix, or of seeded samples.
    Pattern {
        #[command(flatten)]
        common: Common,
        /// Matrix JSON {"n", "re", "im"}.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    /// gw_t and its chart coordinates over the t grid.
    Gw {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
    ConvergeAction {
        #[command(flatten)]
        common: Common,
    },
    ConvergeAngle {
        #[command(flatten)]
        common: Common,
    },
    BracketLimit {
        #[command(flatten)]
        common: Common,
    },
    /// m(w) for given weights, or the cone and convergence checks.
    TropicalMap {
        #[command(flatten)]
        common: Common,
        /// Comma separated weights of x_1..x_n, z_1..z_m.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        w: Option<Vec<f64>>,
    },
    Chambers {
        #[command(flatten)]
        common: Common,
    },
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// a:b:step, or a single value.
    #[arg(long)]
    t_grid: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    fd_step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// NAME=VALUE, or a bare VALUE applied to every tolerance.
    #[arg(long)]
    tol: Vec<String>,
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Argument(_) | Error::Domain(_) | Error::Sampling(_) | Error::Unsupported(_) | Error::Scale(_) => {
                Failure::Config(e.to_string())
            }
            _ => Failure::Run(e.to_string()),
        }
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::Config(format!("bad t grid {s:?}; expected a:b:step"));
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    match parts.as_slice() {
        [t] => Ok(vec![*t]),
        [a, b, step] if *step > 0.0 && b >= a => {
            let count = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|j| a + j as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

fn config(c: &Common, defaults: ExperimentConfig) -> Result<ExperimentConfig, Failure> {
    let mut cfg = defaults;
    if let Some(n) = c.n {
        cfg.n = n;
    }
    if let Some(d) = c.delta {
        cfg.delta = d;
    }
    if let Some(g) = &c.t_grid {
        cfg.t_grid = parse_grid(g)?;
    }
    if let Some(s) = c.samples {
        cfg.samples = s;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(h) = c.fd_step {
        cfg.fd_step = h;
    }
    for item in &c.tol {
        match item.split_once('=') {
            Some((name, v)) => {
                let v = v.parse().map_err(|_| Failure::Config(format!("bad tolerance value in {item:?}")))?;
                cfg.set_tol(name, v)?;
            }
            None => {
                let v: f64 = item.parse().map_err(|_| Failure::Config(format!("bad tolerance {item:?}")))?;
                for t in cfg.tolerances.values_mut() {
                    *t = v;
                }
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn matrix_json(m: &ComplexMatrix) -> Value {
    let rows = m.rows();
    json!({
        "n": m.n(),
        "re": rows.iter().map(|r| r.iter().map(|z| z.re).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "im": rows.iter().map(|r| r.iter().map(|z| z.im).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

fn read_matrix(path: &PathBuf) -> Result<HermitianMatrix, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let n = v["n"].as_u64().ok_or_else(|| Failure::Config("matrix JSON needs an integer n".into()))? as usize;
    let part = |key: &str| -> Result<Vec<Vec<f64>>, Failure> {
        let rows: Vec<Vec<f64>> = serde_json::from_value(v[key].clone()).map_err(|e| Failure::Config(format!("field {key}: {e}")))?;
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Failure::Config(format!("field {key} must be {n} x {n}")));
        }
        Ok(rows)
    };
    let m = ComplexMatrix::from_parts(&part("re")?, &part("im")?)?;
    Ok(HermitianMatrix::try_new(m, 1e-12)?)
}

fn data_report(name: &str, cfg: &ExperimentConfig) -> Report {
    Report { experiment: name.into(), config: cfg.clone(), records: vec![], checks: vec![], skipped: vec![] }
}

fn push(rep: &mut Report, sample: u64, t: f64, coordinate: String, value: f64) {
    rep.records.push(lab::Record { seed: rep.config.seed, sample, t, coordinate, value, reference: f64::NAN, error: f64::NAN });
}

fn inputs(cfg: &ExperimentConfig, matrix: &Option<PathBuf>) -> Result<Vec<(u64, HermitianMatrix)>, Failure> {
    match matrix {
        Some(p) => Ok(vec![(0, read_matrix(p)?)]),
        None => Ok(lab::sample_h0(cfg)?.into_iter().map(|s| (s.index, s.matrix)).collect()),
    }
}

fn pattern(cfg: &ExperimentConfig, matrix: &Option<PathBuf>) -> Result<(Report, Value), Failure> {
    let mut rep = data_report("pattern", cfg);
    let mut out = vec![];
    for (idx, a) in inputs(cfg, matrix)? {
        let (p, psi) = action_angle(&a)?;
        let ell = to_ladder(&p);
        for (k, row) in p.lambda.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                push(&mut rep, idx, 0.0, format!("lambda_{}^({})", i + 1, k + 1), *v);
            }
        }
        for (k, row) in psi.psi.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                push(&mut rep, idx, 0.0, format!("psi_{}^({})", i + 1, k + 1), *v);
            }
        }
        out.push(json!({"sample": idx, "matrix": matrix_json(a.as_matrix()), "pattern": p, "angles": psi, "ladder": ell, "cone_gap": cone_gap(&ell).delta}));
    }
    Ok((rep, Value::Array(out)))
}

fn gw_cmd(cfg: &ExperimentConfig, matrix: &Option<PathBuf>) -> Result<(Report, Value), Failure> {
    let mut rep = data_report("gw", cfg);
    let mut out = vec![];
    for (idx, a) in inputs(cfg, matrix)? {
        for &t in &cfg.t_grid {
            let r = gw(&a, t)?;
            let chart = cluster_chart(&r.b, t)?;
            for (k, row) in chart.zeta.iter().enumerate() {
                for (i, v) in row.iter().enumerate() {
                    push(&mut rep, idx, t, format!("zeta_{}^({})", i + 1, k + 1), *v);
                }
            }
            for (k, row) in chart.phi.iter().enumerate() {
                for (i, v) in row.iter().enumerate() {
                    push(&mut rep, idx, t, format!("phi_{}^({})", i + 1, k + 1), *v);
                }
            }
            out.push(json!({"sample": idx, "t": t, "b": matrix_json(r.b.as_matrix()), "chart": chart}));
        }
    }
    Ok((rep, Value::Array(out)))
}

fn tropical_map(cfg: &ExperimentConfig, w: &Option<Vec<f64>>) -> Result<(Report, Value), Failure> {
    if let Some(w) = w {
        let n = size_for_variables(w.len())?;
        let table = MinorTable::new(&Word::standard(n))?;
        let m = table.tropical_gz(w);
        let mut rep = data_report("tropical-map", cfg);
        for k in 1..=n {
            for i in 1..=k {
                push(&mut rep, 0, 0.0, format!("m_{i}^({k})"), m.get(i, k));
            }
        }
        let point = TropicalPoint { w: w.clone() };
        let in_w = if n <= 4 { Some(in_w_delta(&point, cfg.delta)?) } else { None };
        let value = json!({
            "w": w,
            "image": m,
            "cone_gap": cone_gap(&m).delta,
            "in_linearity_chamber": table.in_linearity_chamber(w, 1e-12),
            "in_w_delta": in_w,
        });
        return Ok((rep, value));
    }
    let cone = lab::tropical_cone(cfg, 500 * cfg.samples, 50 * cfg.samples)?;
    let conv = lab::tropical_convergence(cfg)?;
    let mut rep = data_report("tropical-map", cfg);
    rep.records = cone.records.into_iter().chain(conv.records).collect();
    rep.checks = cone.checks.into_iter().chain(conv.checks).collect();
    rep.skipped = cone.skipped.into_iter().chain(conv.skipped).collect();
    Ok((rep, Value::Null))
}

fn run(cli: Cli) -> Result<(Report, Value, Common), Failure> {
    let d = ExperimentConfig::default;
    Ok(match cli.command {
        Command::Pattern { common, matrix } => {
            let (r, v) = pattern(&config(&common, ExperimentConfig { samples: 5, ..d() })?, &matrix)?;
            (r, v, common)
        }
        Command::Gw { common, matrix } => {
            let (r, v) = gw_cmd(&config(&common, ExperimentConfig { samples: 1, t_grid: vec![1.0, 5.0, 10.0], ..d() })?, &matrix)?;
            (r, v, common)
        }
        Command::ConvergeAction { common } => (lab::converge_action(&config(&common, d())?)?, Value::Null, common),
        Command::ConvergeAngle { common } => {
            let (fit, r) = lab::converge_angle(&config(&common, ExperimentConfig { samples: 60, t_grid: vec![15.0], ..d() })?)?;
            (r, serde_json::to_value(fit).expect("serializable"), common)
        }
        Command::BracketLimit { common } => {
            let (table, r) = lab::bracket_limit(&config(&common, ExperimentConfig { samples: 5, t_grid: vec![12.0], ..d() })?)?;
            (r, serde_json::to_value(table).expect("serializable"), common)
        }
        Command::TropicalMap { common, w } => {
            let (r, v) = tropical_map(&config(&common, d())?, &w)?;
            (r, v, common)
        }
        Command::Chambers { common } => {
            let (out, r) = lab::chambers(&config(&common, ExperimentConfig { samples: 5, t_grid: vec![20.0], ..d() })?)?;
            (r, serde_json::to_value(out).expect("serializable"), common)
        }
        Command::Verify { common } => (lab::verify(&config(&common, ExperimentConfig { samples: 10, ..d() })?)?, Value::Null, common),
    })
}

fn emit(rep: &Report, result: &Value, common: &Common) -> io::Result<()> {
    let mut buf = vec![];
    match common.format {
        Format::Csv => lab::write_csv(rep, &mut buf)?,
        Format::Json => {
            let mut doc = serde_json::to_value(rep).expect("serializable");
            doc["pass"] = json!(rep.checks.is_empty() || rep.passed());
            if !result.is_null() {
                doc["result"] = result.clone();
            }
            serde_json::to_writer_pretty(&mut buf, &doc)?;
            buf.push(b'\n');
        }
    }
    match &common.out {
        Some(p) => fs::write(p, buf),
        None => io::stdout().write_all(&buf),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((rep, result, common)) => {
            if let Err(e) = emit(&rep, &result, &common) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            let failed: Vec<&Check> = rep.failures();
            for c in &failed {
                eprintln!("FAIL {}: {:e} (tolerance {:e})", c.name, c.value, c.tolerance);
            }
            if failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
