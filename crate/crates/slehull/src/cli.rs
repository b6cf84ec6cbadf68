//! Experiment runner: flat config file plus flag overrides in, seeded and
//! reproducible CSV/JSON artifacts out.
//!
//! Every run writes three files: the report itself, a manifest echoing the
//! resolved configuration (byte-identical across reruns), and a segregated
//! wall-time file so the other two stay reproducible.

use crate::density;
use crate::loewner;
use crate::moments::{self, MomentIndex, MomentSolver};
use crate::sde::{self, SleParams, StepConfig};
use crate::stationarity;
use crate::stats;
use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "slehull", version, about = "Stopped-hull SLE_kappa(rho) experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandKind,
}

#[derive(Subcommand, Debug)]
pub enum CommandKind {
    /// Dump one driving path (n = 1) or per-replica coefficient records.
    Simulate(Flags),
    /// Monte Carlo coefficient moments with exact reference values.
    MomentsMc(Flags),
    /// Exact moments as rational functions of kappa.
    MomentsExact(Flags),
    /// KS test of simulated 2*tau against the analytic capacity law.
    DensityTest(Flags),
    /// KS comparison of the flowed ensemble against direct samples.
    StationarityTest(Flags),
    /// Parity and numerator-degree report over an index family.
    ReversibilityReport(Flags),
}

impl CommandKind {
    fn name(&self) -> &'static str {
        match self {
            CommandKind::Simulate(_) => "simulate",
            CommandKind::MomentsMc(_) => "moments-mc",
            CommandKind::MomentsExact(_) => "moments-exact",
            CommandKind::DensityTest(_) => "density-test",
            CommandKind::StationarityTest(_) => "stationarity-test",
            CommandKind::ReversibilityReport(_) => "reversibility-report",
        }
    }

    fn flags(&self) -> &Flags {
        match self {
            CommandKind::Simulate(f)
            | CommandKind::MomentsMc(f)
            | CommandKind::MomentsExact(f)
            | CommandKind::DensityTest(f)
            | CommandKind::StationarityTest(f)
            | CommandKind::ReversibilityReport(f) => f,
        }
    }
}

/// Every config-file option, overridable on the command line.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// Flat TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<f64>,
    /// Flow time (stationarity-test) or simulation horizon (simulate).
    #[arg(long)]
    pub t: Option<f64>,
    /// Replica count.
    #[arg(long)]
    pub n: Option<u64>,
    /// Truncation order M (reversibility-report: max degree N).
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    pub format: Option<String>,
    /// Moment indices as exponent lists, e.g. "1;2;0,1" for a1, a1^2, a2.
    #[arg(long)]
    pub indices: Option<String>,
    #[arg(long)]
    pub dt_max: Option<f64>,
    #[arg(long)]
    pub step_factor: Option<f64>,
    #[arg(long)]
    pub eps_abs: Option<f64>,
    #[arg(long)]
    pub t_cap: Option<f64>,
    /// Exit 3 when a statistical check fails.
    #[arg(long = "assert")]
    pub assert_mode: bool,
}

/// The config-file mirror of [`Flags`].
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    kappa: Option<f64>,
    rho: Option<f64>,
    x: Option<f64>,
    y: Option<f64>,
    t: Option<f64>,
    n: Option<u64>,
    order: Option<usize>,
    seed: Option<u64>,
    threads: Option<usize>,
    out: Option<PathBuf>,
    format: Option<String>,
    indices: Option<Vec<Vec<u32>>>,
    dt_max: Option<f64>,
    step_factor: Option<f64>,
    eps_abs: Option<f64>,
    t_cap: Option<f64>,
    #[serde(rename = "assert")]
    assert_mode: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Fully resolved run description.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub command: String,
    pub params: SleParams,
    pub cfg: StepConfig,
    pub order: usize,
    pub n: u64,
    pub t: Option<f64>,
    pub indices: Vec<MomentIndex>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
    pub format: Format,
    pub assert_mode: bool,
}

#[derive(serde::Serialize)]
struct Manifest<'a> {
    command: &'a str,
    params: &'a SleParams,
    cfg: &'a StepConfig,
    order: usize,
    n: u64,
    t: Option<f64>,
    indices: Vec<String>,
    seed: u64,
    out: &'a Path,
    format: Format,
    assert_mode: bool,
    version: &'a str,
}

fn parse_indices_flag(s: &str) -> Result<Vec<MomentIndex>, String> {
    let mut out = Vec::new();
    for part in s.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let k: Result<Vec<u32>, _> = part.split(',').map(|v| v.trim().parse()).collect();
        let idx = MomentIndex::new(k.map_err(|e| format!("bad index '{part}': {e}"))?);
        if idx.is_empty() {
            return Err(format!("index '{part}' is empty"));
        }
        out.push(idx);
    }
    if out.is_empty() {
        return Err("no indices given".into());
    }
    Ok(out)
}

fn default_indices() -> Vec<MomentIndex> {
    [vec![1], vec![2], vec![0, 1], vec![1, 1], vec![0, 2]]
        .into_iter()
        .map(MomentIndex::new)
        .collect()
}

/// Merge config file and flags (flags win) into a validated run description.
pub fn resolve(command: &CommandKind) -> Result<ExperimentConfig, String> {
    let flags = command.flags();
    let file: FileConfig = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            toml::from_str(&text).map_err(|e| format!("malformed config: {e}"))?
        }
        None => FileConfig::default(),
    };

    let kappa = flags.kappa.or(file.kappa).unwrap_or(4.0);
    let rho = flags.rho.or(file.rho).unwrap_or(kappa - 6.0);
    let x = flags.x.or(file.x).unwrap_or(-1.0);
    let y = flags.y.or(file.y).unwrap_or(1.0);
    let params = SleParams::new(kappa, rho, x, y).map_err(|e| e.to_string())?;

    let defaults = StepConfig::default();
    let cfg = StepConfig {
        dt_max: flags.dt_max.or(file.dt_max).unwrap_or(defaults.dt_max),
        step_factor: flags
            .step_factor
            .or(file.step_factor)
            .unwrap_or(defaults.step_factor),
        eps_abs: flags.eps_abs.or(file.eps_abs).unwrap_or(defaults.eps_abs),
        t_cap: flags.t_cap.or(file.t_cap).unwrap_or(defaults.t_cap),
    };
    cfg.validate().map_err(|e| e.to_string())?;

    let indices = match (&flags.indices, &file.indices) {
        (Some(s), _) => parse_indices_flag(s)?,
        (None, Some(list)) => {
            let v: Vec<MomentIndex> = list
                .iter()
                .map(|k| MomentIndex::new(k.clone()))
                .filter(|i| !i.is_empty())
                .collect();
            if v.is_empty() {
                return Err("config indices are all empty".into());
            }
            v
        }
        (None, None) => default_indices(),
    };

    let format = match flags.format.clone().or(file.format).as_deref() {
        None | Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        Some(other) => return Err(format!("unknown format '{other}'")),
    };
    let name = command.name();
    let out = flags
        .out
        .clone()
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from(format!("{name}.{}", format.ext())));

    Ok(ExperimentConfig {
        command: name.to_string(),
        params,
        cfg,
        order: flags.order.or(file.order).unwrap_or(4),
        n: flags.n.or(file.n).unwrap_or(1000),
        t: flags.t.or(file.t),
        indices,
        seed: flags.seed.or(file.seed).unwrap_or(0),
        threads: flags.threads.or(file.threads),
        out,
        format,
        assert_mode: flags.assert_mode || file.assert_mode.unwrap_or(false),
    })
}

struct RunOutput {
    report: Vec<u8>,
    /// (suffix appended to the output stem, contents).
    extra: Vec<(String, Vec<u8>)>,
    assert_failed: bool,
}

fn require_hitting(params: &SleParams) -> Result<(), String> {
    let nu = params.bessel_index();
    if sde::hits_zero(nu) {
        Ok(())
    } else {
        Err(format!(
            "this command requires an a.s. finite swallowing time, i.e. bessel index nu < 1; \
             got nu = {nu} for kappa = {}, rho = {}",
            params.kappa, params.rho
        ))
    }
}

fn lambda(params: &SleParams) -> f64 {
    (params.x - params.y).abs() / 2.0
}

fn csv_bool(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

fn run_simulate(ec: &ExperimentConfig) -> Result<RunOutput, String> {
    let mut report = Vec::new();
    if ec.n <= 1 {
        let mut rng = sde::replica_rng(ec.seed, 0);
        let path = match ec.t {
            Some(t) => sde::simulate_until(&ec.params, &ec.cfg, t, &mut rng),
            None => {
                require_hitting(&ec.params)?;
                sde::simulate_to_hit(&ec.params, &ec.cfg, &mut rng)
            }
        }
        .map_err(|e| e.to_string())?;
        match ec.format {
            Format::Csv => path.write_csv(&mut report).map_err(|e| e.to_string())?,
            Format::Json => {
                let v = serde_json::json!({
                    "schema": 1,
                    "t": path.times,
                    "X": path.x_vals,
                    "Y": path.y_vals,
                    "Z": path.z_vals,
                    "absorbed": path.absorbed,
                    "tau": path.tau,
                });
                serde_json::to_writer_pretty(&mut report, &v).map_err(|e| e.to_string())?;
                report.push(b'\n');
            }
        }
    } else {
        require_hitting(&ec.params)?;
        let records = loewner::sample_replicas(&ec.params, &ec.cfg, ec.order, ec.n, ec.seed)
            .map_err(|e| e.to_string())?;
        match ec.format {
            Format::Csv => {
                let mut s = String::from("# schema=1\nreplica,tau");
                for j in 1..=ec.order {
                    let _ = write!(s, ",a{j}");
                }
                s.push('\n');
                for rec in records.iter().flatten() {
                    let _ = write!(s, "{},{:.17e}", rec.replica, rec.tau);
                    for v in &rec.a {
                        let _ = write!(s, ",{v:.17e}");
                    }
                    s.push('\n');
                }
                report = s.into_bytes();
            }
            Format::Json => {
                for rec in records.iter().flatten() {
                    serde_json::to_writer(&mut report, rec).map_err(|e| e.to_string())?;
                    report.push(b'\n');
                }
            }
        }
    }
    Ok(RunOutput {
        report,
        extra: vec![],
        assert_failed: false,
    })
}

/// Exact reference for `E[prod a_i^{k_i}]` at the configured marked points,
/// by the recursion in numeric-rational mode.
fn exact_moment_value(ec: &ExperimentConfig, idx: &MomentIndex) -> f64 {
    let kappa = BigRational::from_float(ec.params.kappa).expect("finite kappa");
    let rho = BigRational::from_float(ec.params.rho).expect("finite rho");
    let graded = moments::solve_moment_numeric(idx, &kappa, &rho);
    let sigma: i8 = if ec.params.x >= ec.params.y { 1 } else { -1 };
    let base = graded.at_sigma(sigma).to_f64().unwrap_or(f64::NAN);
    base * lambda(&ec.params).powi(idx.two_n() as i32)
}

fn run_moments_mc(ec: &ExperimentConfig) -> Result<RunOutput, String> {
    require_hitting(&ec.params)?;
    let ests = loewner::estimate_moments(&ec.params, &ec.cfg, &ec.indices, ec.n, ec.seed)
        .map_err(|e| e.to_string())?;
    let exacts: Vec<f64> = ec.indices.iter().map(|i| exact_moment_value(ec, i)).collect();

    let mut assert_failed = false;
    for (est, &exact) in ests.iter().zip(&exacts) {
        if !est.tail_warning && (est.estimate - exact).abs() > 3.0 * est.se {
            assert_failed = true;
        }
    }

    let report = match ec.format {
        Format::Csv => {
            let mut s = String::from("# schema=1\nindex,estimate,se,ci_lo,ci_hi,exact_value,tail_warning\n");
            for (est, &exact) in ests.iter().zip(&exacts) {
                let _ = writeln!(
                    s,
                    "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}",
                    est.index,
                    est.estimate,
                    est.se,
                    est.ci_lo,
                    est.ci_hi,
                    exact,
                    csv_bool(est.tail_warning)
                );
            }
            s.into_bytes()
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = ests
                .iter()
                .zip(&exacts)
                .map(|(est, &exact)| {
                    let mut v = serde_json::to_value(est).unwrap();
                    v["exact_value"] = serde_json::json!(exact);
                    v
                })
                .collect();
            let mut b = serde_json::to_vec_pretty(&rows).map_err(|e| e.to_string())?;
            b.push(b'\n');
            b
        }
    };
    Ok(RunOutput {
        report,
        extra: vec![],
        assert_failed,
    })
}

fn run_moments_exact(ec: &ExperimentConfig) -> Result<RunOutput, String> {
    let symbolic = ec.params.rho == ec.params.kappa - 6.0;
    let solver = MomentSolver::new();
    let sigma: i8 = if ec.params.x >= ec.params.y { 1 } else { -1 };

    #[derive(serde::Serialize)]
    struct Row {
        index: String,
        value: String,
        factored_denominator: String,
        threshold_kappa: f64,
    }
    let mut rows = Vec::new();
    for idx in &ec.indices {
        let (value, factored) = if symbolic {
            let graded = solver.solve_moment(idx);
            let v = graded.at_sigma(sigma);
            let factored = match v.factored_denominator(32) {
                Some((c, mults)) => {
                    let mut s = format!("({c})");
                    for (j, &m) in mults.iter().enumerate() {
                        if m == 0 {
                            continue;
                        }
                        let odd = 2 * (j + 1) + 1;
                        let _ = write!(s, " * (8-{odd}k)^-{m}");
                    }
                    s
                }
                None => String::from("irreducible"),
            };
            (v.display_integer(), factored)
        } else {
            (format!("{:.17e}", exact_moment_value(ec, idx)), String::new())
        };
        rows.push(Row {
            index: idx.label(),
            value,
            factored_denominator: factored,
            threshold_kappa: idx.existence_threshold(),
        });
    }

    let report = match ec.format {
        Format::Csv => {
            let mut s =
                String::from("# schema=1\nindex,value,factored_denominator,threshold_kappa\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},\"{}\",\"{}\",{}",
                    r.index, r.value, r.factored_denominator, r.threshold_kappa
                );
            }
            s.into_bytes()
        }
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&rows).map_err(|e| e.to_string())?;
            b.push(b'\n');
            b
        }
    };
    Ok(RunOutput {
        report,
        extra: vec![],
        assert_failed: false,
    })
}

fn law_table(law: &density::CapacityLaw) -> Vec<u8> {
    let mut s = String::from("# schema=1\nx,pdf,cdf\n");
    for i in 1..200 {
        let p = i as f64 / 200.0;
        let x = law.quantile(p);
        let _ = writeln!(s, "{x:.17e},{:.17e},{:.17e}", law.pdf(x), law.cdf(x));
    }
    s.into_bytes()
}

fn run_density_test(ec: &ExperimentConfig) -> Result<RunOutput, String> {
    require_hitting(&ec.params)?;
    let law = density::capacity_law(ec.params.kappa, ec.params.rho).map_err(|e| e.to_string())?;
    let lam2 = lambda(&ec.params).powi(2);
    let records = loewner::sample_replicas(&ec.params, &ec.cfg, 1, ec.n, ec.seed)
        .map_err(|e| e.to_string())?;
    let sim: Vec<f64> = records
        .iter()
        .flatten()
        .map(|r| 2.0 * r.tau / lam2)
        .collect();
    let exact = law.sample_n(ec.n as usize, &mut sde::replica_rng(ec.seed, ec.n));
    let r = stats::ks_two_sample(&sim, &exact).map_err(|e| e.to_string())?;

    let report = match ec.format {
        Format::Csv => format!(
            "# schema=1\nn,ks_stat,p_value\n{},{:.17e},{:.17e}\n",
            sim.len(),
            r.statistic,
            r.p_value
        )
        .into_bytes(),
        Format::Json => {
            let v = serde_json::json!({
                "n": sim.len(),
                "ks_stat": r.statistic,
                "p_value": r.p_value,
            });
            let mut b = serde_json::to_vec_pretty(&v).map_err(|e| e.to_string())?;
            b.push(b'\n');
            b
        }
    };
    Ok(RunOutput {
        report,
        extra: vec![("law".into(), law_table(&law))],
        assert_failed: r.p_value < 0.01,
    })
}

fn run_stationarity_test(ec: &ExperimentConfig) -> Result<RunOutput, String> {
    require_hitting(&ec.params)?;
    let t = ec
        .t
        .ok_or_else(|| "stationarity-test requires --t (flow time)".to_string())?;
    let report = stationarity::stationarity_experiment(
        &ec.params, &ec.cfg, t, ec.order, ec.n, ec.seed,
    )
    .map_err(|e| e.to_string())?;
    let assert_failed = report.comparisons.iter().any(|c| c.p_value < 0.01);

    let bytes = match ec.format {
        Format::Csv => {
            let mut s = String::from("# schema=1\ncoeff,ks_stat,p_value,frac_tau_le_t\n");
            for c in &report.comparisons {
                let _ = writeln!(
                    s,
                    "{},{:.17e},{:.17e},{:.17e}",
                    c.coeff, c.ks_stat, c.p_value, report.frac_tau_le_t
                );
            }
            s.into_bytes()
        }
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&report).map_err(|e| e.to_string())?;
            b.push(b'\n');
            b
        }
    };
    Ok(RunOutput {
        report: bytes,
        extra: vec![],
        assert_failed,
    })
}

fn run_reversibility_report(ec: &ExperimentConfig) -> Result<RunOutput, String> {
    let solver = MomentSolver::new();
    let indices = moments::indices_up_to_degree(2 * ec.order as u64);
    let parity = moments::reversibility_parity_report(&solver, &indices);
    let degrees = moments::numerator_degree_report(&solver, &indices);
    let assert_failed = parity.iter().any(|e| e.reversibility_violation);

    let report = match ec.format {
        Format::Csv => {
            let mut s =
                String::from("# schema=1\nindex,two_n,half_integer,is_zero,reversibility_violation\n");
            for e in &parity {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    e.index,
                    e.two_n,
                    csv_bool(e.half_integer),
                    csv_bool(e.is_zero),
                    csv_bool(e.reversibility_violation)
                );
            }
            s.into_bytes()
        }
        Format::Json => {
            let v = serde_json::json!({
                "parity": parity,
                "numerator_degree_conjecture": degrees,
            });
            let mut b = serde_json::to_vec_pretty(&v).map_err(|e| e.to_string())?;
            b.push(b'\n');
            b
        }
    };
    Ok(RunOutput {
        report,
        extra: vec![],
        assert_failed,
    })
}

fn extra_path(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = out.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    out.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

/// Execute a resolved experiment; returns the process exit code.
pub fn run(ec: &ExperimentConfig) -> u8 {
    if let Some(threads) = ec.threads {
        // Ignore the error when a global pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let started = std::time::Instant::now();
    let result = match ec.command.as_str() {
        "simulate" => run_simulate(ec),
        "moments-mc" => run_moments_mc(ec),
        "moments-exact" => run_moments_exact(ec),
        "density-test" => run_density_test(ec),
        "stationarity-test" => run_stationarity_test(ec),
        "reversibility-report" => run_reversibility_report(ec),
        other => Err(format!("unknown command '{other}'")),
    };
    let output = match result {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("slehull: validation error: {msg}");
            return 2;
        }
    };
    let elapsed = started.elapsed();

    let manifest = Manifest {
        command: &ec.command,
        params: &ec.params,
        cfg: &ec.cfg,
        order: ec.order,
        n: ec.n,
        t: ec.t,
        indices: ec.indices.iter().map(|i| i.label()).collect(),
        seed: ec.seed,
        out: &ec.out,
        format: ec.format,
        assert_mode: ec.assert_mode,
        version: env!("CARGO_PKG_VERSION"),
    };
    let write_all = || -> std::io::Result<()> {
        std::fs::write(&ec.out, &output.report)?;
        for (suffix, bytes) in &output.extra {
            std::fs::write(extra_path(&ec.out, suffix), bytes)?;
        }
        let mut mbytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        mbytes.push(b'\n');
        std::fs::write(ec.out.with_extension("manifest.json"), mbytes)?;
        std::fs::write(
            ec.out.with_extension("walltime.txt"),
            format!("{:.6}\n", elapsed.as_secs_f64()),
        )?;
        Ok(())
    };
    if let Err(e) = write_all() {
        eprintln!("slehull: cannot write output: {e}");
        return 2;
    }

    if ec.assert_mode && output.assert_failed {
        eprintln!("slehull: --assert: statistical check failed");
        return 3;
    }
    0
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match resolve(&cli.command) {
        Ok(ec) => ExitCode::from(run(&ec)),
        Err(msg) => {
            eprintln!("slehull: validation error: {msg}");
            ExitCode::from(2)
        }
    }
}
