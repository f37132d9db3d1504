use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spinprep_core::amplification::amplified_expand;
use spinprep_core::expansion::{Direction, ExpansionCase};
use spinprep_core::io::{parse_half, StateFile, TraceRow};
use spinprep_core::planner::{self, CountRule, Region};
use spinprep_core::scattering::{self, KrausCache, ScatteringDevice, StopStrategy, Table};
use spinprep_core::{GeneralizedCoupling, SpinSpec};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const THREADS_ENV: &str = "SPINPREP_THREADS";

#[derive(Parser)]
#[command(name = "spinprep", version, about = "Spin eigenstate and Dicke state preparation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prepare a Dicke state or a branching-path eigenstate.
    Prepare(PrepareArgs),
    /// Stage counts of the modified planner as `n,k,cost`.
    Cost(CostArgs),
    /// Feasibility region of every `(n, k)` as `n,k,region`.
    Regions(RegionArgs),
    /// Device fidelity tables.
    Tables(TableArgs),
    /// Effective exchange strengths per electron as `l,Jdt,variance`.
    Strengths(StrengthArgs),
    /// Coefficient trace of a spin-pumped expansion.
    Trace(TraceArgs),
    /// One expansion on the scattering device.
    Scatter(ScatterArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Ideal,
    Device,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    Exact,
    Estimate,
}

impl From<Rule> for CountRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Exact => CountRule::Exact,
            Rule::Estimate => CountRule::Estimate,
        }
    }
}

#[derive(Args, Clone)]
struct DeviceArgs {
    #[arg(long, default_value_t = std::f64::consts::PI)]
    kd: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    kd0: f64,
    #[arg(long, default_value_t = 1000.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-4)]
    omega: f64,
}

impl DeviceArgs {
    fn device(&self) -> ScatteringDevice {
        ScatteringDevice { kd: self.kd, kd0: self.kd0, gamma: self.gamma, omega: self.omega, ..ScatteringDevice::default() }
    }
}

#[derive(Args)]
struct PrepareArgs {
    /// Dicke target `n k`.
    #[arg(long, num_args = 2, value_names = ["N", "K"], conflicts_with = "path")]
    dicke: Option<Vec<usize>>,
    /// Branching path such as `11211`.
    #[arg(long, requires = "m")]
    path: Option<String>,
    /// Total `S_z` of a path target, e.g. `0.5` or `-3/2`.
    #[arg(long = "M", alias = "m", id = "m", allow_hyphen_values = true)]
    m: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Ideal)]
    mode: Mode,
    /// All-coupled exchange `J′` for ideal expansions.
    #[arg(long, default_value_t = 1.0)]
    jprime: f64,
    /// Exit with status 2 below this fidelity.
    #[arg(long, default_value_t = 0.99)]
    threshold: f64,
    #[arg(long)]
    state_out: Option<PathBuf>,
    #[arg(long)]
    plan_out: Option<PathBuf>,
    /// Report JSON; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    device: DeviceArgs,
}

#[derive(Args)]
struct CostArgs {
    #[arg(long, default_value_t = 50)]
    nmax: usize,
    #[arg(long, value_enum, default_value_t = Rule::Exact)]
    rule: Rule,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long, default_value_t = 40)]
    nmax: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TableArgs {
    /// `I`, `II` or `III`.
    #[arg(long)]
    which: String,
    #[arg(long, default_value_t = 9)]
    nmax: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    device: DeviceArgs,
}

#[derive(Args)]
struct StrengthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    pol: u8,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    device: DeviceArgs,
}

#[derive(Args)]
struct TraceArgs {
    /// Start `D^n_k`.
    #[arg(long, num_args = 2, value_names = ["N", "K"], conflicts_with = "path")]
    dicke: Option<Vec<usize>>,
    /// Start path.
    #[arg(long, requires = "m")]
    path: Option<String>,
    #[arg(long = "M", alias = "m", id = "m", allow_hyphen_values = true)]
    m: Option<String>,
    #[arg(long, default_value_t = 1)]
    bit: u8,
    /// Lower the spin instead of raising it.
    #[arg(long)]
    down: bool,
    #[arg(long, default_value_t = 1.0)]
    jprime: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScatterArgs {
    /// Start `D^n_k`.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    bit: u8,
    #[arg(long)]
    pump: bool,
    /// Fail when the diagonal families never cross.
    #[arg(long, conflicts_with = "pump")]
    strict: bool,
    /// Override the polarization rule.
    #[arg(long)]
    pol: Option<u8>,
    /// Per-electron CSV log.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    device: DeviceArgs,
}

fn sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_json(&Some(path.to_path_buf()), value)
}

fn csv_writer(path: &Option<PathBuf>) -> Result<csv::Writer<Box<dyn Write>>> {
    Ok(csv::Writer::from_writer(sink(path)?))
}

fn dicke_pair(v: &Option<Vec<usize>>) -> Option<(usize, usize)> {
    v.as_ref().map(|d| (d[0], d[1]))
}

#[derive(Serialize)]
struct PrepareReport {
    target: String,
    mode: &'static str,
    fidelity: f64,
    threshold: f64,
    passed: bool,
    total_cost: Option<usize>,
    steps: usize,
}

fn prepare(a: PrepareArgs) -> Result<ExitCode> {
    let (state, plan_json, report) = match (dicke_pair(&a.dicke), &a.path) {
        (Some((n, k)), _) => {
            let plan = planner::modified_plan(n, k)?;
            let (state, fidelity, mode) = match a.mode {
                Mode::Ideal => {
                    let r = planner::execute_plan(&plan, a.jprime, a.jprime)?;
                    (r.state, r.fidelity, "ideal")
                }
                Mode::Device => {
                    let cache = KrausCache::new(a.device.device());
                    let (s, f) = scattering::execute_plan_on_device(&cache, &plan)?;
                    (s, f, "device")
                }
            };
            let report = PrepareReport {
                target: format!("D^{n}_{k}"),
                mode,
                fidelity,
                threshold: a.threshold,
                passed: fidelity >= a.threshold,
                total_cost: Some(plan.total_cost),
                steps: plan.steps.len(),
            };
            (state, serde_json::to_value(&plan)?, report)
        }
        (None, Some(path)) => {
            if matches!(a.mode, Mode::Device) {
                bail!("device mode prepares Dicke targets only");
            }
            let m = parse_half(a.m.as_deref().unwrap_or_default())?;
            let spec = SpinSpec::new(path, m)?;
            let (state, steps, fidelity) = planner::prepare_spin_path(&spec, a.jprime)?;
            let report = PrepareReport {
                target: format!("X({}, {}, {}, {})", spec.n, spec.s, spec.m, spec.path),
                mode: "ideal",
                fidelity,
                threshold: a.threshold,
                passed: fidelity >= a.threshold,
                total_cost: None,
                steps: steps.len(),
            };
            (state, serde_json::to_value(&steps)?, report)
        }
        (None, None) => bail!("give --dicke N K or --path P --M m"),
    };
    if let Some(p) = &a.state_out {
        write_json_file(p, &StateFile::from(&state))?;
    }
    if let Some(p) = &a.plan_out {
        write_json_file(p, &plan_json)?;
    }
    write_json(&a.out, &report)?;
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn cost(a: CostArgs) -> Result<ExitCode> {
    if a.nmax < 2 {
        bail!("--nmax must be at least 2");
    }
    let mut w = csv_writer(&a.out)?;
    for cell in planner::cost_table(a.nmax, a.rule.into()) {
        w.serialize(cell)?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn regions(a: RegionArgs) -> Result<ExitCode> {
    let mut w = csv_writer(&a.out)?;
    w.write_record(["n", "k", "region"])?;
    for c in planner::region_map(a.nmax) {
        let r = match c.region {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::Outside => "outside",
        };
        w.write_record([c.n.to_string(), c.k.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn tables(a: TableArgs) -> Result<ExitCode> {
    let which: Table = a.which.parse()?;
    if !(2..=10).contains(&a.nmax) {
        bail!("--nmax must be in 2..=10");
    }
    let cache = KrausCache::new(a.device.device());
    let cells = scattering::reproduce_table(&cache, which, a.nmax)?;
    let cols = cells.iter().map(|c| c.k).max().unwrap_or(1);
    let mut w = csv_writer(&a.out)?;
    let mut header = vec!["n".to_string()];
    header.extend((1..=cols).map(|k| k.to_string()));
    w.write_record(&header)?;
    for n in 2..=a.nmax {
        let mut row = vec![n.to_string()];
        for k in 1..=cols {
            row.push(match cells.iter().find(|c| c.n == n && c.k == k) {
                Some(c) => match c.pumped {
                    Some(p) => format!("{:.2} ({:.2})", c.fidelity, p),
                    None => format!("{:.2}", c.fidelity),
                },
                None => String::new(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn strengths(a: StrengthArgs) -> Result<ExitCode> {
    if a.k > a.n || a.pol > 1 {
        bail!("need k ≤ n and pol ∈ {{0, 1}}");
    }
    let cache = KrausCache::new(a.device.device());
    let s = scattering::extract_strengths(&cache, a.n, a.k, a.pol)?;
    let mut w = csv_writer(&a.out)?;
    w.write_record(["l", "Jdt", "variance"])?;
    for (l, (j, v)) in s.j_dt.iter().zip(&s.variances).enumerate() {
        w.write_record([l.to_string(), format!("{j:.12e}"), format!("{v:.12e}")])?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

fn trace(a: TraceArgs) -> Result<ExitCode> {
    let start = match (dicke_pair(&a.dicke), &a.path) {
        (Some((n, k)), _) => SpinSpec::dicke(n, k)?,
        (None, Some(p)) => SpinSpec::new(p, parse_half(a.m.as_deref().unwrap_or_default())?)?,
        (None, None) => bail!("give --dicke N K or --path P --M m"),
    };
    if a.bit > 1 {
        bail!("--bit must be 0 or 1");
    }
    let case = ExpansionCase::new(a.bit, if a.down { Direction::Down } else { Direction::Up });
    let target = spinprep_core::expansion::target_spec(&start, case)?;
    let coupling = GeneralizedCoupling::all_coupled(target.n, target.k(), a.jprime)?;
    let result = amplified_expand(&start, case, &coupling)?;
    let mut w = csv_writer(&a.out)?;
    for t in &result.trace {
        w.serialize(TraceRow::from(t))?;
    }
    w.flush()?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ScatterReport {
    start: (usize, usize),
    target: (usize, usize),
    polarization: u8,
    fidelity: f64,
    omega_dt: f64,
    n_stop: usize,
    n_estimate: f64,
    n_phase: usize,
    pump_runs: Vec<(usize, usize)>,
}

fn scatter(a: ScatterArgs) -> Result<ExitCode> {
    if a.bit > 1 || a.k > a.n || a.pol.is_some_and(|p| p > 1) {
        bail!("need bit, pol ∈ {{0, 1}} and k ≤ n");
    }
    let cache = KrausCache::new(a.device.device());
    let strategy = match (a.pump, a.strict) {
        (true, _) => StopStrategy::Pump,
        (_, true) => StopStrategy::Strict,
        _ => StopStrategy::ClosestApproach,
    };
    let start = spinprep_core::dicke(a.n, a.k)?;
    let r = scattering::simulate_expansion(&cache, &start, a.bit, strategy, a.pol)?;
    if let Some(p) = &a.log {
        let mut w = csv_writer(&Some(p.clone()))?;
        w.write_record(["N", "d1sq", "d2sq", "fidelity"])?;
        for rec in &r.log.records {
            w.write_record([rec.n.to_string(), format!("{:.12e}", rec.d1sq), format!("{:.12e}", rec.d2sq), format!("{:.12e}", rec.fidelity)])?;
        }
        w.flush()?;
    }
    let report = ScatterReport {
        start: (a.n, a.k),
        target: (a.n + 1, a.k + a.bit as usize),
        polarization: r.polarization,
        fidelity: r.fidelity,
        omega_dt: r.omega_dt,
        n_stop: r.log.n_stop,
        n_estimate: r.log.n_estimate,
        n_phase: r.log.n_phase,
        pump_runs: r.log.pump_runs,
    };
    write_json(&a.out, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| anyhow!("{THREADS_ENV}={v:?} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Prepare(a) => prepare(a),
        Command::Cost(a) => cost(a),
        Command::Regions(a) => regions(a),
        Command::Tables(a) => tables(a),
        Command::Strengths(a) => strengths(a),
        Command::Trace(a) => trace(a),
        Command::Scatter(a) => scatter(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
