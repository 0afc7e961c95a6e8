//! Command-line experiment runner.
//!
//! `sweep` solves every (K, scheme) point of a two-ring study and writes one
//! CSV row per point and source; `policy` prints a single solved allocation
//! with solver diagnostics; `simulate` runs the slot simulator on one
//! allocation and writes the per-user trace.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::analysis::{analytic_report, PerformanceReport, ReportSource};
use crate::error::{Error, Result};
use crate::fmt::num;
use crate::model::{AllocationPolicy, ChannelMode, NetworkConfig, Scenario};
use crate::simulator::{simulate_from, write_trace_csv, BatteryMode};
use crate::solver::{solve_scheme, Scheme, SchemeSolution};

pub const DEFAULT_K_LIST: [usize; 8] = [2, 4, 6, 8, 10, 12, 14, 16];
pub const DEFAULT_SLOTS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "aloha-pf",
    version,
    about = "Proportionally fair allocation for RF-powered slotted ALOHA"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve and evaluate a grid of user counts and schemes.
    Sweep(SweepArgs),
    /// Print one solved allocation with diagnostics.
    Policy(PolicyArgs),
    /// Simulate one allocation slot by slot and write the per-user trace.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// `key = value` file with scenario parameters; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Inner ring radius, meters.
    #[arg(long)]
    pub r1: Option<f64>,
    /// Outer ring radius, meters.
    #[arg(long)]
    pub r2: Option<f64>,
    /// Nakagami shape parameter.
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    /// BS peak power, watts.
    #[arg(long)]
    pub pmax: Option<f64>,
    /// BS average power, watts.
    #[arg(long)]
    pub pavg: Option<f64>,
    /// Noise power, watts.
    #[arg(long)]
    pub n0: Option<f64>,
    /// nakagami or static.
    #[arg(long)]
    pub channel: Option<ChannelMode>,
}

impl ScenarioArgs {
    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(&self) -> Result<Scenario> {
        let mut s = Scenario::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            s.apply_kv(&text)?;
        }
        let overrides = [
            (self.r1, &mut s.r1),
            (self.r2, &mut s.r2),
            (self.m, &mut s.m),
            (self.eta, &mut s.eta),
            (self.pmax, &mut s.p_max),
            (self.pavg, &mut s.p_avg),
            (self.n0, &mut s.n0),
        ];
        for (flag, field) in overrides {
            if let Some(v) = flag {
                *field = v;
            }
        }
        if let Some(c) = self.channel {
            s.channel_mode = c;
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Comma-separated even user counts.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_K_LIST)]
    pub k_list: Vec<usize>,
    /// Comma-separated subset of proposed, benchmark, static.
    #[arg(long, value_delimiter = ',', default_values_t = [Scheme::Proposed, Scheme::Benchmark])]
    pub scheme: Vec<Scheme>,
    /// Also simulate every point and add `simulated` rows.
    #[arg(long)]
    pub simulate: bool,
    #[arg(long, default_value_t = DEFAULT_SLOTS)]
    pub slots: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// ideal or tracked.
    #[arg(long, default_value = "ideal")]
    pub battery: BatteryMode,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Number of users; overrides the config key `K`.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = Scheme::Proposed)]
    pub scheme: Scheme,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = Scheme::Proposed)]
    pub scheme: Scheme,
    #[arg(long, default_value_t = DEFAULT_SLOTS)]
    pub slots: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value = "tracked")]
    pub battery: BatteryMode,
    /// Initial battery level of every user, joules.
    #[arg(long, default_value_t = 0.0)]
    pub initial_battery: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub k_values: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub simulate: bool,
    pub slots: u64,
    pub seed: u64,
    pub battery: BatteryMode,
    pub output_path: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn new(scenario: Scenario, k_values: Vec<usize>, schemes: Vec<Scheme>) -> Self {
        Self {
            scenario,
            k_values,
            schemes,
            simulate: false,
            slots: DEFAULT_SLOTS,
            seed: DEFAULT_SEED,
            battery: BatteryMode::Ideal,
            output_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() {
            return Err(Error::InvalidConfig("k list is empty".into()));
        }
        if let Some(k) = self.k_values.iter().find(|&&k| k < 2 || !k.is_multiple_of(2)) {
            return Err(Error::InvalidConfig(format!(
                "user counts must be even and >= 2, got {k}"
            )));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidConfig("scheme set is empty".into()));
        }
        if self.simulate && self.slots == 0 {
            return Err(Error::InvalidConfig("slots must be >= 1 when simulating".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub scheme: Scheme,
    pub channel: ChannelMode,
    pub source: ReportSource,
    pub policy: AllocationPolicy,
    pub report: PerformanceReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub k: usize,
    pub scheme: Scheme,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Width of the per-user column groups.
    pub k_max: usize,
    pub rows: Vec<SweepRow>,
    pub failures: Vec<PointFailure>,
}

/// Network and solution of one scheme, on the channel it is evaluated on.
pub fn solve_point(scenario: &Scenario, k: usize, scheme: Scheme) -> Result<(NetworkConfig, SchemeSolution)> {
    let channel = scheme.channel(scenario.channel_mode);
    let config = scenario.network_with_k(k)?.with_channel_mode(channel);
    let solution = solve_scheme(&config, scheme, scenario.r1, scenario.r2)?;
    Ok((config, solution))
}

fn sweep_point(spec: &ExperimentSpec, k: usize, scheme: Scheme) -> Result<Vec<SweepRow>> {
    let (config, solution) = solve_point(&spec.scenario, k, scheme)?;
    let policy = solution.policy;
    let mut rows = vec![SweepRow {
        k,
        scheme,
        channel: config.channel_mode,
        source: ReportSource::Analytic,
        report: analytic_report(&policy, &config)?,
        policy: policy.clone(),
    }];
    if spec.simulate {
        let (_, report) = simulate_from(&config, &policy, spec.slots, spec.seed, spec.battery, 0.0)?;
        rows.push(SweepRow {
            k,
            scheme,
            channel: config.channel_mode,
            source: ReportSource::Simulated,
            report,
            policy,
        });
    }
    Ok(rows)
}

/// Solves every point, in parallel, and returns rows in (K, scheme) order.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepOutcome> {
    spec.validate()?;
    let points: Vec<(usize, Scheme)> = spec
        .k_values
        .iter()
        .flat_map(|&k| spec.schemes.iter().map(move |&s| (k, s)))
        .collect();
    let results: Vec<Result<Vec<SweepRow>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = points
            .iter()
            .map(|&(k, s)| scope.spawn(move || sweep_point(spec, k, s)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join()
                    .unwrap_or_else(|_| Err(Error::Unsupported("sweep worker panicked".into())))
            })
            .collect()
    });
    let mut outcome = SweepOutcome {
        k_max: spec.k_values.iter().copied().max().unwrap_or(0),
        rows: Vec::new(),
        failures: Vec::new(),
    };
    for (&(k, scheme), res) in points.iter().zip(results) {
        match res {
            Ok(rows) => outcome.rows.extend(rows),
            Err(error) => outcome.failures.push(PointFailure { k, scheme, error }),
        }
    }
    Ok(outcome)
}

fn indexed(prefix: &str, n: usize) -> String {
    (1..=n).map(|i| format!(",{prefix}_{i}")).collect()
}

/// `K,scheme,channel,source,tau0,p0,sum_throughput,jain,q_1..q_K,R_1..R_K`.
pub fn sweep_header(k_max: usize) -> String {
    format!(
        "K,scheme,channel,source,tau0,p0,sum_throughput,jain{}{}",
        indexed("q", k_max),
        indexed("R", k_max)
    )
}

/// Per-user cells padded with empties up to `width`.
fn padded(values: impl Iterator<Item = f64>, width: usize) -> String {
    let mut cells: Vec<String> = values.map(num).collect();
    cells.resize(width, String::new());
    cells.into_iter().map(|c| format!(",{c}")).collect()
}

fn opt_cell(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

impl SweepRow {
    pub fn to_csv(&self, k_max: usize) -> String {
        format!(
            "{},{},{},{},{},{},{},{}{}{}",
            self.k,
            self.scheme,
            self.channel,
            self.source,
            num(self.policy.tau0),
            num(self.policy.p0),
            num(self.report.sum_throughput),
            opt_cell(self.report.jain_index),
            padded(self.policy.users.iter().map(|a| a.q), k_max),
            padded(self.policy.users.iter().map(|a| a.rate), k_max),
        )
    }
}

impl SweepOutcome {
    pub fn to_csv(&self) -> String {
        let mut s = sweep_header(self.k_max);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.to_csv(self.k_max));
            s.push('\n');
        }
        s
    }
}

pub fn policy_header(k: usize) -> String {
    format!(
        "K,scheme,channel,case,residual_norm,unconstrained_tau0,tau0,p0{}{}{}",
        indexed("q", k),
        indexed("R", k),
        indexed("P", k)
    )
}

/// Header plus one row describing a solved allocation.
pub fn emit_policy(scenario: &Scenario, k: usize, scheme: Scheme) -> Result<String> {
    let (config, solution) = solve_point(scenario, k, scheme)?;
    let p = &solution.policy;
    let d = solution.diagnostics.as_ref();
    let row = format!(
        "{},{},{},{},{},{},{},{}{}{}{}",
        k,
        scheme,
        config.channel_mode,
        d.map(|d| d.case_taken.to_string()).unwrap_or_default(),
        opt_cell(d.map(|d| d.residual_norm)),
        opt_cell(d.map(|d| d.unconstrained_tau0)),
        num(p.tau0),
        num(p.p0),
        padded(p.users.iter().map(|a| a.q), k),
        padded(p.users.iter().map(|a| a.rate), k),
        padded(p.users.iter().map(|a| a.p_tx), k),
    );
    Ok(format!("{}\n{row}\n", policy_header(k)))
}

fn write_output(path: Option<&PathBuf>, text: &[u8], out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => Ok(out.write_all(text)?),
    }
}

fn usage_like(e: &Error) -> bool {
    matches!(e, Error::InvalidConfig(_) | Error::ConfigKey { .. })
}

fn fail(e: Error, err: &mut dyn Write) -> i32 {
    let _ = writeln!(err, "error: {e}");
    if usage_like(&e) {
        EXIT_USAGE
    } else {
        EXIT_FAILURE
    }
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let spec = ExperimentSpec {
        scenario: a.scenario.resolve()?,
        k_values: a.k_list.clone(),
        schemes: a.scheme.clone(),
        simulate: a.simulate,
        slots: a.slots,
        seed: a.seed,
        battery: a.battery,
        output_path: a.out.clone(),
    };
    let outcome = run_sweep(&spec)?;
    for f in &outcome.failures {
        let _ = writeln!(err, "error: K = {}, scheme = {}: {}", f.k, f.scheme, f.error);
    }
    write_output(spec.output_path.as_ref(), outcome.to_csv().as_bytes(), out)?;
    Ok(if outcome.failures.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    })
}

fn cmd_policy(a: &PolicyArgs, out: &mut dyn Write) -> Result<i32> {
    let scenario = a.scenario.resolve()?;
    let k = a.k.unwrap_or(scenario.k);
    let text = emit_policy(&scenario, k, a.scheme)?;
    write_output(a.out.as_ref(), text.as_bytes(), out)?;
    Ok(EXIT_OK)
}

fn cmd_simulate(a: &SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let scenario = a.scenario.resolve()?;
    let k = a.k.unwrap_or(scenario.k);
    let (config, solution) = solve_point(&scenario, k, a.scheme)?;
    let (trace, report) = simulate_from(&config, &solution.policy, a.slots, a.seed, a.battery, a.initial_battery)?;
    let analytic = analytic_report(&solution.policy, &config)?;
    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf)?;
    write_output(a.out.as_ref(), &buf, out)?;
    let _ = writeln!(
        err,
        "sum_throughput simulated={} analytic={}; jain simulated={} analytic={}",
        num(report.sum_throughput),
        num(analytic.sum_throughput),
        opt_cell(report.jain_index),
        opt_cell(analytic.jain_index)
    );
    Ok(EXIT_OK)
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let res = match &cli.command {
        Command::Sweep(a) => cmd_sweep(a, out, err),
        Command::Policy(a) => cmd_policy(a, out),
        Command::Simulate(a) => cmd_simulate(a, out, err),
    };
    res.unwrap_or_else(|e| fail(e, err))
}
