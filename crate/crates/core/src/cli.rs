//! The `aimc` command line.
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags or configuration),
//! 2 on runtime errors. Diagnostics go to stderr; the report goes to stdout
//! in the requested format and, with `--out`, to a JSON file.

use std::ffi::OsString;
use std::fs;
use std::hint::black_box;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::aimc::{QuantConfig, QuantPreset};
use crate::bench::{
    default_candidates, sweep_batch, Clock, MonotonicClock, ProbeSpec, SimulatedClock,
    DEFAULT_MIN_FRACTION,
};
use crate::error::Error;
use crate::io::{read_report, report_to_json, report_to_text, write_report, RunReport};
use crate::perf::ArchConfig;
use crate::ref_models::{
    build_ensemble_specs, rbm_log_psi_batch, Activation, EnsembleAggregation, EventRecord, MlpParams, RbmParams,
    SpinConfiguration, SvddTarget, ENSEMBLE_N, ENSEMBLE_Z,
};
use crate::workloads::{
    build_lattice, derive_seed, enumerate_zero_mag_states, events_matrix, reference_scores, run_nqs_workload,
    run_svdd_workload, svdd_dims, EventsSource, NqsWorkloadConfig, SvddWorkloadConfig, WeightsSource,
    DEFAULT_CALIBRATION_EVENTS, DEFAULT_HIDDEN_DIMS, RBM_INIT_HALF_WIDTH,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_EVENT_COUNT: usize = 1000;
pub const DEFAULT_ANOMALY_FRACTION: f64 = 0.1;
pub const DEFAULT_NQS_BATCH: usize = 12_870;
pub const DEFAULT_SVDD_BATCH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockKind {
    /// Modeled time; reports are reproducible byte for byte.
    Simulated,
    /// Monotonic wall clock.
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchWorkload {
    Nqs,
    Svdd,
}

fn parse_preset(s: &str) -> std::result::Result<QuantPreset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_probe(s: &str) -> std::result::Result<ProbeSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_aggregation(s: &str) -> std::result::Result<EnsembleAggregation, String> {
    match s {
        "mean" => Ok(EnsembleAggregation::Mean),
        "sum" => Ok(EnsembleAggregation::Sum),
        "max" => Ok(EnsembleAggregation::Max),
        _ => Err(format!("unknown aggregation {s:?}; expected mean, sum or max")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "aimc", version, about = "Reference vs analog in-memory computing inference for NQS and Deep SVDD")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write the report as JSON to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Report encoding on stdout.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// ideal, default or noisy.
    #[arg(long, global = true, value_parser = parse_preset)]
    pub quant_preset: Option<QuantPreset>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// RBM on the zero-magnetization sector: log-amplitude fidelity and energies.
    Nqs(NqsArgs),
    /// One Deep SVDD network on events.
    Svdd(SvddArgs),
    /// The Deep SVDD ensemble, aggregated per event.
    Ensemble(EnsembleArgs),
    /// Host benchmark at one batch size.
    BenchHost(BenchArgs),
    /// Host benchmark over batch sizes.
    Sweep(SweepArgs),
    /// Re-emit a saved report in the requested format.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct NqsArgs {
    #[arg(long)]
    pub lx: Option<usize>,
    #[arg(long)]
    pub ly: Option<usize>,
    /// Open instead of periodic boundaries.
    #[arg(long)]
    pub open: bool,
    #[arg(long)]
    pub alpha: Option<usize>,
    /// Exchange constant.
    #[arg(long)]
    pub j: Option<f64>,
    /// Disable the Marshall sign rule.
    #[arg(long)]
    pub no_marshall: bool,
    /// Weight manifest; random weights otherwise.
    #[arg(long, value_name = "PATH")]
    pub weights: Option<PathBuf>,
    #[arg(long)]
    pub zero_weights: bool,
}

#[derive(Debug, Args)]
pub struct EventArgs {
    /// Event table; synthetic events otherwise.
    #[arg(long, value_name = "PATH")]
    pub events: Option<PathBuf>,
    #[arg(long)]
    pub event_count: Option<usize>,
    #[arg(long)]
    pub anomaly_fraction: Option<f64>,
    #[arg(long)]
    pub calibration_events: Option<usize>,
    /// Hidden widths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub zero_weights: bool,
    /// Accept target dimensions and values outside the ensemble grid.
    #[arg(long)]
    pub allow_custom: bool,
}

#[derive(Debug, Args)]
pub struct SvddArgs {
    #[arg(long)]
    pub z: Option<usize>,
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long, value_name = "PATH")]
    pub weights: Option<PathBuf>,
    #[command(flatten)]
    pub common: EventArgs,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Subset of target dimensions, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub z: Option<Vec<usize>>,
    /// Subset of target values, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<f64>>,
    /// Directory of member manifests named `z<z>_n<n>.toml`.
    #[arg(long, value_name = "DIR")]
    pub weights_dir: Option<PathBuf>,
    /// mean, sum or max.
    #[arg(long, value_parser = parse_aggregation)]
    pub aggregation: Option<EnsembleAggregation>,
    #[command(flatten)]
    pub common: EventArgs,
}

#[derive(Debug, Args)]
pub struct BenchCommon {
    #[arg(long, value_enum)]
    pub workload: Option<BenchWorkload>,
    #[arg(long)]
    pub alpha: Option<usize>,
    #[arg(long)]
    pub z: Option<usize>,
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub event_count: Option<usize>,
    /// null, synthetic:<watts> or platform.
    #[arg(long, value_parser = parse_probe)]
    pub probe: Option<ProbeSpec>,
    #[arg(long, value_enum)]
    pub clock: Option<ClockKind>,
    #[arg(long)]
    pub min_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub batch: Option<usize>,
    #[command(flatten)]
    pub common: BenchCommon,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Batch sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub candidates: Option<Vec<usize>>,
    #[command(flatten)]
    pub common: BenchCommon,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON report written by `--out`.
    pub input: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    format: Option<OutputFormat>,
    out: Option<PathBuf>,
    quant_preset: Option<QuantPreset>,
    threads: Option<usize>,
    #[serde(default)]
    quant: QuantOverrides,
    #[serde(default)]
    arch: ArchOverrides,
    #[serde(default)]
    nqs: NqsFile,
    #[serde(default)]
    svdd: SvddFile,
    #[serde(default)]
    ensemble: EnsembleFile,
    #[serde(default)]
    bench: BenchFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuantOverrides {
    dac_bits: Option<u32>,
    adc_bits: Option<u32>,
    weight_levels: Option<u32>,
    lut_entries: Option<usize>,
    prog_noise_sigma: Option<f64>,
    read_noise_sigma: Option<f64>,
    rng_seed: Option<u64>,
    input_clip_percentile: Option<f64>,
    adc_clip_percentile: Option<f64>,
    adc_margin: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArchOverrides {
    n_tiles: Option<usize>,
    rows: Option<usize>,
    cols: Option<usize>,
    t_analog: Option<f64>,
    t_stage: Option<f64>,
    p_xbar: Option<f64>,
    p_ldpu: Option<f64>,
    p_dpu: Option<f64>,
    peripheral_fraction: Option<f64>,
    utilization_scaling: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NqsFile {
    lx: Option<usize>,
    ly: Option<usize>,
    periodic: Option<bool>,
    alpha: Option<usize>,
    j: Option<f64>,
    marshall: Option<bool>,
    weights: Option<PathBuf>,
    zero_weights: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SvddFile {
    z: Option<usize>,
    n: Option<f64>,
    weights: Option<PathBuf>,
    events: Option<PathBuf>,
    event_count: Option<usize>,
    anomaly_fraction: Option<f64>,
    calibration_events: Option<usize>,
    hidden: Option<Vec<usize>>,
    zero_weights: Option<bool>,
    allow_custom: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleFile {
    z: Option<Vec<usize>>,
    n: Option<Vec<f64>>,
    weights_dir: Option<PathBuf>,
    aggregation: Option<EnsembleAggregation>,
    events: Option<PathBuf>,
    event_count: Option<usize>,
    anomaly_fraction: Option<f64>,
    calibration_events: Option<usize>,
    hidden: Option<Vec<usize>>,
    zero_weights: Option<bool>,
    allow_custom: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchFile {
    workload: Option<BenchWorkload>,
    alpha: Option<usize>,
    z: Option<usize>,
    n: Option<f64>,
    hidden: Option<Vec<usize>>,
    event_count: Option<usize>,
    batch: Option<usize>,
    candidates: Option<Vec<usize>>,
    probe: Option<ProbeSpec>,
    clock: Option<ClockKind>,
    min_fraction: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn flag(set: bool, file: Option<bool>) -> bool {
    set || file.unwrap_or(false)
}

/// Relative paths in a configuration file are taken from the file's directory.
fn rebase(base: &Option<PathBuf>, p: Option<PathBuf>) -> Option<PathBuf> {
    p.map(|p| match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    })
}

fn load_file_config(path: &Path) -> CliResult<FileConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Runtime(Error::Io(e)))?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

struct Context {
    seed: u64,
    quant: QuantConfig,
    arch: ArchConfig,
}

fn resolve_quant(preset: QuantPreset, o: &QuantOverrides, seed: u64) -> CliResult<QuantConfig> {
    let mut q = QuantConfig::preset(preset);
    q.rng_seed = seed;
    macro_rules! apply {
        ($($f:ident),*) => { $( if let Some(v) = o.$f { q.$f = v; } )* };
    }
    apply!(dac_bits, adc_bits, weight_levels, lut_entries, prog_noise_sigma, read_noise_sigma, rng_seed);
    apply!(input_clip_percentile, adc_clip_percentile, adc_margin);
    q.validate().map_err(|e| usage(format!("quant: {e}")))?;
    Ok(q)
}

fn resolve_arch(o: &ArchOverrides) -> CliResult<ArchConfig> {
    let mut a = ArchConfig::default();
    macro_rules! apply {
        ($($f:ident),*) => { $( if let Some(v) = o.$f { a.$f = v; } )* };
    }
    apply!(n_tiles, rows, cols, t_analog, t_stage, p_xbar, p_ldpu, p_dpu, peripheral_fraction, utilization_scaling);
    a.validate().map_err(|e| usage(format!("arch: {e}")))?;
    Ok(a)
}

fn check_target(z: usize, n: f64, allow_custom: bool) -> CliResult<SvddTarget> {
    let t = SvddTarget::new(z, n).map_err(|e| usage(e.to_string()))?;
    if !allow_custom && !t.is_standard() {
        return Err(usage(format!(
            "target (z={z}, n={n}) is outside the ensemble grid z in {ENSEMBLE_Z:?}, n in {ENSEMBLE_N:?}; pass --allow-custom to use it"
        )));
    }
    Ok(t)
}

fn events_source(
    seed: u64,
    path: Option<PathBuf>,
    count: Option<usize>,
    anomaly_fraction: Option<f64>,
) -> CliResult<EventsSource> {
    Ok(match path {
        Some(path) => {
            if count.is_some() || anomaly_fraction.is_some() {
                return Err(usage("--events cannot be combined with --event-count or --anomaly-fraction"));
            }
            EventsSource::File { path }
        }
        None => EventsSource::Synthetic {
            seed: derive_seed(seed, u64::MAX),
            count: count.unwrap_or(DEFAULT_EVENT_COUNT),
            anomaly_fraction: anomaly_fraction.unwrap_or(DEFAULT_ANOMALY_FRACTION),
        },
    })
}

fn weights_source(seed: u64, zero: bool, files: Option<Vec<PathBuf>>) -> CliResult<WeightsSource> {
    match (zero, files) {
        (true, Some(_)) => Err(usage("--zero-weights cannot be combined with weight files")),
        (true, None) => Ok(WeightsSource::Zero),
        (false, Some(paths)) => Ok(WeightsSource::Files { paths }),
        (false, None) => Ok(WeightsSource::Random { seed }),
    }
}

fn cmd_nqs(a: NqsArgs, f: NqsFile, base: &Option<PathBuf>, ctx: &Context) -> CliResult<RunReport> {
    let lx = a.lx.or(f.lx).unwrap_or(4);
    let ly = a.ly.or(f.ly).unwrap_or(4);
    let periodic = !a.open && f.periodic.unwrap_or(true);
    let alpha = a.alpha.or(f.alpha).unwrap_or(2);
    let j = a.j.or(f.j).unwrap_or(1.0);
    let marshall = !a.no_marshall && f.marshall.unwrap_or(true);
    let weights = a.weights.or_else(|| rebase(base, f.weights));
    let weights = weights_source(ctx.seed, flag(a.zero_weights, f.zero_weights), weights.map(|p| vec![p]))?;
    let lattice = build_lattice(lx, ly, periodic).map_err(|e| usage(e.to_string()))?;
    let cfg = NqsWorkloadConfig {
        lattice,
        alpha,
        j,
        marshall,
        weights: weights.clone(),
        quant: ctx.quant.clone(),
        arch: ctx.arch,
    };
    let echo = json!({
        "lattice": { "lx": lx, "ly": ly, "periodic": periodic },
        "alpha": alpha,
        "j": j,
        "marshall": marshall,
        "weights": weights,
        "quant": ctx.quant,
        "arch": ctx.arch,
    });
    let mut report = RunReport::new("nqs", ctx.seed, echo);
    report.workloads.push(run_nqs_workload(&cfg)?);
    Ok(report)
}

struct EventSettings {
    events: EventsSource,
    calibration_events: usize,
    hidden: Vec<usize>,
    zero_weights: bool,
    allow_custom: bool,
}

#[allow(clippy::too_many_arguments)]
fn event_settings(
    a: EventArgs,
    events: Option<PathBuf>,
    event_count: Option<usize>,
    anomaly_fraction: Option<f64>,
    calibration_events: Option<usize>,
    hidden: Option<Vec<usize>>,
    zero_weights: Option<bool>,
    allow_custom: Option<bool>,
    base: &Option<PathBuf>,
    seed: u64,
) -> CliResult<EventSettings> {
    let path = a.events.or_else(|| rebase(base, events));
    let count = a.event_count.or(event_count);
    let fraction = a.anomaly_fraction.or(anomaly_fraction);
    Ok(EventSettings {
        events: events_source(seed, path, count, fraction)?,
        calibration_events: a
            .calibration_events
            .or(calibration_events)
            .unwrap_or(DEFAULT_CALIBRATION_EVENTS),
        hidden: a.hidden.or(hidden).unwrap_or_else(|| DEFAULT_HIDDEN_DIMS.to_vec()),
        zero_weights: flag(a.zero_weights, zero_weights),
        allow_custom: flag(a.allow_custom, allow_custom),
    })
}

fn svdd_report(command: &str, cfg: SvddWorkloadConfig, ctx: &Context) -> CliResult<RunReport> {
    let echo = json!({
        "targets": cfg.targets,
        "hidden": cfg.hidden_dims,
        "weights": cfg.weights,
        "events": cfg.events,
        "calibration_events": cfg.calibration_events,
        "aggregation": cfg.aggregation,
        "quant": cfg.quant,
        "arch": cfg.arch,
    });
    let mut report = RunReport::new(command, ctx.seed, echo);
    report.workloads.push(run_svdd_workload(&cfg)?);
    Ok(report)
}

fn cmd_svdd(a: SvddArgs, f: SvddFile, base: &Option<PathBuf>, ctx: &Context) -> CliResult<RunReport> {
    let z = a.z.or(f.z).unwrap_or(ENSEMBLE_Z[0]);
    let n = a.n.or(f.n).unwrap_or(ENSEMBLE_N[0]);
    let weights = a.weights.or_else(|| rebase(base, f.weights));
    let s = event_settings(
        a.common,
        f.events,
        f.event_count,
        f.anomaly_fraction,
        f.calibration_events,
        f.hidden,
        f.zero_weights,
        f.allow_custom,
        base,
        ctx.seed,
    )?;
    let target = check_target(z, n, s.allow_custom)?;
    let cfg = SvddWorkloadConfig {
        hidden_dims: s.hidden,
        targets: vec![target],
        weights: weights_source(ctx.seed, s.zero_weights, weights.map(|p| vec![p]))?,
        events: s.events,
        calibration_events: s.calibration_events,
        aggregation: EnsembleAggregation::Mean,
        quant: ctx.quant.clone(),
        arch: ctx.arch,
    };
    svdd_report("svdd", cfg, ctx)
}

fn member_file_name(t: &SvddTarget) -> String {
    format!("z{}_n{}.toml", t.z, t.n)
}

fn cmd_ensemble(a: EnsembleArgs, f: EnsembleFile, base: &Option<PathBuf>, ctx: &Context) -> CliResult<RunReport> {
    let zs = a.z.or(f.z);
    let ns = a.n.or(f.n);
    let aggregation = a.aggregation.or(f.aggregation).unwrap_or_default();
    let weights_dir = a.weights_dir.or_else(|| rebase(base, f.weights_dir));
    let s = event_settings(
        a.common,
        f.events,
        f.event_count,
        f.anomaly_fraction,
        f.calibration_events,
        f.hidden,
        f.zero_weights,
        f.allow_custom,
        base,
        ctx.seed,
    )?;
    let targets = match (zs, ns) {
        (None, None) => build_ensemble_specs(),
        (zs, ns) => {
            let zs = zs.unwrap_or_else(|| ENSEMBLE_Z.to_vec());
            let ns = ns.unwrap_or_else(|| ENSEMBLE_N.to_vec());
            let mut t = Vec::with_capacity(zs.len() * ns.len());
            for &z in &zs {
                for &n in &ns {
                    t.push(check_target(z, n, s.allow_custom)?);
                }
            }
            t
        }
    };
    if targets.is_empty() {
        return Err(usage("ensemble needs at least one target"));
    }
    let files = weights_dir.map(|dir| targets.iter().map(|t| dir.join(member_file_name(t))).collect());
    let cfg = SvddWorkloadConfig {
        hidden_dims: s.hidden,
        targets,
        weights: weights_source(ctx.seed, s.zero_weights, files)?,
        events: s.events,
        calibration_events: s.calibration_events,
        aggregation,
        quant: ctx.quant.clone(),
        arch: ctx.arch,
    };
    svdd_report("ensemble", cfg, ctx)
}

struct BenchSettings {
    workload: BenchWorkload,
    alpha: usize,
    target: SvddTarget,
    hidden: Vec<usize>,
    event_count: usize,
    probe: ProbeSpec,
    clock: ClockKind,
    min_fraction: f64,
}

fn bench_settings(a: BenchCommon, f: &BenchFile) -> CliResult<BenchSettings> {
    let env_probe = ProbeSpec::from_env().map_err(|e| usage(format!("{}: {e}", crate::bench::PROBE_ENV)))?;
    let probe = a.probe.or(env_probe).or(f.probe).unwrap_or(ProbeSpec::Null);
    let clock = a.clock.or(f.clock).unwrap_or(ClockKind::Simulated);
    if clock == ClockKind::Simulated && probe == ProbeSpec::Platform {
        return Err(usage("the platform probe measures real energy and needs --clock real"));
    }
    let z = a.z.or(f.z).unwrap_or(ENSEMBLE_Z[0]);
    let n = a.n.or(f.n).unwrap_or(ENSEMBLE_N[0]);
    Ok(BenchSettings {
        workload: a.workload.or(f.workload).unwrap_or(BenchWorkload::Nqs),
        alpha: a.alpha.or(f.alpha).unwrap_or(2),
        target: SvddTarget::new(z, n).map_err(|e| usage(e.to_string()))?,
        hidden: a.hidden.or_else(|| f.hidden.clone()).unwrap_or_else(|| DEFAULT_HIDDEN_DIMS.to_vec()),
        event_count: a.event_count.or(f.event_count).unwrap_or(DEFAULT_EVENT_COUNT),
        probe,
        clock,
        min_fraction: a.min_fraction.or(f.min_fraction).unwrap_or(DEFAULT_MIN_FRACTION),
    })
}

fn bench_echo(s: &BenchSettings) -> serde_json::Value {
    json!({
        "workload": s.workload,
        "alpha": s.alpha,
        "target": s.target,
        "hidden": s.hidden,
        "event_count": s.event_count,
        "probe": s.probe,
        "clock": s.clock,
        "min_fraction": s.min_fraction,
    })
}

fn spins_rows(batch: &[SpinConfiguration]) -> Array2<f64> {
    let n = batch.first().map_or(0, |s| s.len());
    Array2::from_shape_fn((batch.len(), n), |(r, c)| batch[r].spins()[c] as f64)
}

fn run_bench(
    s: &BenchSettings,
    seed: u64,
    batches: &[usize],
) -> crate::Result<(usize, Vec<crate::bench::BenchResult>)> {
    let mut probe = s.probe.build()?;
    let mut clock: Box<dyn Clock> = match s.clock {
        ClockKind::Simulated => Box::new(SimulatedClock::default()),
        ClockKind::Real => Box::new(MonotonicClock::default()),
    };
    match s.workload {
        BenchWorkload::Nqs => {
            let p = RbmParams::random_uniform(16, s.alpha, RBM_INIT_HALF_WIDTH, seed);
            let data = enumerate_zero_mag_states(16)?;
            let mut runner = |batch: &[SpinConfiguration]| -> crate::Result<()> {
                black_box(rbm_log_psi_batch(&p, spins_rows(batch).view())?);
                Ok(())
            };
            sweep_batch(&mut runner, &data, batches, probe.as_mut(), clock.as_mut(), s.min_fraction)
        }
        BenchWorkload::Svdd => {
            let p = MlpParams::random_he(&svdd_dims(&s.hidden, &s.target), Activation::Elu, seed)?;
            let data = crate::workloads::synth_events(s.event_count, derive_seed(seed, u64::MAX), DEFAULT_ANOMALY_FRACTION)?.events;
            let target = s.target;
            let mut runner = |batch: &[EventRecord]| -> crate::Result<()> {
                black_box(reference_scores(&p, &target, events_matrix(batch).view())?);
                Ok(())
            };
            sweep_batch(&mut runner, &data, batches, probe.as_mut(), clock.as_mut(), s.min_fraction)
        }
    }
}

fn cmd_bench(a: BenchArgs, f: BenchFile, ctx: &Context) -> CliResult<RunReport> {
    let s = bench_settings(a.common, &f)?;
    let batch = a.batch.or(f.batch).unwrap_or(match s.workload {
        BenchWorkload::Nqs => DEFAULT_NQS_BATCH,
        BenchWorkload::Svdd => DEFAULT_SVDD_BATCH,
    });
    let mut echo = bench_echo(&s);
    echo["batch"] = json!(batch);
    let mut report = RunReport::new("bench-host", ctx.seed, echo);
    let (_, results) = run_bench(&s, ctx.seed, &[batch])?;
    report.bench = results;
    Ok(report)
}

fn cmd_sweep(a: SweepArgs, f: BenchFile, ctx: &Context) -> CliResult<RunReport> {
    let s = bench_settings(a.common, &f)?;
    let candidates = a.candidates.or_else(|| f.candidates.clone()).unwrap_or_else(default_candidates);
    if candidates.is_empty() {
        return Err(usage("--candidates needs at least one batch size"));
    }
    let mut echo = bench_echo(&s);
    echo["candidates"] = json!(candidates);
    let mut report = RunReport::new("sweep", ctx.seed, echo);
    let (best, results) = run_bench(&s, ctx.seed, &candidates)?;
    report.bench = results;
    report.best_batch = Some(best);
    Ok(report)
}

fn render(report: &RunReport, format: OutputFormat) -> crate::Result<String> {
    match format {
        OutputFormat::Text => report_to_text(report),
        OutputFormat::Structured => report_to_json(report),
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => load_file_config(p)?,
        None => FileConfig::default(),
    };
    let base = cli
        .config
        .as_ref()
        .and_then(|p| p.parent())
        .filter(|d| !d.as_os_str().is_empty())
        .map(Path::to_path_buf);
    let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let format = cli.format.or(file.format).unwrap_or(OutputFormat::Text);
    let out = cli.out.clone().or_else(|| rebase(&base, file.out.clone()));
    let preset = cli.quant_preset.or(file.quant_preset).unwrap_or(QuantPreset::Default);
    let threads = cli.threads.or(file.threads);
    let ctx = Context {
        seed,
        quant: resolve_quant(preset, &file.quant, seed)?,
        arch: resolve_arch(&file.arch)?,
    };
    let FileConfig {
        nqs,
        svdd,
        ensemble,
        bench,
        ..
    } = file;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Runtime(Error::Runner(e.to_string())))?;
    let report = pool.install(|| match cli.command {
        Command::Nqs(a) => cmd_nqs(a, nqs, &base, &ctx),
        Command::Svdd(a) => cmd_svdd(a, svdd, &base, &ctx),
        Command::Ensemble(a) => cmd_ensemble(a, ensemble, &base, &ctx),
        Command::BenchHost(a) => cmd_bench(a, bench, &ctx),
        Command::Sweep(a) => cmd_sweep(a, bench, &ctx),
        Command::Report(a) => Ok(read_report(&a.input)?),
    })?;
    if let Some(path) = &out {
        write_report(&report, path)?;
    }
    stdout
        .write_all(render(&report, format)?.as_bytes())
        .map_err(|e| CliError::Runtime(Error::Io(e)))?;
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(CliError::Runtime(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

/// Entry point for the binary: logs warnings to stderr and uses the process streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    run_with(args, &mut std::io::stdout(), &mut std::io::stderr())
}
