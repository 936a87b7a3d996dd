//! Host-side measurement harness: energy per sample, throughput and
//! effective latency, the batch-size sweep and the compute-fraction rule.
//!
//! Time comes from a [`Clock`] and energy from an [`EnergyProbe`]; the probe
//! is told the window's timestamps so a constant-rate probe reports exactly
//! `rate * elapsed`.

use std::fmt;
use std::fs;
use std::hint::black_box;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROBE_ENV: &str = "AIMC_BENCH_PROBE";
pub const DEFAULT_MIN_FRACTION: f64 = 0.99;
const MAX_REPETITIONS: u64 = 1 << 40;
const MAX_ULP_STEPS: u64 = 4096;

pub trait EnergyProbe {
    fn name(&self) -> String;
    /// Whether [`EnergyProbe::stop`] reports meaningful joules.
    fn available(&self) -> bool;
    fn start(&mut self, t: f64) -> Result<()>;
    /// Joules consumed since the matching `start`.
    fn stop(&mut self, t: f64) -> Result<f64>;
}

fn not_started() -> Error {
    Error::Probe("stop called without a matching start".into())
}

#[derive(Debug, Default)]
pub struct NullProbe {
    running: bool,
}

impl EnergyProbe for NullProbe {
    fn name(&self) -> String {
        "null".into()
    }

    fn available(&self) -> bool {
        false
    }

    fn start(&mut self, _t: f64) -> Result<()> {
        self.running = true;
        Ok(())
    }

    fn stop(&mut self, _t: f64) -> Result<f64> {
        if !std::mem::take(&mut self.running) {
            return Err(not_started());
        }
        Ok(0.0)
    }
}

/// Constant power draw: `rate` watts over the window.
#[derive(Debug)]
pub struct SyntheticProbe {
    pub rate: f64,
    started: Option<f64>,
}

impl SyntheticProbe {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::Probe(format!("synthetic probe rate must be a finite non-negative wattage, got {rate}")));
        }
        Ok(Self { rate, started: None })
    }
}

impl EnergyProbe for SyntheticProbe {
    fn name(&self) -> String {
        format!("synthetic:{}", self.rate)
    }

    fn available(&self) -> bool {
        true
    }

    fn start(&mut self, t: f64) -> Result<()> {
        self.started = Some(t);
        Ok(())
    }

    fn stop(&mut self, t: f64) -> Result<f64> {
        let t0 = self.started.take().ok_or_else(not_started)?;
        Ok(self.rate * (t - t0).max(0.0))
    }
}

#[derive(Debug)]
struct Zone {
    counter: PathBuf,
    range: u64,
}

/// Package energy counters under `/sys/class/powercap`, when readable.
#[derive(Debug)]
pub struct PlatformProbe {
    zones: Vec<Zone>,
    started: Option<Vec<u64>>,
}

const POWERCAP: &str = "/sys/class/powercap";

fn read_u64(path: &Path) -> Option<u64> {
    fs::read_to_string(path).ok()?.trim().parse().ok()
}

impl PlatformProbe {
    pub fn detect() -> Self {
        Self::detect_in(Path::new(POWERCAP))
    }

    /// Top-level zones (`<name>:<index>`) under `root` whose counters are readable.
    pub fn detect_in(root: &Path) -> Self {
        let mut zones = Vec::new();
        if let Ok(entries) = fs::read_dir(root) {
            let mut names: Vec<String> = entries
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n.matches(':').count() == 1)
                .collect();
            names.sort();
            for name in names {
                let dir = root.join(&name);
                let counter = dir.join("energy_uj");
                if read_u64(&counter).is_some() {
                    let range = read_u64(&dir.join("max_energy_range_uj")).unwrap_or(u64::MAX);
                    zones.push(Zone { counter, range });
                }
            }
        }
        Self { zones, started: None }
    }

    fn sample(&self) -> Result<Vec<u64>> {
        self.zones
            .iter()
            .map(|z| read_u64(&z.counter).ok_or_else(|| Error::Probe(format!("cannot read {}", z.counter.display()))))
            .collect()
    }
}

impl EnergyProbe for PlatformProbe {
    fn name(&self) -> String {
        "platform".into()
    }

    fn available(&self) -> bool {
        !self.zones.is_empty()
    }

    fn start(&mut self, _t: f64) -> Result<()> {
        self.started = Some(self.sample()?);
        Ok(())
    }

    fn stop(&mut self, _t: f64) -> Result<f64> {
        let before = self.started.take().ok_or_else(not_started)?;
        let after = self.sample()?;
        let micro: u128 = self
            .zones
            .iter()
            .zip(before.iter().zip(&after))
            .map(|(z, (&b, &a))| {
                if a >= b {
                    (a - b) as u128
                } else {
                    (z.range as u128 + 1 - b as u128) + a as u128
                }
            })
            .sum();
        Ok(micro as f64 * 1e-6)
    }
}

/// Probe selection as written in configuration or [`PROBE_ENV`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ProbeSpec {
    Null,
    Synthetic(f64),
    Platform,
}

impl ProbeSpec {
    pub fn from_env() -> Result<Option<Self>> {
        match std::env::var(PROBE_ENV) {
            Ok(v) if !v.trim().is_empty() => v.parse().map(Some),
            _ => Ok(None),
        }
    }

    pub fn build(self) -> Result<Box<dyn EnergyProbe>> {
        Ok(match self {
            ProbeSpec::Null => Box::new(NullProbe::default()),
            ProbeSpec::Synthetic(w) => Box::new(SyntheticProbe::new(w)?),
            ProbeSpec::Platform => Box::new(PlatformProbe::detect()),
        })
    }
}

impl FromStr for ProbeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "null" => Ok(ProbeSpec::Null),
            "platform" => Ok(ProbeSpec::Platform),
            _ => {
                let watts = s
                    .strip_prefix("synthetic:")
                    .ok_or_else(|| Error::Probe(format!("unknown probe {s:?}; expected null, synthetic:<watts> or platform")))?;
                let w: f64 = watts
                    .parse()
                    .map_err(|_| Error::Probe(format!("invalid synthetic probe wattage {watts:?}")))?;
                SyntheticProbe::new(w)?;
                Ok(ProbeSpec::Synthetic(w))
            }
        }
    }
}

impl fmt::Display for ProbeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeSpec::Null => f.write_str("null"),
            ProbeSpec::Synthetic(w) => write!(f, "synthetic:{w}"),
            ProbeSpec::Platform => f.write_str("platform"),
        }
    }
}

impl TryFrom<String> for ProbeSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ProbeSpec> for String {
    fn from(p: ProbeSpec) -> String {
        p.to_string()
    }
}

/// Work the harness reports to its clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Work {
    Setup { samples: usize },
    Inference { samples: usize },
}

pub trait Clock {
    /// Seconds since an arbitrary origin; never decreases.
    fn now(&self) -> f64;
    /// Called after each unit of work; wall clocks ignore it.
    fn charge(&mut self, _work: Work) {}
}

#[derive(Debug, Clone, Copy)]
pub struct MonotonicClock {
    origin: Instant,
}

impl Default for MonotonicClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for MonotonicClock {
    fn now(&self) -> f64 {
        self.origin.elapsed().as_secs_f64()
    }
}

/// Time that advances only by modeled costs, for reproducible reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedClock {
    pub setup_overhead: f64,
    pub setup_per_sample: f64,
    pub batch_overhead: f64,
    pub per_sample: f64,
    #[serde(skip)]
    t: f64,
}

impl Default for SimulatedClock {
    fn default() -> Self {
        Self {
            setup_overhead: 1e-6,
            setup_per_sample: 1e-9,
            batch_overhead: 2e-5,
            per_sample: 1e-7,
            t: 0.0,
        }
    }
}

impl Clock for SimulatedClock {
    fn now(&self) -> f64 {
        self.t
    }

    fn charge(&mut self, work: Work) {
        self.t += match work {
            Work::Setup { samples } => self.setup_overhead + self.setup_per_sample * samples as f64,
            Work::Inference { samples } => self.batch_overhead + self.per_sample * samples as f64,
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub batch: usize,
    pub repetitions: u64,
    /// Samples inferred in the timed window.
    pub samples: u64,
    /// Seconds.
    pub elapsed: f64,
    /// Joules, absent without an energy probe.
    pub energy: Option<f64>,
    pub e_sample: Option<f64>,
    pub throughput: f64,
    pub effective_latency: f64,
    pub compute_fraction: f64,
    pub probe: String,
}

/// `E / N`.
pub fn e_sample(energy: f64, samples: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument("energy per sample needs at least one sample".into()));
    }
    if !(energy >= 0.0) {
        return Err(Error::InvalidArgument(format!("energy must be non-negative, got {energy}")));
    }
    Ok(energy / samples as f64)
}

/// `N / dt`.
pub fn throughput(samples: u64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("elapsed time must be positive, got {dt}")));
    }
    Ok(samples as f64 / dt)
}

/// `1 / T`.
pub fn effective_latency(throughput: f64) -> Result<f64> {
    if !(throughput > 0.0) {
        return Err(Error::InvalidArgument(format!("throughput must be positive, got {throughput}")));
    }
    Ok(1.0 / throughput)
}

fn ulps(x: f64, k: i64) -> f64 {
    f64::from_bits((x.to_bits() as i64 + k) as u64)
}

/// The positive value closest to `x` in ulps for which `accept` holds.
fn nearest_accepted(x: f64, accept: impl Fn(f64) -> bool) -> Option<f64> {
    (0..=MAX_ULP_STEPS as i64).find_map(|k| {
        [ulps(x, k), ulps(x, -k)]
            .into_iter()
            .find(|&c| c > 0.0 && c.is_finite() && accept(c))
    })
}

impl BenchResult {
    /// Derives the metrics, moving `elapsed` and `energy` by a few ulps when
    /// needed so that `throughput * elapsed == samples` and
    /// `e_sample * samples == energy` hold exactly in floating point.
    pub fn from_measurement(
        batch: usize,
        repetitions: u64,
        samples: u64,
        elapsed: f64,
        energy: Option<f64>,
        compute_fraction: f64,
        probe: String,
    ) -> Result<Self> {
        throughput(samples, elapsed)?;
        let n = samples as f64;
        let elapsed = nearest_accepted(elapsed, |dt| (n / dt) * dt == n)
            .ok_or_else(|| Error::Runner(format!("no representable elapsed time near {elapsed} s")))?;
        let t = throughput(samples, elapsed)?;
        let (energy, per_sample) = match energy {
            None => (None, None),
            Some(e) => {
                e_sample(e, samples)?;
                let e = if e == 0.0 {
                    0.0
                } else {
                    nearest_accepted(e, |c| (c / n) * n == c)
                        .ok_or_else(|| Error::Runner(format!("no representable energy near {e} J")))?
                };
                (Some(e), Some(e_sample(e, samples)?))
            }
        };
        Ok(Self {
            batch,
            repetitions,
            samples,
            elapsed,
            energy,
            e_sample: per_sample,
            throughput: t,
            effective_latency: effective_latency(t)?,
            compute_fraction,
            probe,
        })
    }
}

fn materialize<T: Clone>(data: &[T], batch: usize) -> Vec<T> {
    data.iter().cycle().take(batch).cloned().collect()
}

/// Times `runner` on batches of `batch` samples drawn cyclically from `data`.
///
/// One untimed warm-up call precedes measurement. Each trial materializes
/// the batch (setup) and runs it `repetitions` times (inference); the
/// repetition count doubles until inference takes at least `min_fraction`
/// of the trial.
pub fn run_host_bench<T, R>(
    runner: &mut R,
    data: &[T],
    batch: usize,
    probe: &mut dyn EnergyProbe,
    clock: &mut dyn Clock,
    min_fraction: f64,
) -> Result<BenchResult>
where
    T: Clone,
    R: FnMut(&[T]) -> Result<()> + ?Sized,
{
    if data.is_empty() {
        return Err(Error::Empty("benchmark data"));
    }
    if batch == 0 {
        return Err(Error::InvalidArgument("batch size must be at least 1".into()));
    }
    if !(min_fraction > 0.0 && min_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("compute fraction must lie in (0, 1), got {min_fraction}")));
    }
    let measure_energy = probe.available();
    runner(black_box(&materialize(data, batch)))?;
    let mut repetitions = 1u64;
    loop {
        let t0 = clock.now();
        let buffer = black_box(materialize(data, batch));
        clock.charge(Work::Setup { samples: batch });
        let t1 = clock.now();
        if measure_energy {
            probe.start(t1)?;
        }
        for _ in 0..repetitions {
            runner(black_box(&buffer))?;
            clock.charge(Work::Inference { samples: batch });
        }
        let t2 = clock.now();
        let energy = if measure_energy { Some(probe.stop(t2)?) } else { None };
        let inference = t2 - t1;
        let total = t2 - t0;
        if inference > 0.0 && total > 0.0 {
            let fraction = inference / total;
            if fraction >= min_fraction {
                let samples = repetitions
                    .checked_mul(batch as u64)
                    .ok_or_else(|| Error::Overflow("benchmark sample count".into()))?;
                return BenchResult::from_measurement(
                    batch,
                    repetitions,
                    samples,
                    inference,
                    energy,
                    fraction,
                    probe.name(),
                );
            }
        }
        repetitions *= 2;
        if repetitions > MAX_REPETITIONS {
            return Err(Error::Runner(format!(
                "compute fraction {min_fraction} not reached after {MAX_REPETITIONS} repetitions"
            )));
        }
    }
}

/// Index of the preferred result: lowest energy per sample when energy was
/// measured, otherwise highest throughput; ties go to higher throughput,
/// then to the smaller batch.
pub fn select_best(results: &[BenchResult]) -> Option<usize> {
    let use_energy = results.iter().all(|r| r.e_sample.is_some());
    (0..results.len()).min_by(|&a, &b| {
        let (ra, rb) = (&results[a], &results[b]);
        let primary = if use_energy {
            ra.e_sample.unwrap().total_cmp(&rb.e_sample.unwrap())
        } else {
            std::cmp::Ordering::Equal
        };
        primary
            .then(rb.throughput.total_cmp(&ra.throughput))
            .then(ra.batch.cmp(&rb.batch))
    })
}

/// Benchmarks every candidate batch size and returns the preferred one.
pub fn sweep_batch<T, R>(
    runner: &mut R,
    data: &[T],
    candidates: &[usize],
    probe: &mut dyn EnergyProbe,
    clock: &mut dyn Clock,
    min_fraction: f64,
) -> Result<(usize, Vec<BenchResult>)>
where
    T: Clone,
    R: FnMut(&[T]) -> Result<()> + ?Sized,
{
    if candidates.is_empty() {
        return Err(Error::Empty("batch candidates"));
    }
    let results = candidates
        .iter()
        .map(|&b| run_host_bench(runner, data, b, probe, clock, min_fraction))
        .collect::<Result<Vec<_>>>()?;
    let best = select_best(&results).expect("candidates are nonempty");
    Ok((results[best].batch, results))
}

/// Powers of two from 2^6 to 2^20 plus 12870 and 10^6, ascending.
pub fn default_candidates() -> Vec<usize> {
    let mut c: Vec<usize> = (6..=20).map(|k| 1usize << k).collect();
    c.extend([12_870, 1_000_000]);
    c.sort_unstable();
    c
}
