//! End-to-end drivers for both use cases: state and event generation,
//! reference vs AIMC evaluation, fidelity statistics and modeled performance.

use std::f64::consts::PI;
use std::path::PathBuf;

use ndarray::{s, Array2, ArrayView2, Axis};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, LogNormal, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aimc::{AimcMlp, AimcRbm, QuantConfig};
use crate::error::{Error, Result};
use crate::io::{load_events, load_mlp, load_rbm, EventTable};
use crate::numeric::{median, percentile, spearman};
use crate::perf::{map_network, perf_report, ArchConfig, PerfReport};
use crate::ref_models::{
    energy_expectation_from_log_psi, mlp_forward_batch, rbm_log_psi, svdd_score, Activation, EnsembleAggregation,
    EventRecord, LatticeSpec, MlpParams, RbmParams, SpinConfiguration, SvddTarget, FEATURES_PER_EVENT,
};

pub use crate::ref_models::build_lattice;

/// Largest sector [`enumerate_zero_mag_states`] will materialize.
pub const MAX_SECTOR_STATES: u64 = 1 << 26;
/// Half-width of the uniform RBM initialization.
pub const RBM_INIT_HALF_WIDTH: f64 = 0.1;

const CHUNK: usize = 256;

/// Decorrelated child seed for the `index`-th derived stream of `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ 0x6A09_E667_F3BC_C909u64.wrapping_mul(index.wrapping_add(1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All configurations of `n` spins with zero net magnetization, in
/// lexicographic order with up (`+1`) before down (`-1`).
pub fn enumerate_zero_mag_states(n: usize) -> Result<Vec<SpinConfiguration>> {
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "zero magnetization needs an even number of sites, got {n}"
        )));
    }
    if n > 64 || binomial(n as u64, n as u64 / 2) > MAX_SECTOR_STATES {
        return Err(Error::Overflow(format!("zero-magnetization sector of {n} sites is too large")));
    }
    fn fill(prefix: &mut Vec<i8>, ups: usize, downs: usize, out: &mut Vec<SpinConfiguration>) {
        if ups == 0 && downs == 0 {
            out.push(SpinConfiguration::new(prefix.clone()).expect("spins are +-1"));
            return;
        }
        if ups > 0 {
            prefix.push(1);
            fill(prefix, ups - 1, downs, out);
            prefix.pop();
        }
        if downs > 0 {
            prefix.push(-1);
            fill(prefix, ups, downs - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(binomial(n as u64, n as u64 / 2) as usize);
    fill(&mut Vec::with_capacity(n), n / 2, n / 2, &mut out);
    Ok(out)
}

struct ObjectModel {
    slots: u64,
    occupancy: f64,
    pt_median: f64,
    pt_sigma: f64,
    eta_limit: f64,
}

const MET: ObjectModel = ObjectModel {
    slots: 1,
    occupancy: 1.0,
    pt_median: 30.0,
    pt_sigma: 0.6,
    eta_limit: 0.0,
};
const ELECTRONS: ObjectModel = ObjectModel {
    slots: 4,
    occupancy: 0.15,
    pt_median: 25.0,
    pt_sigma: 0.5,
    eta_limit: 2.5,
};
const MUONS: ObjectModel = ObjectModel {
    slots: 4,
    occupancy: 0.15,
    pt_median: 25.0,
    pt_sigma: 0.5,
    eta_limit: 2.5,
};
const JETS: ObjectModel = ObjectModel {
    slots: 10,
    occupancy: 0.35,
    pt_median: 40.0,
    pt_sigma: 0.6,
    eta_limit: 4.5,
};
const ANOMALY_PT_SCALE: f64 = 3.0;

fn synth_one(rng: &mut ChaCha8Rng, anomalous: bool) -> EventRecord {
    let mut f = [0.0; FEATURES_PER_EVENT];
    let eta = Normal::new(0.0, 2.0).expect("valid normal");
    let mut offset = 0;
    for m in [&MET, &ELECTRONS, &MUONS, &JETS] {
        let count = if m.occupancy >= 1.0 {
            m.slots
        } else {
            Binomial::new(m.slots, m.occupancy).expect("valid binomial").sample(rng)
        };
        let pt = LogNormal::new(m.pt_median.ln(), m.pt_sigma).expect("valid log-normal");
        let scale = if anomalous { ANOMALY_PT_SCALE } else { 1.0 };
        let mut objects: Vec<[f64; 3]> = (0..count)
            .map(|_| {
                let p = pt.sample(rng) * scale;
                let e = if m.eta_limit > 0.0 {
                    Distribution::<f64>::sample(&eta, rng).clamp(-m.eta_limit, m.eta_limit)
                } else {
                    0.0
                };
                let phi = rng.random_range(-PI..=PI);
                [p, e, phi]
            })
            .collect();
        objects.sort_by(|a, b| b[0].total_cmp(&a[0]));
        for (k, o) in objects.iter().enumerate() {
            f[offset + 3 * k..offset + 3 * k + 3].copy_from_slice(o);
        }
        offset += 3 * m.slots as usize;
    }
    EventRecord::new(f).expect("generated features are in range")
}

/// Seeded synthetic events; exactly `round(anomaly_fraction * count)` are anomalous.
///
/// Background objects have log-normal `p_T`, `eta ~ N(0, 2)` clipped to the
/// detector acceptance and uniform `phi`; unoccupied slots are zero-padded.
/// Anomalies draw from the same model with `p_T` scaled by 3.
pub fn synth_events(count: usize, seed: u64, anomaly_fraction: f64) -> Result<EventTable> {
    if count == 0 {
        return Err(Error::InvalidArgument("synthetic event count must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&anomaly_fraction) {
        return Err(Error::InvalidArgument(format!(
            "anomaly fraction must lie in [0, 1], got {anomaly_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anomalies = (anomaly_fraction * count as f64).round() as usize;
    let mut flags = vec![false; count];
    for i in index::sample(&mut rng, count, anomalies) {
        flags[i] = true;
    }
    let events = flags.iter().map(|&a| synth_one(&mut rng, a)).collect();
    Ok(EventTable {
        events,
        is_anomaly: Some(flags),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightsSource {
    Random { seed: u64 },
    Zero,
    /// One manifest per network.
    Files { paths: Vec<PathBuf> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EventsSource {
    File { path: PathBuf },
    Synthetic { seed: u64, count: usize, anomaly_fraction: f64 },
}

impl EventsSource {
    pub fn load(&self) -> Result<EventTable> {
        match self {
            EventsSource::File { path } => load_events(path),
            EventsSource::Synthetic {
                seed,
                count,
                anomaly_fraction,
            } => synth_events(*count, *seed, *anomaly_fraction),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NqsWorkloadConfig {
    pub lattice: LatticeSpec,
    pub alpha: usize,
    pub j: f64,
    pub marshall: bool,
    pub weights: WeightsSource,
    pub quant: QuantConfig,
    pub arch: ArchConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvddWorkloadConfig {
    pub hidden_dims: Vec<usize>,
    pub targets: Vec<SvddTarget>,
    pub weights: WeightsSource,
    pub events: EventsSource,
    /// Leading events used to calibrate converter scales.
    pub calibration_events: usize,
    pub aggregation: EnsembleAggregation,
    pub quant: QuantConfig,
    pub arch: ArchConfig,
}

pub const DEFAULT_HIDDEN_DIMS: [usize; 3] = [512, 512, 512];
pub const DEFAULT_CALIBRATION_EVENTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NqsStats {
    pub sites: usize,
    pub alpha: usize,
    pub states: usize,
    pub median_abs_log_psi_error: f64,
    pub p95_abs_log_psi_error: f64,
    pub max_abs_log_psi_error: f64,
    pub energy_ref: f64,
    pub energy_aimc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvddMemberStats {
    pub z: usize,
    pub n: f64,
    /// Rank correlation of AIMC scores with the ELU reference.
    pub spearman: Option<f64>,
    /// Rank correlation with the same network evaluated with ReLU.
    pub spearman_relu: Option<f64>,
    pub mean_score_ref: f64,
    pub mean_score_aimc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvddStats {
    pub events: usize,
    pub anomalies: Option<usize>,
    pub aggregation: EnsembleAggregation,
    pub members: Vec<SvddMemberStats>,
    pub ensemble_spearman: Option<f64>,
    pub ensemble_spearman_relu: Option<f64>,
    pub mean_ensemble_score_ref: f64,
    pub mean_ensemble_score_aimc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadReport {
    pub workload: String,
    pub stages: usize,
    pub perf: PerfReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nqs: Option<NqsStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svdd: Option<SvddStats>,
}

/// Per-event scores of one ensemble run, kept for callers that need more
/// than the summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SvddScores {
    pub reference: Vec<Vec<f64>>,
    pub reference_relu: Vec<Vec<f64>>,
    pub aimc: Vec<Vec<f64>>,
    pub ensemble_reference: Vec<f64>,
    pub ensemble_reference_relu: Vec<f64>,
    pub ensemble_aimc: Vec<f64>,
}

/// Parameters the NQS workload evaluates.
pub fn nqs_params(cfg: &NqsWorkloadConfig) -> Result<RbmParams> {
    let n = cfg.lattice.n_sites();
    if cfg.alpha == 0 {
        return Err(Error::InvalidArgument("alpha must be at least 1".into()));
    }
    match &cfg.weights {
        WeightsSource::Random { seed } => Ok(RbmParams::random_uniform(n, cfg.alpha, RBM_INIT_HALF_WIDTH, *seed)),
        WeightsSource::Zero => Ok(RbmParams::zeros(n, cfg.alpha)),
        WeightsSource::Files { paths } => {
            let [path] = paths.as_slice() else {
                return Err(Error::InvalidArgument(format!(
                    "NQS takes exactly one weight manifest, got {}",
                    paths.len()
                )));
            };
            let p = load_rbm(path)?;
            if p.n != n || p.alpha != cfg.alpha {
                return Err(Error::InvalidArgument(format!(
                    "weights are for N={}, alpha={}; workload has N={n}, alpha={}",
                    p.n, p.alpha, cfg.alpha
                )));
            }
            Ok(p)
        }
    }
}

fn log_abs_errors(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).collect()
}

pub fn run_nqs_workload(cfg: &NqsWorkloadConfig) -> Result<WorkloadReport> {
    let p = nqs_params(cfg)?;
    let n = cfg.lattice.n_sites();
    let mapping = map_network("nqs", &[(n, p.hidden())], &cfg.arch)?;
    let states = enumerate_zero_mag_states(n)?;
    let reference = states
        .par_iter()
        .map(|s| rbm_log_psi(&p, s))
        .collect::<Result<Vec<_>>>()?;
    let rbm = AimcRbm::program(&p, &states, &cfg.quant, &cfg.arch)?;
    let aimc = rbm.log_psi_batch(&states)?;
    let errors = log_abs_errors(&aimc, &reference);
    let energy_ref = energy_expectation_from_log_psi(&states, &reference, &cfg.lattice, cfg.j, cfg.marshall)?;
    let energy_aimc = energy_expectation_from_log_psi(&states, &aimc, &cfg.lattice, cfg.j, cfg.marshall)?;
    Ok(WorkloadReport {
        workload: "nqs".into(),
        stages: mapping.stage_count(),
        perf: perf_report(&mapping, &cfg.arch)?,
        nqs: Some(NqsStats {
            sites: n,
            alpha: cfg.alpha,
            states: states.len(),
            median_abs_log_psi_error: median(&errors).expect("sector is nonempty"),
            p95_abs_log_psi_error: percentile(&errors, 95.0).expect("sector is nonempty"),
            max_abs_log_psi_error: errors.iter().fold(0.0, |m, &e| m.max(e)),
            energy_ref,
            energy_aimc,
        }),
        svdd: None,
    })
}

pub fn events_matrix(events: &[EventRecord]) -> Array2<f64> {
    let mut m = Array2::zeros((events.len(), FEATURES_PER_EVENT));
    for (mut row, e) in m.axis_iter_mut(Axis(0)).zip(events) {
        row.assign(&ndarray::ArrayView1::from(&e.features()[..]));
    }
    m
}

/// Floating-point reference scores, evaluated on fixed-size chunks in parallel.
pub fn reference_scores(p: &MlpParams, target: &SvddTarget, x: ArrayView2<f64>) -> Result<Vec<f64>> {
    let starts: Vec<usize> = (0..x.nrows()).step_by(CHUNK).collect();
    let parts = starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(x.nrows());
            let y = mlp_forward_batch(p, x.slice(s![start..end, ..]))?;
            y.axis_iter(Axis(0))
                .map(|row| svdd_score(row.as_slice().expect("standard layout"), target))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Network dimensions for one ensemble member.
pub fn svdd_dims(hidden: &[usize], target: &SvddTarget) -> Vec<usize> {
    let mut dims = vec![FEATURES_PER_EVENT];
    dims.extend_from_slice(hidden);
    dims.push(target.z);
    dims
}

/// Parameters of the `member`-th network; random members use He-normal
/// weights with ELU hidden units.
pub fn svdd_params(cfg: &SvddWorkloadConfig, member: usize) -> Result<MlpParams> {
    let target = &cfg.targets[member];
    let dims = svdd_dims(&cfg.hidden_dims, target);
    match &cfg.weights {
        WeightsSource::Random { seed } => MlpParams::random_he(&dims, Activation::Elu, derive_seed(*seed, member as u64)),
        WeightsSource::Zero => MlpParams::zeros(&dims, Activation::Elu),
        WeightsSource::Files { paths } => {
            if paths.len() != cfg.targets.len() {
                return Err(Error::dims("SVDD weight manifests", cfg.targets.len(), paths.len()));
            }
            let p = load_mlp(&paths[member])?;
            if p.input_dim() != FEATURES_PER_EVENT || p.output_dim() != target.z {
                return Err(Error::InvalidArgument(format!(
                    "{} maps {} -> {}, member needs {FEATURES_PER_EVENT} -> {}",
                    paths[member].display(),
                    p.input_dim(),
                    p.output_dim(),
                    target.z
                )));
            }
            Ok(p)
        }
    }
}

fn mean(v: &[f64]) -> f64 {
    crate::numeric::compensated_sum(v.iter().copied()) / v.len() as f64
}

fn aggregate_columns(per_member: &[Vec<f64>], events: usize, agg: EnsembleAggregation) -> Result<Vec<f64>> {
    (0..events)
        .map(|e| {
            let scores: Vec<f64> = per_member.iter().map(|m| m[e]).collect();
            agg.aggregate(&scores)
        })
        .collect()
}

/// Runs every ensemble member and returns both the report and the raw scores.
pub fn run_svdd_workload_with_scores(cfg: &SvddWorkloadConfig) -> Result<(WorkloadReport, SvddScores)> {
    if cfg.targets.is_empty() {
        return Err(Error::Empty("SVDD targets"));
    }
    let table = cfg.events.load()?;
    if table.is_empty() {
        return Err(Error::Empty("SVDD events"));
    }
    let calibration = &table.events[..cfg.calibration_events.clamp(1, table.len())];
    let x = events_matrix(&table.events);
    let mut scores = SvddScores {
        reference: Vec::new(),
        reference_relu: Vec::new(),
        aimc: Vec::new(),
        ensemble_reference: Vec::new(),
        ensemble_reference_relu: Vec::new(),
        ensemble_aimc: Vec::new(),
    };
    let mut members = Vec::with_capacity(cfg.targets.len());
    let mut mapping = None;
    for (k, target) in cfg.targets.iter().enumerate() {
        let p = svdd_params(cfg, k)?;
        let m = map_network("svdd", &p.layer_dims(), &cfg.arch)?;
        mapping.get_or_insert(m);
        let reference = reference_scores(&p.with_activation(Activation::Elu), target, x.view())?;
        let reference_relu = reference_scores(&p.with_activation(Activation::Relu), target, x.view())?;
        let net = AimcMlp::program(&p, *target, calibration, &cfg.quant, &cfg.arch)?;
        let aimc = net.score_batch(&table.events)?;
        log::debug!("svdd member {k} (z={}, n={}) done", target.z, target.n);
        members.push(SvddMemberStats {
            z: target.z,
            n: target.n,
            spearman: spearman(&aimc, &reference),
            spearman_relu: spearman(&aimc, &reference_relu),
            mean_score_ref: mean(&reference),
            mean_score_aimc: mean(&aimc),
        });
        scores.reference.push(reference);
        scores.reference_relu.push(reference_relu);
        scores.aimc.push(aimc);
    }
    let n_events = table.len();
    scores.ensemble_reference = aggregate_columns(&scores.reference, n_events, cfg.aggregation)?;
    scores.ensemble_reference_relu = aggregate_columns(&scores.reference_relu, n_events, cfg.aggregation)?;
    scores.ensemble_aimc = aggregate_columns(&scores.aimc, n_events, cfg.aggregation)?;
    let mapping = mapping.expect("at least one member");
    let report = WorkloadReport {
        workload: "svdd".into(),
        stages: mapping.stage_count(),
        perf: perf_report(&mapping, &cfg.arch)?,
        nqs: None,
        svdd: Some(SvddStats {
            events: n_events,
            anomalies: table.anomaly_count(),
            aggregation: cfg.aggregation,
            members,
            ensemble_spearman: spearman(&scores.ensemble_aimc, &scores.ensemble_reference),
            ensemble_spearman_relu: spearman(&scores.ensemble_aimc, &scores.ensemble_reference_relu),
            mean_ensemble_score_ref: mean(&scores.ensemble_reference),
            mean_ensemble_score_aimc: mean(&scores.ensemble_aimc),
        }),
    };
    Ok((report, scores))
}

pub fn run_svdd_workload(cfg: &SvddWorkloadConfig) -> Result<WorkloadReport> {
    run_svdd_workload_with_scores(cfg).map(|(r, _)| r)
}
