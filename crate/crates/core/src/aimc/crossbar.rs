//! PCM crossbar with differential conductance pairs and dual-rail
//! counter ADCs.

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::quant::QuantConfig;
use crate::error::{Error, Result};

pub const CROSSBAR_ROWS: usize = 512;
pub const CROSSBAR_COLS: usize = 512;

/// Integer conductance image of one weight matrix.
///
/// Rows are wordlines (inputs), columns are bitlines (outputs). The signed
/// level of cell `(i, j)` is `g_plus[i, j] - g_minus[i, j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgrammedCrossbar {
    pub g_plus: Array2<i32>,
    pub g_minus: Array2<i32>,
    pub rows_used: usize,
    pub cols_used: usize,
    levels_f64: Array2<f64>,
}

impl ProgrammedCrossbar {
    pub fn from_conductances(g_plus: Array2<i32>, g_minus: Array2<i32>) -> Result<Self> {
        if g_plus.dim() != g_minus.dim() {
            return Err(Error::dims("conductance rail shapes", g_plus.len(), g_minus.len()));
        }
        let (rows_used, cols_used) = g_plus.dim();
        check_fits(rows_used, cols_used)?;
        if g_plus.iter().chain(g_minus.iter()).any(|&g| g < 0) {
            return Err(Error::InvalidArgument("conductance levels must be non-negative".into()));
        }
        let levels_f64 = ndarray::Zip::from(&g_plus)
            .and(&g_minus)
            .map_collect(|&p, &m| (p - m) as f64);
        Ok(Self {
            g_plus,
            g_minus,
            rows_used,
            cols_used,
            levels_f64,
        })
    }

    /// Signed levels as `f64`; every entry is an exact integer.
    pub fn levels_f64(&self) -> ArrayView2<'_, f64> {
        self.levels_f64.view()
    }
}

fn check_fits(rows: usize, cols: usize) -> Result<()> {
    if rows > CROSSBAR_ROWS || cols > CROSSBAR_COLS {
        return Err(Error::Unmappable {
            layer: 0,
            rows,
            cols,
            max_rows: CROSSBAR_ROWS,
            max_cols: CROSSBAR_COLS,
        });
    }
    Ok(())
}

/// Per-sample noise stream; identical for serial and parallel evaluation.
pub(crate) fn noise_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Programs `w` (rows = inputs, cols = outputs) as differential level pairs.
///
/// `level = round(w / weight_scale)` clipped to `±max_level`; positive levels
/// go to `g_plus`, negative magnitudes to `g_minus`. With programming noise
/// each device then receives `N(0, sigma * max_level)` and is re-rounded and
/// clipped at zero.
pub fn program_weights(w: ArrayView2<f64>, q: &QuantConfig) -> Result<ProgrammedCrossbar> {
    let (rows, cols) = w.dim();
    check_fits(rows, cols)?;
    q.validate()?;
    let max = q.max_level() as f64;
    let levels = w.mapv(|v| (v / q.weight_scale).round().clamp(-max, max) as i32);
    let mut g_plus = levels.mapv(|l| l.max(0));
    let mut g_minus = levels.mapv(|l| (-l).max(0));
    if q.prog_noise_sigma > 0.0 {
        let sigma = q.prog_noise_sigma * max;
        let mut rng = noise_rng(q.rng_seed, u64::MAX);
        for g in g_plus.iter_mut().chain(g_minus.iter_mut()) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *g = ((*g as f64) + sigma * z).round().max(0.0) as i32;
        }
    }
    ProgrammedCrossbar::from_conductances(g_plus, g_minus)
}

/// Positive and negative counter values, one per bitline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdcReading {
    pub pos: Vec<u32>,
    pub neg: Vec<u32>,
}

impl AdcReading {
    /// Signed count `pos - neg` per column.
    pub fn signed(&self) -> impl Iterator<Item = i64> + '_ {
        self.pos.iter().zip(&self.neg).map(|(&p, &n)| p as i64 - n as i64)
    }
}

/// Converts one bitline accumulation to the two counter values.
#[inline]
pub(crate) fn digitize(acc: f64, gain: f64, adc_max: f64, noise: f64) -> (u32, u32) {
    let c = gain * acc + noise;
    let pos = c.max(0.0).round().min(adc_max);
    let neg = (-c).max(0.0).round().min(adc_max);
    (pos as u32, neg as u32)
}

/// Crossbar MVM followed by dual-rail digitization for sample 0 of the noise stream.
pub fn crossbar_mvm_adc(xb: &ProgrammedCrossbar, x_q: &[i32], q: &QuantConfig) -> Result<AdcReading> {
    crossbar_mvm_adc_at(xb, x_q, q, 0)
}

/// Crossbar MVM for the `sample`-th input of a run.
///
/// `a_j = sum_i (g_plus - g_minus)_{ij} x_i` is accumulated exactly; the
/// counters hold `round(adc_gain * max(±a_j, 0))` clipped to the ADC range.
/// Read noise, when enabled, is added in counts before rounding.
pub fn crossbar_mvm_adc_at(
    xb: &ProgrammedCrossbar,
    x_q: &[i32],
    q: &QuantConfig,
    sample: u64,
) -> Result<AdcReading> {
    if x_q.len() != xb.rows_used {
        return Err(Error::dims("DAC code vector", xb.rows_used, x_q.len()));
    }
    let mut acc = vec![0i64; xb.cols_used];
    for (i, &x) in x_q.iter().enumerate() {
        if x == 0 {
            continue;
        }
        let gp = xb.g_plus.row(i);
        let gm = xb.g_minus.row(i);
        for ((a, &p), &m) in acc.iter_mut().zip(gp.iter()).zip(gm.iter()) {
            *a += (p - m) as i64 * x as i64;
        }
    }
    let adc_max = q.adc_max() as f64;
    let mut rng = (q.read_noise_sigma > 0.0).then(|| noise_rng(q.rng_seed, sample));
    let sigma = q.read_noise_sigma * adc_max;
    let (pos, neg) = acc
        .iter()
        .map(|&a| {
            let noise = match rng.as_mut() {
                Some(r) => sigma * Distribution::<f64>::sample(&StandardNormal, r),
                None => 0.0,
            };
            digitize(a as f64, q.adc_gain, adc_max, noise)
        })
        .unzip();
    Ok(AdcReading { pos, neg })
}
