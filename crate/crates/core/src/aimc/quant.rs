use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::percentile;

/// Converter bit depths, weight precision, scales and noise knobs of one tile.
///
/// The scale fields describe a single programmed layer; network calibration
/// fills them per layer on a copy of the base configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantConfig {
    pub dac_bits: u32,
    pub adc_bits: u32,
    /// Signed conductance levels per weight, symmetric around zero.
    pub weight_levels: u32,
    pub lut_entries: usize,
    /// Input units per DAC code.
    pub input_scale: f64,
    /// Weight units per conductance level.
    pub weight_scale: f64,
    /// ADC counts per unit of integer accumulation.
    pub adc_gain: f64,
    /// Programming noise std as a fraction of the largest level.
    pub prog_noise_sigma: f64,
    /// Read noise std as a fraction of the ADC full scale.
    pub read_noise_sigma: f64,
    pub rng_seed: u64,
    /// Percentile of `|x|` mapped to the largest DAC code during calibration.
    pub input_clip_percentile: f64,
    /// Percentile of `|accumulation|` mapped to the ADC target code.
    pub adc_clip_percentile: f64,
    /// Headroom left below the ADC full scale at the calibration percentile.
    pub adc_margin: f64,
}

impl Default for QuantConfig {
    fn default() -> Self {
        Self {
            dac_bits: 8,
            adc_bits: 10,
            weight_levels: 256,
            lut_entries: 1024,
            input_scale: 1.0,
            weight_scale: 1.0,
            adc_gain: 1.0,
            prog_noise_sigma: 0.0,
            read_noise_sigma: 0.0,
            rng_seed: 0,
            input_clip_percentile: 99.9,
            adc_clip_percentile: 99.9,
            adc_margin: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantPreset {
    /// 16-bit converters, weights and tables, no noise.
    Ideal,
    /// 8-bit DAC, 10-bit ADC, 256 weight levels, 1024-entry tables.
    Default,
    /// `Default` plus 2% programming noise.
    Noisy,
}

impl std::str::FromStr for QuantPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ideal" => Ok(Self::Ideal),
            "default" => Ok(Self::Default),
            "noisy" => Ok(Self::Noisy),
            other => Err(Error::InvalidArgument(format!("unknown quant preset '{other}'"))),
        }
    }
}

impl QuantConfig {
    pub fn preset(preset: QuantPreset) -> Self {
        match preset {
            QuantPreset::Default => Self::default(),
            QuantPreset::Ideal => Self {
                dac_bits: 16,
                adc_bits: 16,
                weight_levels: 1 << 16,
                lut_entries: 1 << 16,
                input_clip_percentile: 100.0,
                adc_clip_percentile: 100.0,
                ..Self::default()
            },
            QuantPreset::Noisy => Self {
                prog_noise_sigma: 0.02,
                ..Self::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=24).contains(&self.dac_bits) {
            return Err(Error::InvalidArgument(format!("dac_bits {} outside 2..=24", self.dac_bits)));
        }
        if !(2..=30).contains(&self.adc_bits) {
            return Err(Error::InvalidArgument(format!("adc_bits {} outside 2..=30", self.adc_bits)));
        }
        if self.weight_levels < 4 || self.weight_levels > 1 << 24 {
            return Err(Error::InvalidArgument(format!(
                "weight_levels {} outside 4..=2^24",
                self.weight_levels
            )));
        }
        if self.lut_entries < 2 {
            return Err(Error::InvalidArgument("a lookup table needs at least 2 entries".into()));
        }
        for (name, v) in [
            ("input_scale", self.input_scale),
            ("weight_scale", self.weight_scale),
            ("adc_gain", self.adc_gain),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.prog_noise_sigma >= 0.0 && self.read_noise_sigma >= 0.0) {
            return Err(Error::InvalidArgument("noise levels must be non-negative".into()));
        }
        for p in [self.input_clip_percentile, self.adc_clip_percentile] {
            if !(p > 0.0 && p <= 100.0) {
                return Err(Error::InvalidArgument(format!("percentile {p} outside (0, 100]")));
            }
        }
        if !(0.0..1.0).contains(&self.adc_margin) {
            return Err(Error::InvalidArgument("adc_margin must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Largest DAC code magnitude; `-2^(bits-1)` is never emitted.
    pub fn dac_max(&self) -> i32 {
        (1 << (self.dac_bits - 1)) - 1
    }

    pub fn adc_max(&self) -> u32 {
        (1u32 << self.adc_bits) - 1
    }

    /// Largest conductance level on either rail.
    pub fn max_level(&self) -> i32 {
        (self.weight_levels / 2) as i32 - 1
    }

    pub fn has_noise(&self) -> bool {
        self.prog_noise_sigma > 0.0 || self.read_noise_sigma > 0.0
    }
}

/// `round(x / input_scale)` clipped to the symmetric code range `±(2^(bits-1) - 1)`.
pub fn dac_quantize(x: f64, input_scale: f64, dac_bits: u32) -> i32 {
    let max = ((1i64 << (dac_bits - 1)) - 1) as f64;
    (x / input_scale).round().clamp(-max, max) as i32
}

/// Scale that maps the `clip_percentile`-th percentile of `|x|` over all
/// samples onto the largest DAC code.
pub fn calibrate_scales<S: AsRef<[f64]>>(samples: &[S], clip_percentile: f64, dac_bits: u32) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("calibration samples"));
    }
    if !(clip_percentile > 0.0 && clip_percentile <= 100.0) {
        return Err(Error::InvalidArgument(format!(
            "clip percentile {clip_percentile} outside (0, 100]"
        )));
    }
    let magnitudes: Vec<f64> = samples
        .iter()
        .flat_map(|s| s.as_ref().iter().map(|v| v.abs()))
        .collect();
    scale_from_magnitudes(&magnitudes, clip_percentile, dac_bits)
}

pub(crate) fn scale_from_magnitudes(magnitudes: &[f64], clip_percentile: f64, dac_bits: u32) -> Result<f64> {
    let p = percentile(magnitudes, clip_percentile)
        .ok_or_else(|| Error::Calibration("no finite calibration values".into()))?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Calibration(format!(
            "the {clip_percentile}th percentile of |x| is {p}; the scale would vanish"
        )));
    }
    Ok(p / ((1i64 << (dac_bits - 1)) - 1) as f64)
}
