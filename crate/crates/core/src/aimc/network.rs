//! Whole-network mappings onto tiles: the RBM on one tile plus the digital
//! unit, and the four-layer SVDD network on four tiles plus the digital unit.
//!
//! Scales are calibrated layer by layer on a calibration batch pushed through
//! the quantized datapath itself, so every layer sees the codes it will see
//! at inference time.

use ndarray::{s, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::crossbar::{digitize, noise_rng, program_weights, ProgrammedCrossbar};
use super::dpu::{dpu_nqs_reduce, dpu_svdd_reduce};
use super::ldpu::{ldpu_apply, LdpuActivation};
use super::lut::{lut_build, Lut, LutFunction};
use super::quant::{dac_quantize, scale_from_magnitudes, QuantConfig};
use crate::error::{Error, Result};
use crate::numeric::percentile;
use crate::perf::{map_network, ArchConfig};
use crate::ref_models::{EventRecord, MlpParams, RbmParams, SpinConfiguration, SvddTarget};

/// Rows evaluated per batched crossbar call.
const CHUNK: usize = 256;
/// Calibration passes draw read noise from a separate range of streams.
const CALIBRATION_STREAM: u64 = 1 << 63;

fn layer_seed(base: u64, layer: usize) -> u64 {
    // splitmix64 step keeps per-layer streams decorrelated
    let mut z = base.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(layer as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One programmed tile: crossbar, converter settings, LDPU bias and activation.
#[derive(Debug, Clone)]
pub struct AnalogLayer {
    pub crossbar: ProgrammedCrossbar,
    pub quant: QuantConfig,
    pub bias: Vec<f64>,
    pub activation: LdpuActivation,
}

impl AnalogLayer {
    /// Real units per signed ADC count.
    pub fn out_scale(&self) -> f64 {
        self.quant.input_scale * self.quant.weight_scale / self.quant.adc_gain
    }

    pub fn in_dim(&self) -> usize {
        self.crossbar.rows_used
    }

    pub fn out_dim(&self) -> usize {
        self.crossbar.cols_used
    }

    pub fn quantize_input(&self, x: &[f64]) -> Vec<i32> {
        x.iter()
            .map(|&v| dac_quantize(v, self.quant.input_scale, self.quant.dac_bits))
            .collect()
    }

    /// DAC, crossbar, ADC and LDPU for one sample.
    pub fn forward(&self, x: &[f64], sample: u64) -> Result<Vec<f64>> {
        if x.len() != self.in_dim() {
            return Err(Error::dims("tile input length", self.in_dim(), x.len()));
        }
        let codes = self.quantize_input(x);
        let reading = super::crossbar::crossbar_mvm_adc_at(&self.crossbar, &codes, &self.quant, sample)?;
        ldpu_apply(&reading, self.out_scale(), &self.bias, self.activation)
    }

    /// Exact integer accumulations for a batch of real inputs, as `f64`.
    ///
    /// Codes and levels are integers well below 2^53 in magnitude, so the
    /// floating-point product is exact in any summation order.
    fn accumulate(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let codes = x.mapv(|v| dac_quantize(v, self.quant.input_scale, self.quant.dac_bits) as f64);
        codes.dot(&self.crossbar.levels_f64())
    }

    /// ADC and LDPU applied to accumulations of rows `first_sample..`.
    fn finish(&self, mut acc: Array2<f64>, first_sample: u64) -> Array2<f64> {
        let adc_max = self.quant.adc_max() as f64;
        let gain = self.quant.adc_gain;
        let out_scale = self.out_scale();
        let sigma = self.quant.read_noise_sigma * adc_max;
        for (r, mut row) in acc.axis_iter_mut(Axis(0)).enumerate() {
            let mut rng = (sigma > 0.0).then(|| noise_rng(self.quant.rng_seed, first_sample + r as u64));
            for (v, &b) in row.iter_mut().zip(&self.bias) {
                let noise = match rng.as_mut() {
                    Some(g) => sigma * Distribution::<f64>::sample(&StandardNormal, g),
                    None => 0.0,
                };
                let (pos, neg) = digitize(*v, gain, adc_max, noise);
                *v = self.activation.apply(out_scale * (pos as i64 - neg as i64) as f64 + b);
            }
        }
        acc
    }

    /// Batched equivalent of [`AnalogLayer::forward`], bit-identical per row.
    pub fn forward_batch(&self, x: ArrayView2<f64>, first_sample: u64) -> Result<Array2<f64>> {
        if x.ncols() != self.in_dim() {
            return Err(Error::dims("tile input length", self.in_dim(), x.ncols()));
        }
        Ok(self.finish(self.accumulate(x), first_sample))
    }

    /// Programs `w_t` (inputs × outputs) and calibrates the ADC gain on `inputs`.
    /// Returns the layer and its outputs on the calibration batch.
    fn calibrate(
        w_t: ArrayView2<f64>,
        bias: Vec<f64>,
        activation: LdpuActivation,
        inputs: ArrayView2<f64>,
        input_scale: f64,
        base: &QuantConfig,
        layer: usize,
    ) -> Result<(Self, Array2<f64>)> {
        let max_w = w_t.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let weight_scale = if max_w > 0.0 {
            max_w / base.max_level() as f64
        } else {
            1.0
        };
        let mut quant = QuantConfig {
            input_scale,
            weight_scale,
            adc_gain: 1.0,
            rng_seed: layer_seed(base.rng_seed, layer),
            ..base.clone()
        };
        let crossbar = program_weights(w_t, &quant)?;
        let mut tile = AnalogLayer {
            crossbar,
            quant: quant.clone(),
            bias,
            activation,
        };
        let acc = tile.accumulate(inputs);
        let magnitudes: Vec<f64> = acc.iter().map(|v| v.abs()).collect();
        let p = percentile(&magnitudes, base.adc_clip_percentile).unwrap_or(0.0);
        if p > 0.0 {
            quant.adc_gain = quant.adc_max() as f64 * (1.0 - quant.adc_margin) / p;
        }
        tile.quant = quant;
        let out = tile.finish(acc, CALIBRATION_STREAM);
        Ok((tile, out))
    }
}

fn spins_matrix(states: &[SpinConfiguration], n: usize) -> Result<Array2<f64>> {
    let mut m = Array2::zeros((states.len(), n));
    for (mut row, s) in m.axis_iter_mut(Axis(0)).zip(states) {
        if s.len() != n {
            return Err(Error::dims("spin configuration length", n, s.len()));
        }
        for (v, &x) in row.iter_mut().zip(s.spins()) {
            *v = x as f64;
        }
    }
    Ok(m)
}

fn events_matrix(events: &[EventRecord]) -> Array2<f64> {
    let mut m = Array2::zeros((events.len(), crate::ref_models::FEATURES_PER_EVENT));
    for (mut row, e) in m.axis_iter_mut(Axis(0)).zip(events) {
        row.assign(&ndarray::ArrayView1::from(&e.features()[..]));
    }
    m
}

/// Evaluates `f` on fixed-size row chunks in parallel, preserving order.
fn chunked<F>(x: ArrayView2<f64>, f: F) -> Result<Vec<f64>>
where
    F: Fn(ArrayView2<f64>, u64) -> Result<Vec<f64>> + Sync,
{
    let starts: Vec<usize> = (0..x.nrows()).step_by(CHUNK).collect();
    let parts = starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(x.nrows());
            f(x.slice(s![start..end, ..]), start as u64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// An RBM programmed onto one tile, with the log2cosh table of the digital unit.
#[derive(Debug, Clone)]
pub struct AimcRbm {
    pub tile: AnalogLayer,
    pub lut: Lut,
    pub n: usize,
}

impl AimcRbm {
    /// Spins map to the extreme DAC codes exactly (`input_scale = 1 / dac_max`);
    /// the ADC gain and table domain come from `calibration`.
    pub fn program(
        p: &RbmParams,
        calibration: &[SpinConfiguration],
        q: &QuantConfig,
        arch: &ArchConfig,
    ) -> Result<Self> {
        q.validate()?;
        if calibration.is_empty() {
            return Err(Error::Empty("NQS calibration states"));
        }
        map_network("nqs", &[(p.n, p.hidden())], arch)?;
        let inputs = spins_matrix(calibration, p.n)?;
        let input_scale = 1.0 / q.dac_max() as f64;
        let (tile, out) = AnalogLayer::calibrate(
            p.w.t(),
            p.b.to_vec(),
            LdpuActivation::None,
            inputs.view(),
            input_scale,
            q,
            0,
        )?;
        let h = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = if h > 0.0 { h } else { 1.0 };
        let lut = lut_build(LutFunction::Log2Cosh, -h, h, q.lut_entries)?;
        Ok(Self { tile, lut, n: p.n })
    }

    pub fn log_psi_at(&self, s: &SpinConfiguration, sample: u64) -> Result<f64> {
        let a = self.tile.forward(&s.as_f64(), sample)?;
        dpu_nqs_reduce(&a, &self.lut)
    }

    pub fn log_psi_batch(&self, states: &[SpinConfiguration]) -> Result<Vec<f64>> {
        let x = spins_matrix(states, self.n)?;
        chunked(x.view(), |rows, first| {
            let a = self.tile.forward_batch(rows, first)?;
            a.axis_iter(Axis(0))
                .map(|row| dpu_nqs_reduce(row.as_slice().expect("standard layout"), &self.lut))
                .collect()
        })
    }
}

/// `log psi(s)` through DAC, crossbar, ADC, LDPU (bias, no activation) and
/// the log2cosh adder tree.
pub fn aimc_forward_nqs(rbm: &AimcRbm, s: &SpinConfiguration) -> Result<f64> {
    rbm.log_psi_at(s, 0)
}

/// A Deep SVDD network on consecutive tiles, ReLU on every hidden tile.
#[derive(Debug, Clone)]
pub struct AimcMlp {
    pub tiles: Vec<AnalogLayer>,
    pub target: SvddTarget,
    pub lut: Lut,
}

impl AimcMlp {
    pub fn program(
        p: &MlpParams,
        target: SvddTarget,
        calibration: &[EventRecord],
        q: &QuantConfig,
        arch: &ArchConfig,
    ) -> Result<Self> {
        q.validate()?;
        if calibration.is_empty() {
            return Err(Error::Empty("SVDD calibration events"));
        }
        if p.output_dim() != target.z {
            return Err(Error::dims("SVDD network output vs target", target.z, p.output_dim()));
        }
        map_network("svdd", &p.layer_dims(), arch)?;
        let mut x = events_matrix(calibration);
        let magnitudes: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        let mut input_scale = scale_from_magnitudes(&magnitudes, q.input_clip_percentile, q.dac_bits)?;
        let last = p.layers.len() - 1;
        let mut tiles = Vec::with_capacity(p.layers.len());
        for (k, layer) in p.layers.iter().enumerate() {
            let act = if k < last {
                LdpuActivation::Relu
            } else {
                LdpuActivation::None
            };
            let (tile, out) = AnalogLayer::calibrate(
                layer.weights.t(),
                layer.bias.to_vec(),
                act,
                x.view(),
                input_scale,
                q,
                k,
            )?;
            tiles.push(tile);
            if k < last {
                let magnitudes: Vec<f64> = out.iter().map(|v| v.abs()).collect();
                // an all-zero hidden layer quantizes to zero codes under any scale
                input_scale = scale_from_magnitudes(&magnitudes, q.input_clip_percentile, q.dac_bits)
                    .unwrap_or(1.0 / q.dac_max() as f64);
            }
            x = out;
        }
        let h = x.iter().fold(0.0f64, |m, y| m.max((target.n - y).abs()));
        let h = if h > 0.0 { h } else { target.n.max(1.0) };
        let lut = lut_build(LutFunction::Square, -h, h, q.lut_entries)?;
        Ok(Self { tiles, target, lut })
    }

    pub fn output_at(&self, x: &[f64], sample: u64) -> Result<Vec<f64>> {
        let mut h = x.to_vec();
        for tile in &self.tiles {
            h = tile.forward(&h, sample)?;
        }
        Ok(h)
    }

    pub fn score_at(&self, x: &EventRecord, sample: u64) -> Result<f64> {
        let y = self.output_at(x.features(), sample)?;
        dpu_svdd_reduce(&y, &self.target, &self.lut)
    }

    pub fn score_batch(&self, events: &[EventRecord]) -> Result<Vec<f64>> {
        let x = events_matrix(events);
        chunked(x.view(), |rows, first| {
            let mut h = rows.to_owned();
            for tile in &self.tiles {
                h = tile.forward_batch(h.view(), first)?;
            }
            h.axis_iter(Axis(0))
                .map(|row| dpu_svdd_reduce(row.as_slice().expect("standard layout"), &self.target, &self.lut))
                .collect()
        })
    }
}

/// Anomaly score of one event through the four tiles and the square-table reduction.
pub fn aimc_forward_svdd(net: &AimcMlp, x: &EventRecord) -> Result<f64> {
    net.score_at(x, 0)
}
