//! Analytical pipeline model of the four-tile AIMC accelerator.
//!
//! Each mapped layer occupies one tile stage and the shared digital unit is
//! the final stage. All stages advance on a common beat, so throughput is the
//! inverse beat and latency is the stage count times the beat.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tile geometry, timing and power constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub n_tiles: usize,
    pub rows: usize,
    pub cols: usize,
    /// DAC + crossbar + ADC latency, seconds.
    pub t_analog: f64,
    /// Pipeline beat (slowest stage), seconds.
    pub t_stage: f64,
    /// Crossbar array and converters at full load, watts.
    pub p_xbar: f64,
    /// Local digital unit, watts.
    pub p_ldpu: f64,
    /// Shared digital unit, watts.
    pub p_dpu: f64,
    /// Share of `p_xbar` drawn by the peripheral circuitry.
    pub peripheral_fraction: f64,
    /// Scale the array share of `p_xbar` by the fraction of cells in use.
    #[serde(default)]
    pub utilization_scaling: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            n_tiles: 4,
            rows: 512,
            cols: 512,
            t_analog: 40e-9,
            t_stage: 50e-9,
            p_xbar: 0.13,
            p_ldpu: 0.33,
            p_dpu: 0.18,
            peripheral_fraction: 0.90,
            utilization_scaling: false,
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_tiles == 0 || self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArgument("tile geometry must be positive".into()));
        }
        if !(self.t_analog > 0.0 && self.t_stage >= self.t_analog) {
            return Err(Error::InvalidArgument(format!(
                "stage time {} s must cover the analog latency {} s",
                self.t_stage, self.t_analog
            )));
        }
        if [self.p_xbar, self.p_ldpu, self.p_dpu].iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidArgument("powers must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.peripheral_fraction) {
            return Err(Error::InvalidArgument("peripheral_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Stage {
    Tile {
        index: usize,
        rows_used: usize,
        cols_used: usize,
    },
    Dpu,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineMapping {
    pub stages: Vec<Stage>,
    pub workload_id: String,
}

impl PipelineMapping {
    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn tile_stages(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.stages.iter().filter_map(|s| match *s {
            Stage::Tile {
                index,
                rows_used,
                cols_used,
            } => Some((index, rows_used, cols_used)),
            Stage::Dpu => None,
        })
    }

    pub fn tile_count(&self) -> usize {
        self.tile_stages().count()
    }

    /// Checks the structural invariants against `arch`.
    pub fn validate(&self, arch: &ArchConfig) -> Result<()> {
        let dpu_positions: Vec<usize> = self
            .stages
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, Stage::Dpu))
            .map(|(k, _)| k)
            .collect();
        if dpu_positions != [self.stages.len().saturating_sub(1)] {
            return Err(Error::InvalidArgument(
                "mapping needs exactly one digital stage, placed last".into(),
            ));
        }
        let tiles = self.tile_count();
        if tiles > arch.n_tiles {
            return Err(Error::TooManyLayers {
                layers: tiles,
                tiles: arch.n_tiles,
            });
        }
        for (layer, (_, rows, cols)) in self.tile_stages().enumerate() {
            if rows > arch.rows || cols > arch.cols {
                return Err(Error::Unmappable {
                    layer,
                    rows,
                    cols,
                    max_rows: arch.rows,
                    max_cols: arch.cols,
                });
            }
        }
        Ok(())
    }
}

/// Modeled figures for one mapping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    /// Samples per second.
    pub throughput: f64,
    /// Seconds from input to result.
    pub latency: f64,
    /// Watts.
    pub power: f64,
    /// Joules per sample.
    pub energy_per_inference: f64,
}

/// One tile per `(in, out)` layer in order, then the digital stage.
///
/// Layers are placed on the wordlines (`in`) and bitlines (`out`) of one
/// crossbar each; there is no reuse of a tile within one sample.
pub fn map_network(
    workload_id: &str,
    layer_dims: &[(usize, usize)],
    arch: &ArchConfig,
) -> Result<PipelineMapping> {
    arch.validate()?;
    for (layer, &(rows, cols)) in layer_dims.iter().enumerate() {
        if rows > arch.rows || cols > arch.cols {
            return Err(Error::Unmappable {
                layer,
                rows,
                cols,
                max_rows: arch.rows,
                max_cols: arch.cols,
            });
        }
    }
    if layer_dims.len() > arch.n_tiles {
        return Err(Error::TooManyLayers {
            layers: layer_dims.len(),
            tiles: arch.n_tiles,
        });
    }
    let mut stages: Vec<Stage> = layer_dims
        .iter()
        .enumerate()
        .map(|(index, &(rows_used, cols_used))| Stage::Tile {
            index,
            rows_used,
            cols_used,
        })
        .collect();
    stages.push(Stage::Dpu);
    Ok(PipelineMapping {
        stages,
        workload_id: workload_id.to_string(),
    })
}

/// `(throughput, latency)`; the throughput depends on the beat alone.
pub fn pipeline_metrics(m: &PipelineMapping, arch: &ArchConfig) -> (f64, f64) {
    (1.0 / arch.t_stage, m.stage_count() as f64 * arch.t_stage)
}

/// Summed stage powers: each tile draws crossbar + local digital power and
/// the shared digital unit is added once.
pub fn power_model(m: &PipelineMapping, arch: &ArchConfig) -> f64 {
    let tiles: f64 = m
        .tile_stages()
        .map(|(_, rows, cols)| {
            let xbar = if arch.utilization_scaling {
                let used = (rows * cols) as f64 / (arch.rows * arch.cols) as f64;
                arch.p_xbar * (arch.peripheral_fraction + (1.0 - arch.peripheral_fraction) * used)
            } else {
                arch.p_xbar
            };
            xbar + arch.p_ldpu
        })
        .sum();
    tiles + arch.p_dpu
}

/// Joules per sample, `power / throughput`.
pub fn energy_per_inference(power: f64, throughput: f64) -> Result<f64> {
    if !(throughput > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "throughput must be positive, got {throughput}"
        )));
    }
    Ok(power / throughput)
}

pub fn perf_report(m: &PipelineMapping, arch: &ArchConfig) -> Result<PerfReport> {
    m.validate(arch)?;
    let (throughput, latency) = pipeline_metrics(m, arch);
    let power = power_model(m, arch);
    Ok(PerfReport {
        throughput,
        latency,
        power,
        energy_per_inference: energy_per_inference(power, throughput)?,
    })
}
