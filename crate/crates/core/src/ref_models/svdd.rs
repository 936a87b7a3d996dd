use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output dimensions used across the Deep SVDD ensemble.
pub const ENSEMBLE_Z: [usize; 9] = [5, 8, 13, 21, 34, 55, 89, 144, 233];
/// Target scalar values used across the Deep SVDD ensemble.
pub const ENSEMBLE_N: [f64; 7] = [0.0, 1.0, 2.0, 3.0, 4.0, 10.0, 25.0];

/// The constant target point `O^z_n`: `z` components all equal to `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvddTarget {
    pub z: usize,
    pub n: f64,
}

impl SvddTarget {
    pub fn new(z: usize, n: f64) -> Result<Self> {
        if z == 0 {
            return Err(Error::InvalidArgument("SVDD target dimension must be positive".into()));
        }
        if !(n >= 0.0 && n.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "SVDD target value must be a finite non-negative number, got {n}"
            )));
        }
        Ok(Self { z, n })
    }

    pub fn point(&self) -> Vec<f64> {
        vec![self.n; self.z]
    }

    /// Whether `(z, n)` is one of the 63 ensemble combinations.
    pub fn is_standard(&self) -> bool {
        ENSEMBLE_Z.contains(&self.z) && ENSEMBLE_N.contains(&self.n)
    }
}

/// Squared Euclidean distance `sum_k (O_k - y_k)^2` to the target point.
pub fn svdd_score(y: &[f64], t: &SvddTarget) -> Result<f64> {
    if y.len() != t.z {
        return Err(Error::dims("SVDD output length", t.z, y.len()));
    }
    Ok(y.iter().map(|&v| (t.n - v) * (t.n - v)).sum())
}

/// All `(z, n)` combinations, `z` outer.
pub fn build_ensemble_specs() -> Vec<SvddTarget> {
    ENSEMBLE_Z
        .iter()
        .flat_map(|&z| ENSEMBLE_N.iter().map(move |&n| SvddTarget { z, n }))
        .collect()
}

/// How per-network scores are combined into one ensemble score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleAggregation {
    #[default]
    Mean,
    Sum,
    Max,
}

impl EnsembleAggregation {
    pub fn aggregate(self, scores: &[f64]) -> Result<f64> {
        if scores.is_empty() {
            return Err(Error::Empty("ensemble scores"));
        }
        Ok(match self {
            EnsembleAggregation::Mean => {
                crate::numeric::compensated_sum(scores.iter().copied()) / scores.len() as f64
            }
            EnsembleAggregation::Sum => crate::numeric::compensated_sum(scores.iter().copied()),
            EnsembleAggregation::Max => scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}
