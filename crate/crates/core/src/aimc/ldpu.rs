use serde::{Deserialize, Serialize};

use super::crossbar::AdcReading;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LdpuActivation {
    None,
    Relu,
}

impl LdpuActivation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            LdpuActivation::None => x,
            LdpuActivation::Relu => x.max(0.0),
        }
    }
}

/// `y_j = act(out_scale * (pos_j - neg_j) + bias_j)`.
pub fn ldpu_apply(r: &AdcReading, out_scale: f64, bias: &[f64], act: LdpuActivation) -> Result<Vec<f64>> {
    if r.pos.len() != r.neg.len() {
        return Err(Error::dims("ADC rails", r.pos.len(), r.neg.len()));
    }
    if bias.len() != r.pos.len() {
        return Err(Error::dims("LDPU bias length", r.pos.len(), bias.len()));
    }
    Ok(r
        .signed()
        .zip(bias)
        .map(|(c, &b)| act.apply(out_scale * c as f64 + b))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reading(pos: Vec<u32>, neg: Vec<u32>) -> AdcReading {
        AdcReading { pos, neg }
    }

    #[test]
    fn zero_reading_with_zero_bias() {
        let r = reading(vec![0, 0], vec![0, 0]);
        for act in [LdpuActivation::None, LdpuActivation::Relu] {
            assert_eq!(ldpu_apply(&r, 3.0, &[0.0, 0.0], act).unwrap(), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn affine_then_activation() {
        let r = reading(vec![10], vec![0]);
        assert_eq!(ldpu_apply(&r, 0.5, &[1.0], LdpuActivation::None).unwrap(), vec![6.0]);
        let r = reading(vec![0], vec![6]);
        assert_eq!(ldpu_apply(&r, 0.5, &[0.0], LdpuActivation::None).unwrap(), vec![-3.0]);
        assert_eq!(ldpu_apply(&r, 0.5, &[0.0], LdpuActivation::Relu).unwrap(), vec![0.0]);
    }

    #[test]
    fn bias_length_checked() {
        let r = reading(vec![1, 2], vec![0, 0]);
        assert!(ldpu_apply(&r, 1.0, &[0.0], LdpuActivation::None).is_err());
    }
}
