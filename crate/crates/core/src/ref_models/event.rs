use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FEATURES_PER_EVENT: usize = 57;

/// Physics objects of one event in feature order, with their slot counts.
pub const OBJECT_SLOTS: [(&str, usize); 4] = [("met", 1), ("e", 4), ("mu", 4), ("j", 10)];

/// `(p_T, eta, phi)` triples for missing energy, 4 electrons, 4 muons and
/// 10 jets, in that order. Absent objects are all-zero triples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EventRecord {
    features: [f64; FEATURES_PER_EVENT],
}

impl EventRecord {
    pub fn new(features: [f64; FEATURES_PER_EVENT]) -> Result<Self> {
        for (k, triple) in features.chunks_exact(3).enumerate() {
            let (pt, eta, phi) = (triple[0], triple[1], triple[2]);
            if !(pt.is_finite() && eta.is_finite() && phi.is_finite()) {
                return Err(Error::InvalidArgument(format!("object {k}: non-finite feature")));
            }
            if pt < 0.0 {
                return Err(Error::InvalidArgument(format!("object {k}: negative p_T {pt}")));
            }
            if phi.abs() > PI {
                return Err(Error::InvalidArgument(format!("object {k}: |phi| = {} exceeds pi", phi.abs())));
            }
        }
        Ok(Self { features })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let features: [f64; FEATURES_PER_EVENT] = values
            .try_into()
            .map_err(|_| Error::dims("event feature count", FEATURES_PER_EVENT, values.len()))?;
        Self::new(features)
    }

    pub fn features(&self) -> &[f64; FEATURES_PER_EVENT] {
        &self.features
    }
}

impl TryFrom<Vec<f64>> for EventRecord {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::from_slice(&v)
    }
}

impl From<EventRecord> for Vec<f64> {
    fn from(e: EventRecord) -> Self {
        e.features.to_vec()
    }
}

/// Canonical column names: `met_pt, met_eta, met_phi, e1_pt, ..., j10_phi`.
pub fn feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(FEATURES_PER_EVENT);
    for (prefix, slots) in OBJECT_SLOTS {
        for slot in 1..=slots {
            let stem = if slots == 1 {
                prefix.to_string()
            } else {
                format!("{prefix}{slot}")
            };
            for q in ["pt", "eta", "phi"] {
                names.push(format!("{stem}_{q}"));
            }
        }
    }
    names
}
