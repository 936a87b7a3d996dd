use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A configuration of spin-1/2 z-projections, one `±1` per lattice site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfiguration(Vec<i8>);

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some((site, &value)) = spins.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
            return Err(Error::InvalidSpin { site, value });
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Checkerboard state on an `lx × ly` grid, `+1` on even `(x + y)`.
    pub fn neel(lx: usize, ly: usize) -> Self {
        let spins = (0..lx * ly)
            .map(|i| if ((i % lx) + (i / lx)).is_multiple_of(2) { 1 } else { -1 })
            .collect();
        Self(spins)
    }

    /// Decodes the low `n` bits of `mask`; a set bit is spin up.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        assert!(n <= 64, "bitmask encoding supports at most 64 sites");
        Self((0..n).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect())
    }

    /// Bitmask encoding (bit `i` set iff site `i` is up). Requires `len() <= 64`.
    pub fn to_mask(&self) -> u64 {
        assert!(self.0.len() <= 64, "bitmask encoding supports at most 64 sites");
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s > 0)
            .fold(0u64, |m, (i, _)| m | (1 << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn magnetization(&self) -> i64 {
        self.0.iter().map(|&s| s as i64).sum()
    }

    /// Global spin flip.
    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }

    /// Exchanges the spins at sites `i` and `j`.
    pub fn swapped(&self, i: usize, j: usize) -> Self {
        let mut out = self.0.clone();
        out.swap(i, j);
        Self(out)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| s as f64).collect()
    }
}

impl TryFrom<Vec<i8>> for SpinConfiguration {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpinConfiguration> for Vec<i8> {
    fn from(s: SpinConfiguration) -> Self {
        s.0
    }
}
