use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sublattice {
    A,
    B,
}

/// Square lattice geometry: nearest-neighbour bonds and checkerboard labels.
///
/// Sites are numbered row-major, `index = y * lx + x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub lx: usize,
    pub ly: usize,
    pub periodic: bool,
    /// Unordered pairs stored as `(min, max)`, sorted, no duplicates.
    pub bonds: Vec<(usize, usize)>,
    pub sublattice: Vec<Sublattice>,
    /// Bonds dropped because a periodic wrap reproduced an existing bond.
    pub duplicate_bonds_removed: usize,
}

impl LatticeSpec {
    pub fn n_sites(&self) -> usize {
        self.lx * self.ly
    }

    /// True when every bond joins an A site to a B site.
    pub fn is_bipartite(&self) -> bool {
        self.bonds
            .iter()
            .all(|&(i, j)| self.sublattice[i] != self.sublattice[j])
    }

    pub(crate) fn require_bipartite(&self) -> Result<()> {
        if self.is_bipartite() {
            Ok(())
        } else {
            Err(Error::NotBipartite {
                lx: self.lx,
                ly: self.ly,
            })
        }
    }
}

/// Builds an `lx × ly` square lattice with open or periodic boundaries.
///
/// Periodic wraps on a side of length 2 coincide with the interior bond;
/// such duplicates are dropped and logged.
pub fn build_lattice(lx: usize, ly: usize, periodic: bool) -> Result<LatticeSpec> {
    if lx < 2 || ly < 2 {
        return Err(Error::InvalidArgument(format!(
            "lattice sides must be at least 2, got {lx}x{ly}"
        )));
    }
    let idx = |x: usize, y: usize| y * lx + x;
    let mut raw = Vec::with_capacity(2 * lx * ly);
    for y in 0..ly {
        for x in 0..lx {
            if x + 1 < lx {
                raw.push((idx(x, y), idx(x + 1, y)));
            } else if periodic {
                raw.push((idx(x, y), idx(0, y)));
            }
            if y + 1 < ly {
                raw.push((idx(x, y), idx(x, y + 1)));
            } else if periodic {
                raw.push((idx(x, y), idx(x, 0)));
            }
        }
    }
    let total = raw.len();
    let bonds: BTreeSet<(usize, usize)> = raw
        .into_iter()
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    let duplicate_bonds_removed = total - bonds.len();
    if duplicate_bonds_removed > 0 {
        log::warn!(
            "{lx}x{ly} periodic lattice: removed {duplicate_bonds_removed} duplicate wrap bonds"
        );
    }
    let sublattice = (0..lx * ly)
        .map(|i| {
            if ((i % lx) + (i / lx)).is_multiple_of(2) {
                Sublattice::A
            } else {
                Sublattice::B
            }
        })
        .collect();
    Ok(LatticeSpec {
        lx,
        ly,
        periodic,
        bonds: bonds.into_iter().collect(),
        sublattice,
        duplicate_bonds_removed,
    })
}
