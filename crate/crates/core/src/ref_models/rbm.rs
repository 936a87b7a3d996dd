//! RBM wavefunction amplitudes and Heisenberg-model energies.
//!
//! The RBM amplitude is `psi(s) = prod_i 2 cosh([W s + b]_i)`. Everything here
//! works with `log psi` because the product overflows `f64` for a few hundred
//! hidden units.

use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::lattice::LatticeSpec;
use super::spins::SpinConfiguration;
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// `ln(2 cosh x)`, evaluated as `|x| + ln(1 + e^{-2|x|})` so it never overflows.
pub fn log2cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// Weights and biases of an RBM with `alpha * n` hidden units.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParams {
    /// Shape `(alpha * n, n)`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub alpha: usize,
    pub n: usize,
}

impl RbmParams {
    pub fn new(w: Array2<f64>, b: Array1<f64>, alpha: usize, n: usize) -> Result<Self> {
        if alpha == 0 || n == 0 {
            return Err(Error::InvalidArgument(
                "RBM alpha and n must be positive".into(),
            ));
        }
        let hidden = alpha * n;
        if w.dim() != (hidden, n) {
            return Err(Error::dims("RBM weight rows", hidden, w.nrows()));
        }
        if b.len() != hidden {
            return Err(Error::dims("RBM bias length", hidden, b.len()));
        }
        Ok(Self { w, b, alpha, n })
    }

    pub fn zeros(n: usize, alpha: usize) -> Self {
        Self {
            w: Array2::zeros((alpha * n, n)),
            b: Array1::zeros(alpha * n),
            alpha,
            n,
        }
    }

    /// Every weight and bias drawn i.i.d. from `U[-half_width, half_width]`.
    pub fn random_uniform(n: usize, alpha: usize, half_width: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hidden = alpha * n;
        let w = Array2::from_shape_simple_fn((hidden, n), || {
            rng.random_range(-half_width..=half_width)
        });
        let b = Array1::from_shape_simple_fn(hidden, || rng.random_range(-half_width..=half_width));
        Self { w, b, alpha, n }
    }

    pub fn hidden(&self) -> usize {
        self.alpha * self.n
    }

    /// Pre-activations `W s + b`.
    pub fn preactivations(&self, s: &SpinConfiguration) -> Result<Array1<f64>> {
        if s.len() != self.n {
            return Err(Error::dims("spin configuration length", self.n, s.len()));
        }
        let x = Array1::from(s.as_f64());
        Ok(self.w.dot(&x) + &self.b)
    }
}

/// `log psi(s) = sum_i log2cosh([W s + b]_i)`.
pub fn rbm_log_psi(p: &RbmParams, s: &SpinConfiguration) -> Result<f64> {
    Ok(p.preactivations(s)?.iter().map(|&a| log2cosh(a)).sum())
}

/// `log psi` for every row of `x` (one spin configuration per row, as `±1.0`).
pub fn rbm_log_psi_batch(p: &RbmParams, x: ArrayView2<f64>) -> Result<Vec<f64>> {
    if x.ncols() != p.n {
        return Err(Error::dims("spin configuration length", p.n, x.ncols()));
    }
    let a = x.dot(&p.w.t()) + &p.b;
    Ok(a.rows().into_iter().map(|r| r.iter().map(|&v| log2cosh(v)).sum()).collect())
}

/// Local energy of the spin-1/2 Heisenberg model for a state given by its
/// log-amplitude, with the amplitude of any neighbour supplied by `log_psi_of`.
fn local_energy_with<F>(
    s: &SpinConfiguration,
    log_psi_s: f64,
    lat: &LatticeSpec,
    j: f64,
    marshall: bool,
    mut log_psi_of: F,
) -> Result<f64>
where
    F: FnMut(&SpinConfiguration) -> Result<f64>,
{
    if s.len() != lat.n_sites() {
        return Err(Error::dims("spin configuration length", lat.n_sites(), s.len()));
    }
    if marshall {
        lat.require_bipartite()?;
    }
    let sign = if marshall { -1.0 } else { 1.0 };
    let spins = s.spins();
    let mut acc = 0.0;
    for &(a, b) in &lat.bonds {
        let zz = (spins[a] * spins[b]) as f64;
        acc += 0.25 * zz;
        if spins[a] != spins[b] {
            let ratio = (log_psi_of(&s.swapped(a, b))? - log_psi_s).exp();
            acc += sign * 0.5 * ratio;
        }
    }
    Ok(j * acc)
}

/// `E_loc(s) = sum_{s'} H_{s s'} psi(s') / psi(s)` for `H = J sum_<ij> S_i . S_j`.
///
/// With `marshall` set the off-diagonal elements carry the sublattice sign
/// `-1`, i.e. `psi` is read as the amplitude in the Marshall-rotated basis.
pub fn heisenberg_local_energy(
    p: &RbmParams,
    s: &SpinConfiguration,
    lat: &LatticeSpec,
    j: f64,
    marshall: bool,
) -> Result<f64> {
    if p.n != lat.n_sites() {
        return Err(Error::dims("RBM visible units vs lattice sites", lat.n_sites(), p.n));
    }
    let log_psi_s = rbm_log_psi(p, s)?;
    local_energy_with(s, log_psi_s, lat, j, marshall, |t| rbm_log_psi(p, t))
}

/// Exact variational energy `<psi|H|psi> / <psi|psi>` summed over `sector`.
///
/// Amplitudes of neighbouring states outside `sector` are evaluated on demand.
pub fn energy_expectation_fullsum(
    p: &RbmParams,
    sector: &[SpinConfiguration],
    lat: &LatticeSpec,
    j: f64,
    marshall: bool,
) -> Result<f64> {
    if sector.is_empty() {
        return Err(Error::Empty("energy sector"));
    }
    if p.n != lat.n_sites() {
        return Err(Error::dims("RBM visible units vs lattice sites", lat.n_sites(), p.n));
    }
    let log_psi = sector
        .par_iter()
        .map(|s| rbm_log_psi(p, s))
        .collect::<Result<Vec<_>>>()?;
    expectation_impl(sector, &log_psi, lat, j, marshall, |s| rbm_log_psi(p, s))
}

/// Variational energy from precomputed log-amplitudes.
///
/// `sector` must be closed under exchanging the spins of any bond, as the
/// fixed-magnetization sectors are.
pub fn energy_expectation_from_log_psi(
    sector: &[SpinConfiguration],
    log_psi: &[f64],
    lat: &LatticeSpec,
    j: f64,
    marshall: bool,
) -> Result<f64> {
    if sector.is_empty() {
        return Err(Error::Empty("energy sector"));
    }
    if log_psi.len() != sector.len() {
        return Err(Error::dims("log-amplitude table", sector.len(), log_psi.len()));
    }
    expectation_impl(sector, log_psi, lat, j, marshall, |_| {
        Err(Error::InvalidArgument(
            "sector is not closed under bond exchanges".into(),
        ))
    })
}

fn expectation_impl<F>(
    sector: &[SpinConfiguration],
    log_psi: &[f64],
    lat: &LatticeSpec,
    j: f64,
    marshall: bool,
    fallback: F,
) -> Result<f64>
where
    F: Fn(&SpinConfiguration) -> Result<f64> + Sync,
{
    let n = lat.n_sites();
    if n > 64 {
        return Err(Error::InvalidArgument(
            "full-sum energies support at most 64 sites".into(),
        ));
    }
    let mut index = HashMap::with_capacity(sector.len());
    for (k, s) in sector.iter().enumerate() {
        if s.len() != n {
            return Err(Error::dims("spin configuration length", n, s.len()));
        }
        if index.insert(s.to_mask(), k).is_some() {
            return Err(Error::InvalidArgument(format!(
                "sector contains duplicate configuration at position {k}"
            )));
        }
    }
    if let Some(bad) = log_psi.iter().find(|v| !v.is_finite()) {
        return Err(Error::Overflow(format!("non-finite log-amplitude {bad}")));
    }
    let max = log_psi.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let e_loc = sector
        .par_iter()
        .zip(log_psi.par_iter())
        .map(|(s, &lp)| {
            local_energy_with(s, lp, lat, j, marshall, |t| match index.get(&t.to_mask()) {
                Some(&k) => Ok(log_psi[k]),
                None => fallback(t),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for (&lp, &e) in log_psi.iter().zip(&e_loc) {
        let w = (2.0 * (lp - max)).exp();
        num.add(w * e);
        den.add(w);
    }
    let energy = num.value() / den.value();
    if !energy.is_finite() {
        return Err(Error::Overflow(
            "variational energy is not finite after max-log shift".into(),
        ));
    }
    Ok(energy)
}
