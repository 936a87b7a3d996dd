#![allow(dead_code)]

pub mod ed;

use std::sync::OnceLock;

use aimc_core::ref_models::SpinConfiguration;
use ed::SectorHamiltonian;

/// Ground-state energy per the literature for the 4×4 periodic Heisenberg
/// antiferromagnet with J = 1, used to validate the oracle itself.
pub const KNOWN_E0_4X4: f64 = -11.228_483_208_428_9;

/// `<uniform|H|uniform>` in the Marshall-rotated basis of the 4×4 sector:
/// each of the 32 bonds is antiparallel with probability 8/15, giving
/// 32 * (-1/60 - 4/15) = -136/15.
pub const UNIFORM_ENERGY_4X4: f64 = -136.0 / 15.0;

/// The 4×4 zero-magnetization sector in the Marshall basis, J = 1.
pub fn oracle() -> &'static SectorHamiltonian {
    static H: OnceLock<SectorHamiltonian> = OnceLock::new();
    H.get_or_init(|| SectorHamiltonian::periodic(4, 4, 8, 1.0, true))
}

pub fn oracle_ground_energy() -> f64 {
    static E0: OnceLock<f64> = OnceLock::new();
    *E0.get_or_init(|| oracle().ground_energy(160))
}

/// Amplitudes `exp(log psi - max)` in the oracle's state order.
pub fn amplitudes(h: &SectorHamiltonian, log_psi: impl Fn(&SpinConfiguration) -> f64) -> Vec<f64> {
    let logs: Vec<f64> = h
        .states
        .iter()
        .map(|&m| log_psi(&SpinConfiguration::from_mask(m, 16)))
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    logs.iter().map(|l| (l - top).exp()).collect()
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
