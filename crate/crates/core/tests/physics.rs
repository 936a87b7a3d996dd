mod common;

use aimc_core::ref_models::{
    build_lattice, energy_expectation_from_log_psi, energy_expectation_fullsum, rbm_log_psi, RbmParams,
    SpinConfiguration,
};
use aimc_core::workloads::enumerate_zero_mag_states;
use common::ed::{lowest_tridiagonal_eigenvalue, SectorHamiltonian};
use common::{amplitudes, oracle, oracle_ground_energy, relative_gap, KNOWN_E0_4X4, UNIFORM_ENERGY_4X4};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn tridiagonal_solver_on_known_matrices() {
    // [[2, 1], [1, 2]] has eigenvalues 1 and 3
    assert!((lowest_tridiagonal_eigenvalue(&[2.0, 2.0], &[1.0]) - 1.0).abs() < 1e-12);
    // path graph Laplacian-like [[1,-1,0],[-1,2,-1],[0,-1,1]] has eigenvalues 0, 1, 3
    assert!(lowest_tridiagonal_eigenvalue(&[1.0, 2.0, 1.0], &[-1.0, -1.0]).abs() < 1e-12);
}

#[test]
fn oracle_sector_dimension() {
    assert_eq!(oracle().dim(), 12870);
}

#[test]
fn oracle_reproduces_known_ground_state() {
    assert!((oracle_ground_energy() - KNOWN_E0_4X4).abs() < 1e-6, "E0 = {}", oracle_ground_energy());
}

#[test]
fn marshall_rotation_preserves_spectrum() {
    let plain = SectorHamiltonian::periodic(4, 4, 8, 1.0, false);
    assert!((plain.ground_energy(160) - oracle_ground_energy()).abs() < 1e-8);
}

#[test]
fn oracle_uniform_expectation() {
    let v = vec![1.0; oracle().dim()];
    assert!(relative_gap(oracle().expectation(&v), UNIFORM_ENERGY_4X4) < 1e-12);
}

#[test]
fn zero_rbm_energy_matches_uniform_state() {
    let lat = build_lattice(4, 4, true).unwrap();
    let sector = enumerate_zero_mag_states(16).unwrap();
    for alpha in [1, 2, 4] {
        let e = energy_expectation_fullsum(&RbmParams::zeros(16, alpha), &sector, &lat, 1.0, true).unwrap();
        assert!(relative_gap(e, UNIFORM_ENERGY_4X4) < 1e-10, "alpha {alpha}: {e}");
    }
}

#[test]
fn fullsum_energy_matches_oracle_rayleigh_quotient() {
    let lat = build_lattice(4, 4, true).unwrap();
    let sector = enumerate_zero_mag_states(16).unwrap();
    let plain = SectorHamiltonian::periodic(4, 4, 8, 1.0, false);
    for (seed, half_width) in [(1u64, 0.1), (2, 0.5), (3, 1.0)] {
        let p = RbmParams::random_uniform(16, 2, half_width, seed);
        let psi = amplitudes(oracle(), |s| rbm_log_psi(&p, s).unwrap());
        let expected = oracle().expectation(&psi);
        let got = energy_expectation_fullsum(&p, &sector, &lat, 1.0, true).unwrap();
        assert!(relative_gap(got, expected) < 1e-10, "marshall seed {seed}: {got} vs {expected}");

        let psi = amplitudes(&plain, |s| rbm_log_psi(&p, s).unwrap());
        let expected = plain.expectation(&psi);
        let got = energy_expectation_fullsum(&p, &sector, &lat, 1.0, false).unwrap();
        assert!(relative_gap(got, expected) < 1e-10, "plain seed {seed}: {got} vs {expected}");
    }
}

#[test]
fn exchange_constant_scales_energy() {
    let lat = build_lattice(4, 4, true).unwrap();
    let sector = enumerate_zero_mag_states(16).unwrap();
    let p = RbmParams::random_uniform(16, 1, 0.3, 5);
    let e1 = energy_expectation_fullsum(&p, &sector, &lat, 1.0, true).unwrap();
    let e2 = energy_expectation_fullsum(&p, &sector, &lat, 2.5, true).unwrap();
    assert!(relative_gap(e2, 2.5 * e1) < 1e-12);
}

#[test]
fn random_rbms_respect_variational_bound() {
    let e0 = oracle_ground_energy();
    let lat = build_lattice(4, 4, true).unwrap();
    let sector = enumerate_zero_mag_states(16).unwrap();
    for seed in 0..40u64 {
        let alpha = 1 + (seed % 4) as usize;
        let half_width = if seed % 2 == 0 { 0.1 } else { 1.0 };
        let p = RbmParams::random_uniform(16, alpha, half_width, 100 + seed);
        let e = energy_expectation_fullsum(&p, &sector, &lat, 1.0, true).unwrap();
        assert!(e >= e0 - 1e-9 * e0.abs(), "seed {seed}: {e} < {e0}");
    }
}

#[test]
fn energy_is_invariant_under_relabeling() {
    let lat = build_lattice(4, 4, true).unwrap();
    let mut sector = enumerate_zero_mag_states(16).unwrap();
    let p = RbmParams::random_uniform(16, 2, 0.5, 9);
    let logs: Vec<f64> = sector.iter().map(|s| rbm_log_psi(&p, s).unwrap()).collect();
    let base = energy_expectation_from_log_psi(&sector, &logs, &lat, 1.0, true).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..3 {
        sector.shuffle(&mut rng);
        let logs: Vec<f64> = sector.iter().map(|s| rbm_log_psi(&p, s).unwrap()).collect();
        let e = energy_expectation_from_log_psi(&sector, &logs, &lat, 1.0, true).unwrap();
        assert!(relative_gap(e, base) < 1e-14, "{e} vs {base}");
    }
}

#[test]
fn neel_state_is_a_sector_member() {
    let sector = enumerate_zero_mag_states(16).unwrap();
    assert!(sector.contains(&SpinConfiguration::neel(4, 4)));
}
