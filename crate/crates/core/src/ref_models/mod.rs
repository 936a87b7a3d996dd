//! Full-precision reference models: the RBM wavefunction with its Heisenberg
//! energies, and the Deep SVDD network family.

mod event;
mod lattice;
mod mlp;
mod rbm;
mod spins;
mod svdd;

pub use event::{feature_names, EventRecord, FEATURES_PER_EVENT, OBJECT_SLOTS};
pub use lattice::{build_lattice, LatticeSpec, Sublattice};
pub use mlp::{elu, mlp_forward, mlp_forward_batch, relu, Activation, DenseLayer, MlpParams};
pub use rbm::{
    energy_expectation_from_log_psi, energy_expectation_fullsum, heisenberg_local_energy,
    log2cosh, rbm_log_psi, rbm_log_psi_batch, RbmParams,
};
pub use spins::SpinConfiguration;
pub use svdd::{
    build_ensemble_specs, svdd_score, EnsembleAggregation, SvddTarget, ENSEMBLE_N, ENSEMBLE_Z,
};
