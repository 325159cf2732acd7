//! Hamiltonians, the Lindblad generator, time evolution and steady states.

mod evolve;
mod hamiltonian;
mod liouvillian;
mod mapping;
mod steady;

pub use evolve::{evolve, EvolveOptions, Generator, Observables, Trajectory, LAB_STEPS_PER_PERIOD};
pub(crate) use evolve::{integrate_sampled, ObservableSet};
pub use hamiltonian::{
    effective_hamiltonian, lab_hamiltonian, EffectiveParameters, Envelope, Frame,
    HamiltonianSpec, HamiltonianTerms,
};
pub use liouvillian::{
    dissipator_superoperator, hamiltonian_superoperator, liouvillian_apply,
    liouvillian_apply_matrix, superoperator, unvectorize, vectorize, Rates,
};
pub use mapping::{effective_from_lab, eps_for_rabi, EffectiveMapping, SIDEBAND_ORDER};
pub use steady::{
    periodic_steady_state_sigma, steady_state, PeriodicOptions, PeriodicSigma,
    NULL_SPACE_THRESHOLD,
};
