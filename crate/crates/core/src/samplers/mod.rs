//! Chain-initialisation backends: uniform random bits, an annealer emulator
//! over the Ising image of the model, exact Boltzmann draws, imported device
//! samples and hybrid mixtures.

mod anneal;
mod init;
mod ising;

pub use anneal::{sa_sample, spin_reversal_ensemble, spin_reversal_ensemble_with_gauges, SaConfig};
pub use init::{exact_boltzmann_init, MAX_EXACT_INIT_VISIBLE, hybrid_mix, spins_to_visible, uniform_init, visible_to_spins};
pub use ising::{
    apply_gauge, check_ranges, rbm_to_ising, state_to_spins, ungauge_samples, GaugeVector, IsingModel,
    RangeLimits, RangeReport, RangeViolation,
};
