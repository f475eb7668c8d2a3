//! Sampling laboratory for restricted Boltzmann machines.
//!
//! The numerical core ([`RbmParams`], [`IsingModel`], training) is generic
//! over the scalar type through [`Real`]; the aliases below fix it to `f64`
//! (or `f32`) for everyday use.

pub mod datasets;
pub mod error;
pub mod io;
pub mod metrics;
pub mod rbm;
pub mod rng;
pub mod samplers;
pub mod scalar;
pub mod state;
pub mod training;

pub use datasets::{DatasetKind, PositiveSet};
pub use error::{Error, Result};
pub use metrics::MetricsRecord;
pub use rbm::{GibbsSampler, RbmParams, Temperature};
pub use rng::SeedSequence;
pub use samplers::{GaugeVector, IsingModel, RangeLimits, SaConfig};
pub use scalar::Real;
pub use state::{SpinBatch, StateBatch};
pub use training::{NegativePhaseKind, PhaseStats, TrainConfig};

pub type Rbm = RbmParams<f64>;
pub type Rbm32 = RbmParams<f32>;
pub type Ising = IsingModel<f64>;
pub type Ising32 = IsingModel<f32>;
pub type Temp = Temperature<f64>;
