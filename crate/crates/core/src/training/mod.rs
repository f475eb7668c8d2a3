//! Likelihood-gradient training: positive and negative phase statistics and
//! full-batch gradient ascent.

mod exact;

pub use exact::{
    exact_boltzmann_table, exact_log_likelihood, exact_negative_phase, exact_partition_function,
    log_partition_function, visible_log_weight, visible_log_weights, BoltzmannTable, MAX_MARGINAL_UNITS,
    MAX_PARTITION_UNITS, MAX_TABLE_UNITS,
};

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rbm::{GibbsSampler, RbmParams};
use crate::rng::SeedSequence;
use crate::samplers::uniform_init;
use crate::scalar::{logistic, Real};
use crate::state::StateBatch;

/// Parameters whose magnitude exceeds this abort training.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

const STATS_CHUNK: usize = 256;

/// How the negative phase is estimated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NegativePhaseKind {
    /// Chains start from uniform random visible vectors.
    Naive,
    /// Chains start from the training batch (contrastive divergence).
    Cd,
}

impl fmt::Display for NegativePhaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NegativePhaseKind::Naive => "naive",
            NegativePhaseKind::Cd => "cd1",
        })
    }
}

impl FromStr for NegativePhaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "naive" => Ok(NegativePhaseKind::Naive),
            "cd" | "cd1" | "cd-1" => Ok(NegativePhaseKind::Cd),
            other => Err(Error::InvalidParameter(format!("unknown training kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub kind: NegativePhaseKind,
    /// Full Gibbs updates per negative-phase estimate.
    pub gibbs_updates_negative: usize,
    /// Chains used by the naive negative phase; CD uses one chain per example.
    pub negative_chain_count: usize,
    pub batch_size: usize,
}

impl TrainConfig {
    /// Naive negative phase with 50 Gibbs updates.
    pub fn naive(batch_size: usize) -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 2000,
            kind: NegativePhaseKind::Naive,
            gibbs_updates_negative: 50,
            negative_chain_count: batch_size,
            batch_size,
        }
    }

    /// CD-1.
    pub fn cd1(batch_size: usize) -> Self {
        Self {
            kind: NegativePhaseKind::Cd,
            gibbs_updates_negative: 1,
            ..Self::naive(batch_size)
        }
    }

    pub fn for_kind(kind: NegativePhaseKind, batch_size: usize) -> Self {
        match kind {
            NegativePhaseKind::Naive => Self::naive(batch_size),
            NegativePhaseKind::Cd => Self::cd1(batch_size),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be non-negative, got {}",
                self.learning_rate
            )));
        }
        for (name, value) in [
            ("epochs", self.epochs),
            ("gibbs_updates_negative", self.gibbs_updates_negative),
            ("negative_chain_count", self.negative_chain_count),
            ("batch_size", self.batch_size),
        ] {
            if value == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be at least 1")));
            }
        }
        Ok(())
    }
}

/// Expectations `⟨v_i h_j⟩` (row-major n×m), `⟨v_i⟩` and `⟨h_j⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseStats<F> {
    pub vh_mean: Vec<F>,
    pub v_mean: Vec<F>,
    pub h_mean: Vec<F>,
}

impl<F: Real> PhaseStats<F> {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            vh_mean: vec![F::zero(); n * m],
            v_mean: vec![F::zero(); n],
            h_mean: vec![F::zero(); m],
        }
    }

    fn add_assign(&mut self, other: &Self) {
        for (a, &b) in self
            .vh_mean
            .iter_mut()
            .chain(self.v_mean.iter_mut())
            .chain(self.h_mean.iter_mut())
            .zip(other.vh_mean.iter().chain(&other.v_mean).chain(&other.h_mean))
        {
            *a = *a + b;
        }
    }

    fn scale(&mut self, s: F) {
        for a in self
            .vh_mean
            .iter_mut()
            .chain(self.v_mean.iter_mut())
            .chain(self.h_mean.iter_mut())
        {
            *a = *a * s;
        }
    }
}

/// Statistics of a visible batch with hidden units replaced by their exact
/// conditional probabilities. Partial sums run over fixed-size chunks so the
/// floating-point result does not depend on the thread count.
fn conditional_stats<F: Real>(params: &RbmParams<F>, data: &StateBatch) -> Result<PhaseStats<F>> {
    let (n, m) = (params.n_visible(), params.n_hidden());
    if data.width() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: data.width(),
        });
    }
    let partials: Vec<PhaseStats<F>> = data
        .as_slice()
        .par_chunks(STATS_CHUNK * n)
        .map(|chunk| {
            let mut acc = PhaseStats::zeros(n, m);
            let mut act = vec![F::zero(); m];
            for v in chunk.chunks_exact(n) {
                params.hidden_activations(v, &mut act);
                for a in act.iter_mut() {
                    *a = logistic(*a);
                }
                for (hm, &p) in acc.h_mean.iter_mut().zip(&act) {
                    *hm = *hm + p;
                }
                for (i, &vi) in v.iter().enumerate() {
                    if vi == 1 {
                        acc.v_mean[i] = acc.v_mean[i] + F::one();
                        for (x, &p) in acc.vh_mean[i * m..(i + 1) * m].iter_mut().zip(&act) {
                            *x = *x + p;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut total = PhaseStats::zeros(n, m);
    for p in &partials {
        total.add_assign(p);
    }
    total.scale(F::one() / F::of(data.chains() as f64));
    Ok(total)
}

/// Data-clamped expectations; hidden units use `p(h | v)` rather than samples.
pub fn positive_phase<F: Real>(params: &RbmParams<F>, data: &StateBatch) -> Result<PhaseStats<F>> {
    conditional_stats(params, data)
}

fn require_updates(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidParameter("negative phase needs at least one Gibbs update".into()))
    } else {
        Ok(())
    }
}

/// Chains start at `data`, run `k` full updates, statistics from the final states.
pub fn negative_phase_cd<F: Real>(
    params: &RbmParams<F>,
    data: &StateBatch,
    k: usize,
    seeds: SeedSequence,
) -> Result<PhaseStats<F>> {
    require_updates(k)?;
    let end = GibbsSampler::new(params).run(data, k, seeds)?;
    conditional_stats(params, &end)
}

/// Chains start uniformly at random, run `k` full updates, statistics from the final states.
pub fn negative_phase_naive<F: Real>(
    params: &RbmParams<F>,
    chain_count: usize,
    k: usize,
    seeds: SeedSequence,
) -> Result<PhaseStats<F>> {
    require_updates(k)?;
    let start = uniform_init(chain_count, params.n_visible(), seeds.derive(0))?;
    let end = GibbsSampler::new(params).run(&start, k, seeds.derive(1))?;
    conditional_stats(params, &end)
}

/// Adds `rate · (positive − negative)` to weights, visible and hidden biases.
pub fn apply_gradient<F: Real>(params: &mut RbmParams<F>, positive: &PhaseStats<F>, negative: &PhaseStats<F>, rate: F) {
    let (a, b, w) = params.parts_mut();
    for (x, (p, q)) in w.iter_mut().zip(positive.vh_mean.iter().zip(&negative.vh_mean)) {
        *x = *x + rate * (*p - *q);
    }
    for (x, (p, q)) in a.iter_mut().zip(positive.v_mean.iter().zip(&negative.v_mean)) {
        *x = *x + rate * (*p - *q);
    }
    for (x, (p, q)) in b.iter_mut().zip(positive.h_mean.iter().zip(&negative.h_mean)) {
        *x = *x + rate * (*p - *q);
    }
}

/// Gradient ascent on the log-likelihood.
///
/// With `batch_size ≥ |data|` every epoch is one full-batch step in data order;
/// otherwise the data is reshuffled each epoch and split into mini-batches.
pub fn train<F: Real>(
    params: &RbmParams<F>,
    data: &StateBatch,
    config: &TrainConfig,
    seeds: SeedSequence,
) -> Result<RbmParams<F>> {
    config.validate()?;
    if data.width() != params.n_visible() {
        return Err(Error::DimensionMismatch {
            expected: params.n_visible(),
            actual: data.width(),
        });
    }
    let mut params = params.clone();
    let rate = F::of(config.learning_rate);
    let full_batch = config.batch_size >= data.chains();
    let mut order: Vec<usize> = (0..data.chains()).collect();
    for epoch in 0..config.epochs {
        let epoch_seeds = seeds.derive(epoch as u64);
        if !full_batch {
            order.shuffle(&mut epoch_seeds.derive(u64::MAX).rng());
        }
        for (b, rows) in order.chunks(config.batch_size).enumerate() {
            let batch = if full_batch {
                data.clone()
            } else {
                data.select_rows(rows)
            };
            let batch_seeds = epoch_seeds.derive(b as u64);
            let positive = positive_phase(&params, &batch)?;
            let negative = match config.kind {
                NegativePhaseKind::Cd => {
                    negative_phase_cd(&params, &batch, config.gibbs_updates_negative, batch_seeds)?
                }
                NegativePhaseKind::Naive => negative_phase_naive(
                    &params,
                    config.negative_chain_count,
                    config.gibbs_updates_negative,
                    batch_seeds,
                )?,
            };
            apply_gradient(&mut params, &positive, &negative, rate);
        }
        let magnitude = params.max_abs().as_f64();
        if magnitude.is_nan() || magnitude > DIVERGENCE_LIMIT {
            return Err(Error::Diverged { epoch, magnitude });
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbm::Temperature;
    use crate::state::index_to_bits;

    #[test]
    fn positive_phase_zero_model_on_ones() {
        let p = RbmParams::<f64>::zeros(4, 3).unwrap();
        let data = StateBatch::from_rows(&[[1u8; 4], [1; 4]]).unwrap();
        let s = positive_phase(&p, &data).unwrap();
        assert_eq!(s.v_mean, vec![1.0; 4]);
        assert_eq!(s.h_mean, vec![0.5; 3]);
        assert_eq!(s.vh_mean, vec![0.5; 12]);
    }

    #[test]
    fn positive_phase_zero_datapoint() {
        let p = RbmParams::<f64>::random_full(3, 2, 1.0, SeedSequence::new(3)).unwrap();
        let data = StateBatch::from_rows(&[[0u8; 3]]).unwrap();
        assert_eq!(positive_phase(&p, &data).unwrap().vh_mean, vec![0.0; 6]);
    }

    #[test]
    fn positive_phase_matches_hidden_enumeration() {
        let p = RbmParams::<f64>::random_full(3, 2, 1.0, SeedSequence::new(8)).unwrap();
        let data = StateBatch::from_rows(&[[1u8, 0, 1], [1, 1, 0], [0, 1, 1], [1, 1, 1]]).unwrap();
        let s = positive_phase(&p, &data).unwrap();
        // E[v_i h_j] with p(h | v) ∝ exp(-E(v, h)) summed over all four hidden states
        let mut vh = vec![0.0; 6];
        for v in data.rows() {
            let weights: Vec<f64> = (0..4)
                .map(|hc| (-p.energy(v, &index_to_bits(hc, 2)).unwrap()).exp())
                .collect();
            let z: f64 = weights.iter().sum();
            for hc in 0..4 {
                let h = index_to_bits(hc, 2);
                for i in 0..3 {
                    for j in 0..2 {
                        vh[i * 2 + j] += weights[hc] / z * (v[i] * h[j]) as f64 / 4.0;
                    }
                }
            }
        }
        for (a, b) in s.vh_mean.iter().zip(&vh) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_phases_reject_zero_updates() {
        let p = RbmParams::<f64>::zeros(2, 2).unwrap();
        let data = StateBatch::zeros(3, 2).unwrap();
        assert!(negative_phase_cd(&p, &data, 0, SeedSequence::new(0)).is_err());
        assert!(negative_phase_naive(&p, 3, 0, SeedSequence::new(0)).is_err());
    }

    #[test]
    fn negative_phases_on_zero_model() {
        let p = RbmParams::<f64>::zeros(3, 2).unwrap();
        let data = StateBatch::new(3, vec![1; 3 * 100_000]).unwrap();
        let cd = negative_phase_cd(&p, &data, 1, SeedSequence::new(1)).unwrap();
        let naive = negative_phase_naive(&p, 100_000, 2, SeedSequence::new(2)).unwrap();
        for s in [&cd, &naive] {
            for &x in &s.vh_mean {
                assert!((x - 0.25).abs() < 0.01, "{x}");
            }
        }
        assert_eq!(cd, negative_phase_cd(&p, &data, 1, SeedSequence::new(1)).unwrap());
        assert_eq!(naive, negative_phase_naive(&p, 100_000, 2, SeedSequence::new(2)).unwrap());
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let p = RbmParams::<f64>::random_full(4, 3, 0.5, SeedSequence::new(6)).unwrap();
        let data = StateBatch::from_rows(&[[1u8, 0, 0, 1], [0, 1, 1, 0]]).unwrap();
        for kind in [NegativePhaseKind::Naive, NegativePhaseKind::Cd] {
            let cfg = TrainConfig {
                learning_rate: 0.0,
                epochs: 5,
                ..TrainConfig::for_kind(kind, 1)
            };
            assert_eq!(train(&p, &data, &cfg, SeedSequence::new(1)).unwrap(), p);
        }
    }

    #[test]
    fn naive_training_improves_likelihood() {
        let data = StateBatch::from_rows(&[[1u8, 1, 0, 0], [0, 0, 1, 1], [1, 0, 1, 0], [0, 1, 0, 1]]).unwrap();
        let init = RbmParams::<f64>::random(4, 3, 0.1, SeedSequence::new(12)).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.1,
            epochs: 200,
            negative_chain_count: 500,
            ..TrainConfig::naive(4)
        };
        let trained = train(&init, &data, &cfg, SeedSequence::new(13)).unwrap();
        let t = Temperature::unit();
        let before = exact_log_likelihood(&init, &data, t).unwrap();
        let after = exact_log_likelihood(&trained, &data, t).unwrap();
        assert!(after > before, "{after} <= {before}");
    }

    #[test]
    fn minibatch_training_is_deterministic() {
        let data = StateBatch::from_rows(&[[1u8, 1, 0], [0, 0, 1], [1, 0, 1], [0, 1, 0], [1, 1, 1]]).unwrap();
        let init = RbmParams::<f64>::random(3, 2, 0.1, SeedSequence::new(1)).unwrap();
        let cfg = TrainConfig {
            epochs: 20,
            ..TrainConfig::cd1(2)
        };
        let a = train(&init, &data, &cfg, SeedSequence::new(5)).unwrap();
        let b = train(&init, &data, &cfg, SeedSequence::new(5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init);
    }

    #[test]
    fn divergence_guard_trips() {
        let data = StateBatch::from_rows(&[[1u8, 1]]).unwrap();
        let init = RbmParams::<f64>::zeros(2, 1).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e7,
            epochs: 3,
            ..TrainConfig::cd1(1)
        };
        assert!(matches!(train(&init, &data, &cfg, SeedSequence::new(0)), Err(Error::Diverged { .. })));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig { epochs: 0, ..TrainConfig::cd1(4) }.validate().is_err());
        assert!(TrainConfig { learning_rate: -1.0, ..TrainConfig::cd1(4) }.validate().is_err());
        assert!(TrainConfig::naive(4).validate().is_ok());
        assert_eq!("cd1".parse::<NegativePhaseKind>().unwrap(), NegativePhaseKind::Cd);
        assert!("pcd".parse::<NegativePhaseKind>().is_err());
    }
}
