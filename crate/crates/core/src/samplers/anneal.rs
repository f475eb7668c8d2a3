//! Simulated-annealing stand-in for the annealer: single-spin-flip Metropolis
//! sweeps under a geometric inverse-temperature schedule.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::SeedSequence;
use crate::scalar::Real;
use crate::state::SpinBatch;

use super::ising::{apply_gauge, ungauge_samples, GaugeVector, IsingModel};

const GAUGE_LABEL: u64 = 0x0067_6175_6765;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaConfig {
    pub sweeps: usize,
    pub beta_initial: f64,
    pub beta_final: f64,
}

impl SaConfig {
    /// Default anneal for a model whose coefficients already carry `1/T`:
    /// 1000 sweeps, β geometric from `0.1/T` up to 1.
    pub fn for_temperature(t: f64) -> Self {
        Self {
            sweeps: 1000,
            beta_initial: (0.1 / t).min(1.0),
            beta_final: 1.0,
        }
    }

    /// Constant β for every sweep.
    pub fn fixed(beta: f64, sweeps: usize) -> Self {
        Self {
            sweeps,
            beta_initial: beta,
            beta_final: beta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 {
            return Err(Error::InvalidParameter("annealing needs at least one sweep".into()));
        }
        if !(self.beta_initial > 0.0 && self.beta_final.is_finite()) {
            return Err(Error::InvalidParameter("inverse temperatures must be positive and finite".into()));
        }
        if self.beta_initial > self.beta_final {
            return Err(Error::InvalidParameter(format!(
                "beta_initial {} exceeds beta_final {}",
                self.beta_initial, self.beta_final
            )));
        }
        Ok(())
    }

    /// β for each sweep, geometrically spaced, ending exactly at `beta_final`.
    pub fn schedule(&self) -> Vec<f64> {
        if self.sweeps == 1 {
            return vec![self.beta_final];
        }
        let ratio = (self.beta_final / self.beta_initial).ln() / (self.sweeps - 1) as f64;
        let mut betas: Vec<f64> = (0..self.sweeps)
            .map(|k| self.beta_initial * (ratio * k as f64).exp())
            .collect();
        betas[self.sweeps - 1] = self.beta_final;
        betas
    }
}

impl Default for SaConfig {
    fn default() -> Self {
        Self::for_temperature(1.0)
    }
}

/// Anneals chains with ids `first_id..first_id + count`; chain `c` draws from
/// `seeds.stream(c)`.
fn anneal_chains<F: Real>(
    ising: &IsingModel<F>,
    schedule: &[f64],
    first_id: u64,
    count: usize,
    seeds: SeedSequence,
) -> SpinBatch {
    let n = ising.n_spins();
    let (starts, neighbours) = ising.adjacency();
    let fields: Vec<f64> = ising.fields().iter().map(|h| h.as_f64()).collect();
    let neighbours: Vec<(usize, f64)> = neighbours.into_iter().map(|(j, c)| (j, c.as_f64())).collect();
    let mut out = SpinBatch::from_parts(n, vec![1; n * count]);
    out.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(c, s)| {
            let mut rng = seeds.stream(first_id + c as u64);
            for x in s.iter_mut() {
                *x = if rng.gen::<bool>() { 1 } else { -1 };
            }
            for &beta in schedule {
                for i in 0..n {
                    let local = neighbours[starts[i]..starts[i + 1]]
                        .iter()
                        .fold(fields[i], |acc, &(j, c)| acc + c * s[j] as f64);
                    let delta = -2.0 * s[i] as f64 * local;
                    if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                        s[i] = -s[i];
                    }
                }
            }
        });
    out
}

/// Final states of `chain_count` independent anneals from uniform random spins.
pub fn sa_sample<F: Real>(
    ising: &IsingModel<F>,
    config: &SaConfig,
    chain_count: usize,
    seeds: SeedSequence,
) -> Result<SpinBatch> {
    config.validate()?;
    if chain_count == 0 {
        return Err(Error::Empty("chain count"));
    }
    Ok(anneal_chains(ising, &config.schedule(), 0, chain_count, seeds))
}

/// Splits the chains into one contiguous group per gauge, anneals each group
/// on its gauged model and maps the results back. Chain ids, and hence random
/// streams, are the same as in [`sa_sample`].
pub fn spin_reversal_ensemble_with_gauges<F: Real>(
    ising: &IsingModel<F>,
    config: &SaConfig,
    chain_count: usize,
    gauges: &[GaugeVector],
    seeds: SeedSequence,
) -> Result<SpinBatch> {
    config.validate()?;
    if chain_count == 0 {
        return Err(Error::Empty("chain count"));
    }
    if gauges.is_empty() {
        return Err(Error::Empty("gauge list"));
    }
    let schedule = config.schedule();
    let groups = gauges.len();
    let mut parts = Vec::with_capacity(groups);
    let mut first = 0usize;
    for (r, g) in gauges.iter().enumerate() {
        let size = chain_count / groups + usize::from(r < chain_count % groups);
        if size == 0 {
            continue;
        }
        let gauged = apply_gauge(ising, g)?;
        let samples = anneal_chains(&gauged, &schedule, first as u64, size, seeds);
        parts.push(ungauge_samples(&samples, g)?);
        first += size;
    }
    SpinBatch::concat(parts)
}

/// As [`spin_reversal_ensemble_with_gauges`] with `transforms` random gauges.
pub fn spin_reversal_ensemble<F: Real>(
    ising: &IsingModel<F>,
    config: &SaConfig,
    chain_count: usize,
    transforms: usize,
    seeds: SeedSequence,
) -> Result<SpinBatch> {
    if transforms == 0 {
        return Err(Error::InvalidParameter("need at least one spin-reversal transform".into()));
    }
    let gauge_seeds = seeds.derive(GAUGE_LABEL);
    let gauges: Vec<GaugeVector> = (0..transforms)
        .map(|r| GaugeVector::random(ising.n_spins(), gauge_seeds.derive(r as u64)))
        .collect();
    spin_reversal_ensemble_with_gauges(ising, config, chain_count, &gauges, seeds)
}
