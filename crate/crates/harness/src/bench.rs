//! Wall-clock throughput of full Gibbs updates, with the annealer's
//! per-sample time budget for comparison.

use std::fmt;
use std::time::Instant;

use bmlab_core::samplers::uniform_init;
use bmlab_core::{GibbsSampler, Rbm, SeedSequence};

use crate::error::HarnessError;

/// Per-sample annealer timing in microseconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnnealerTiming {
    pub anneal_us: f64,
    pub delay_us: f64,
    pub readout_us: f64,
}

impl Default for AnnealerTiming {
    /// Linear anneal over 20 µs, 20 µs delay, 214 µs readout.
    fn default() -> Self {
        Self {
            anneal_us: 20.0,
            delay_us: 20.0,
            readout_us: 214.0,
        }
    }
}

impl AnnealerTiming {
    pub fn per_sample_us(&self) -> f64 {
        self.anneal_us + self.delay_us + self.readout_us
    }

    /// Seconds of device time for `samples` samples.
    pub fn budget_seconds(&self, samples: usize) -> f64 {
        self.per_sample_us() * samples as f64 * 1e-6
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub n_visible: usize,
    pub n_hidden: usize,
    pub chains: usize,
    pub updates_per_rep: usize,
    /// Seconds per full update, one entry per repetition.
    pub seconds_per_update: Vec<f64>,
    pub annealer: AnnealerTiming,
}

impl BenchReport {
    pub fn mean_seconds(&self) -> f64 {
        self.seconds_per_update.iter().sum::<f64>() / self.seconds_per_update.len() as f64
    }

    /// Sample standard deviation over repetitions.
    pub fn stddev_seconds(&self) -> f64 {
        let k = self.seconds_per_update.len();
        if k < 2 {
            return 0.0;
        }
        let mean = self.mean_seconds();
        (self.seconds_per_update.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
    }

    /// Chain updates per second.
    pub fn samples_per_second(&self) -> f64 {
        self.chains as f64 / self.mean_seconds()
    }

    pub fn annealer_seconds(&self) -> f64 {
        self.annealer.budget_seconds(self.chains)
    }

    /// Full Gibbs updates that fit in the annealer's time for the same number of samples.
    pub fn gibbs_updates_in_annealer_budget(&self) -> f64 {
        self.annealer_seconds() / self.mean_seconds()
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "model: {} visible x {} hidden", self.n_visible, self.n_hidden)?;
        writeln!(f, "chains: {}", self.chains)?;
        writeln!(
            f,
            "repetitions: {} ({} update(s) each)",
            self.seconds_per_update.len(),
            self.updates_per_rep
        )?;
        writeln!(
            f,
            "full gibbs update: mean {:.3} ms, stddev {:.3} ms",
            self.mean_seconds() * 1e3,
            self.stddev_seconds() * 1e3
        )?;
        writeln!(f, "throughput: {:.0} chain updates/s", self.samples_per_second())?;
        let a = &self.annealer;
        writeln!(
            f,
            "annealer budget: ({} + {} + {}) us/sample x {} samples = {:.2} s",
            a.anneal_us,
            a.delay_us,
            a.readout_us,
            self.chains,
            self.annealer_seconds()
        )?;
        write!(
            f,
            "gibbs updates in annealer budget: {:.1}",
            self.gibbs_updates_in_annealer_budget()
        )
    }
}

/// Times `reps` repetitions of `updates` full Gibbs updates on `chain_count`
/// uniformly initialised chains.
pub fn bench_gibbs(
    params: &Rbm,
    chain_count: usize,
    updates: usize,
    reps: usize,
    annealer: AnnealerTiming,
    seeds: SeedSequence,
) -> Result<BenchReport, HarnessError> {
    if chain_count == 0 || updates == 0 || reps == 0 {
        return Err(HarnessError::Invalid("bench needs positive chain count, updates and repetitions".into()));
    }
    let sampler = GibbsSampler::new(params);
    let mut state = uniform_init(chain_count, params.n_visible(), seeds.derive(0))?;
    // warm-up
    state = sampler.update(&state, seeds.derive(1))?;
    let mut seconds_per_update = Vec::with_capacity(reps);
    for rep in 0..reps {
        let rep_seeds = seeds.derive(2 + rep as u64);
        let start = Instant::now();
        for k in 0..updates {
            state = sampler.update(&state, rep_seeds.derive(k as u64))?;
        }
        seconds_per_update.push(start.elapsed().as_secs_f64() / updates as f64);
    }
    Ok(BenchReport {
        n_visible: params.n_visible(),
        n_hidden: params.n_hidden(),
        chains: chain_count,
        updates_per_rep: updates,
        seconds_per_update,
        annealer,
    })
}
