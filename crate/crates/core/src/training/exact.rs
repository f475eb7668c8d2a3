//! Brute-force quantities for models small enough to enumerate.

use crate::error::{Error, Result};
use crate::rbm::{RbmParams, Temperature};
use crate::scalar::{log_sum_exp, softplus, Real};
use crate::state::{index_to_bits, StateBatch};

use super::PhaseStats;

/// Largest `n + m` accepted by the partition function and log-likelihood.
pub const MAX_PARTITION_UNITS: usize = 24;
/// Largest `n + m` for which the full joint table is materialised.
pub const MAX_TABLE_UNITS: usize = 20;
/// Largest layer size that is enumerated with the other layer summed out.
pub const MAX_MARGINAL_UNITS: usize = 24;

fn guard(units: usize, limit: usize) -> Result<()> {
    if units > limit {
        Err(Error::TooLarge { units, limit })
    } else {
        Ok(())
    }
}

/// Joint Boltzmann probabilities `p(v, h) = exp(-E/T) / Z` over all states.
///
/// Entry `(v << m) | h` holds the probability of the visible pattern with
/// integer code `v` (first unit is the most significant bit) and hidden code `h`.
#[derive(Clone, Debug)]
pub struct BoltzmannTable<F> {
    n: usize,
    m: usize,
    probs: Vec<F>,
}

impl<F: Real> BoltzmannTable<F> {
    pub fn n_visible(&self) -> usize {
        self.n
    }

    pub fn n_hidden(&self) -> usize {
        self.m
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn prob(&self, v_code: usize, h_code: usize) -> F {
        self.probs[(v_code << self.m) | h_code]
    }

    /// Marginal over visible codes.
    pub fn visible_marginal(&self) -> Vec<F> {
        self.probs
            .chunks_exact(1 << self.m)
            .map(|row| row.iter().copied().sum())
            .collect()
    }
}

pub fn exact_boltzmann_table<F: Real>(params: &RbmParams<F>, t: Temperature<F>) -> Result<BoltzmannTable<F>> {
    let (n, m) = (params.n_visible(), params.n_hidden());
    guard(n + m, MAX_TABLE_UNITS)?;
    let beta = t.beta();
    let hidden: Vec<Vec<u8>> = (0..1usize << m).map(|h| index_to_bits(h, m)).collect();
    let mut log_w = Vec::with_capacity(1 << (n + m));
    for v_code in 0..1usize << n {
        let v = index_to_bits(v_code, n);
        for h in &hidden {
            log_w.push(-params.energy_unchecked(&v, h) * beta);
        }
    }
    let log_z = log_sum_exp(&log_w);
    let probs = log_w.into_iter().map(|x| (x - log_z).exp()).collect();
    Ok(BoltzmannTable { n, m, probs })
}

/// `log Σ_h exp(-E(v, h)/T)` for one visible pattern (negative free energy).
pub fn visible_log_weight<F: Real>(params: &RbmParams<F>, v: &[u8], beta: F) -> F {
    let mut act = vec![F::zero(); params.n_hidden()];
    params.hidden_activations(v, &mut act);
    let linear: F = v
        .iter()
        .zip(params.visible_bias())
        .filter(|(&vi, _)| vi == 1)
        .map(|(_, &a)| a)
        .sum();
    linear * beta + act.into_iter().map(|x| softplus(x * beta)).sum()
}

/// Unnormalised log-marginal of every visible code, hidden layer summed in
/// closed form. Only the visible layer is enumerated.
pub fn visible_log_weights<F: Real>(params: &RbmParams<F>, t: Temperature<F>) -> Result<Vec<F>> {
    let n = params.n_visible();
    guard(n, MAX_MARGINAL_UNITS)?;
    let beta = t.beta();
    Ok((0..1usize << n)
        .map(|code| visible_log_weight(params, &index_to_bits(code, n), beta))
        .collect())
}

/// `log Z`, enumerating the smaller layer and summing the other analytically.
pub fn log_partition_function<F: Real>(params: &RbmParams<F>, t: Temperature<F>) -> Result<F> {
    let (n, m) = (params.n_visible(), params.n_hidden());
    guard(n + m, MAX_PARTITION_UNITS)?;
    if n <= m {
        Ok(log_sum_exp(&visible_log_weights(params, t)?))
    } else {
        let beta = t.beta();
        let weights: Vec<F> = (0..1usize << m)
            .map(|code| {
                let h = index_to_bits(code, m);
                let linear: F = h
                    .iter()
                    .zip(params.hidden_bias())
                    .filter(|(&hj, _)| hj == 1)
                    .map(|(_, &b)| b)
                    .sum();
                let visible: F = (0..n)
                    .map(|i| {
                        let act = h
                            .iter()
                            .enumerate()
                            .filter(|(_, &hj)| hj == 1)
                            .fold(params.visible_bias()[i], |acc, (j, _)| acc + params.weight(i, j));
                        softplus(act * beta)
                    })
                    .sum();
                linear * beta + visible
            })
            .collect();
        Ok(log_sum_exp(&weights))
    }
}

/// `Z = Σ_{v,h} exp(-E(v, h)/T)`.
pub fn exact_partition_function<F: Real>(params: &RbmParams<F>, t: Temperature<F>) -> Result<F> {
    Ok(log_partition_function(params, t)?.exp())
}

/// `Σ_{v ∈ data} log p(v)` at temperature `t`.
pub fn exact_log_likelihood<F: Real>(params: &RbmParams<F>, data: &StateBatch, t: Temperature<F>) -> Result<F> {
    if data.width() != params.n_visible() {
        return Err(Error::DimensionMismatch {
            expected: params.n_visible(),
            actual: data.width(),
        });
    }
    let log_z = log_partition_function(params, t)?;
    let beta = t.beta();
    Ok(data
        .rows()
        .map(|v| visible_log_weight(params, v, beta) - log_z)
        .sum())
}

/// Model expectations `⟨v_i h_j⟩`, `⟨v_i⟩`, `⟨h_j⟩` from the full joint table.
pub fn exact_negative_phase<F: Real>(params: &RbmParams<F>) -> Result<PhaseStats<F>> {
    let table = exact_boltzmann_table(params, Temperature::unit())?;
    let (n, m) = (params.n_visible(), params.n_hidden());
    let mut stats = PhaseStats::zeros(n, m);
    for v_code in 0..1usize << n {
        let v = index_to_bits(v_code, n);
        for h_code in 0..1usize << m {
            let h = index_to_bits(h_code, m);
            let p = table.prob(v_code, h_code);
            for i in 0..n {
                if v[i] == 1 {
                    stats.v_mean[i] = stats.v_mean[i] + p;
                    for j in 0..m {
                        if h[j] == 1 {
                            stats.vh_mean[i * m + j] = stats.vh_mean[i * m + j] + p;
                        }
                    }
                }
            }
            for j in 0..m {
                if h[j] == 1 {
                    stats.h_mean[j] = stats.h_mean[j] + p;
                }
            }
        }
    }
    Ok(stats)
}
