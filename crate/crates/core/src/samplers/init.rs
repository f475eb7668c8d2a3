use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rbm::{RbmParams, Temperature};
use crate::rng::SeedSequence;
use crate::scalar::Real;
use crate::state::{index_to_bits, SpinBatch, StateBatch};
use crate::training::visible_log_weights;

/// Largest visible layer accepted by [`exact_boltzmann_init`].
pub const MAX_EXACT_INIT_VISIBLE: usize = 20;

/// Independent fair-coin bits; chain `c` draws from `seeds.stream(c)`.
pub fn uniform_init(chain_count: usize, width: usize, seeds: SeedSequence) -> Result<StateBatch> {
    if chain_count == 0 || width == 0 {
        return Err(Error::Empty("chain batch"));
    }
    let mut data = vec![0u8; chain_count * width];
    data.par_chunks_mut(width).enumerate().for_each(|(c, row)| {
        let mut rng = seeds.stream(c as u64);
        for b in row {
            *b = rng.gen::<bool>() as u8;
        }
    });
    StateBatch::new(width, data)
}

/// Exact i.i.d. draws of the visible layer from `p(v) ∝ Σ_h exp(-E(v, h)/T)`.
///
/// Enumerates the `2^n` visible patterns with the hidden layer summed in
/// closed form, so only `n` (not `n + m`) is bounded.
pub fn exact_boltzmann_init<F: Real>(
    params: &RbmParams<F>,
    t: Temperature<F>,
    chain_count: usize,
    seeds: SeedSequence,
) -> Result<StateBatch> {
    let n = params.n_visible();
    if n > MAX_EXACT_INIT_VISIBLE {
        return Err(Error::TooLarge {
            units: n,
            limit: MAX_EXACT_INIT_VISIBLE,
        });
    }
    if chain_count == 0 {
        return Err(Error::Empty("chain count"));
    }
    let log_w: Vec<f64> = visible_log_weights(params, t)?.into_iter().map(Real::as_f64).collect();
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut cdf = Vec::with_capacity(log_w.len());
    let mut acc = 0.0;
    for &lw in &log_w {
        acc += (lw - max).exp();
        cdf.push(acc);
    }
    let total = acc;
    let codes: Vec<usize> = (0..chain_count)
        .into_par_iter()
        .map(|c| {
            let u = seeds.stream(c as u64).gen::<f64>() * total;
            cdf.partition_point(|&x| x <= u).min(cdf.len() - 1)
        })
        .collect();
    let mut data = Vec::with_capacity(chain_count * n);
    for code in codes {
        data.extend(index_to_bits(code, n));
    }
    StateBatch::new(n, data)
}

/// Visible slice of spin samples: `v_i = (s_i + 1)/2` for the first `n` spins.
pub fn spins_to_visible(spins: &SpinBatch, n: usize) -> Result<StateBatch> {
    if n == 0 || n > spins.width() {
        return Err(Error::DimensionMismatch {
            expected: spins.width(),
            actual: n,
        });
    }
    let data = spins
        .rows()
        .flat_map(|row| row[..n].iter().map(|&s| ((s + 1) / 2) as u8))
        .collect();
    StateBatch::new(n, data)
}

/// `s = 2v − 1`.
pub fn visible_to_spins(batch: &StateBatch) -> SpinBatch {
    SpinBatch::from_parts(
        batch.width(),
        batch.as_slice().iter().map(|&b| 2 * b as i8 - 1).collect(),
    )
}

/// Each output chain is an independent uniform draw from the multiset union
/// of the rows of `a` and `b`.
pub fn hybrid_mix(a: &StateBatch, b: &StateBatch, chain_count: usize, seeds: SeedSequence) -> Result<StateBatch> {
    if a.width() != b.width() {
        return Err(Error::DimensionMismatch {
            expected: a.width(),
            actual: b.width(),
        });
    }
    if chain_count == 0 {
        return Err(Error::Empty("chain count"));
    }
    let pool = a.chains() + b.chains();
    let mut data = Vec::with_capacity(chain_count * a.width());
    for c in 0..chain_count {
        let k = seeds.stream(c as u64).gen_range(0..pool);
        let row = if k < a.chains() { a.row(k) } else { b.row(k - a.chains()) };
        data.extend_from_slice(row);
    }
    StateBatch::new(a.width(), data)
}
