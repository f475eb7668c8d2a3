//! Restricted Boltzmann machine parameters, energy, conditionals and block
//! Gibbs sampling over batches of chains.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::SeedSequence;
use crate::scalar::{logistic, Real};
use crate::state::StateBatch;

/// Visible bias `a` (length n), hidden bias `b` (length m) and the n×m
/// weight matrix `w`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RbmParams<F> {
    visible_bias: Vec<F>,
    hidden_bias: Vec<F>,
    weights: Vec<F>,
}

/// Positive temperature `T`; Boltzmann weights are `exp(-E / T)`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Temperature<F>(F);

impl<F: Real> Temperature<F> {
    pub fn new(t: F) -> Result<Self> {
        if t > F::zero() && t.is_finite() {
            Ok(Self(t))
        } else {
            Err(Error::InvalidParameter(format!("temperature must be positive and finite, got {t}")))
        }
    }

    pub fn unit() -> Self {
        Self(F::one())
    }

    pub fn value(&self) -> F {
        self.0
    }

    pub fn beta(&self) -> F {
        F::one() / self.0
    }
}

fn check_finite<F: Real>(values: &[F], what: &str) -> Result<()> {
    if values.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{what} contains a non-finite value")))
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

impl<F: Real> RbmParams<F> {
    /// Builds parameters from biases and a row-major n×m weight vector.
    pub fn new(visible_bias: Vec<F>, hidden_bias: Vec<F>, weights: Vec<F>) -> Result<Self> {
        let (n, m) = (visible_bias.len(), hidden_bias.len());
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter("an RBM needs at least one visible and one hidden unit".into()));
        }
        check_len(n * m, weights.len())?;
        check_finite(&visible_bias, "visible bias")?;
        check_finite(&hidden_bias, "hidden bias")?;
        check_finite(&weights, "weights")?;
        Ok(Self {
            visible_bias,
            hidden_bias,
            weights,
        })
    }

    /// Same as [`RbmParams::new`] with the weights given as n rows of length m.
    pub fn from_rows(visible_bias: Vec<F>, hidden_bias: Vec<F>, weights: &[Vec<F>]) -> Result<Self> {
        check_len(visible_bias.len(), weights.len())?;
        let mut flat = Vec::with_capacity(visible_bias.len() * hidden_bias.len());
        for row in weights {
            check_len(hidden_bias.len(), row.len())?;
            flat.extend_from_slice(row);
        }
        Self::new(visible_bias, hidden_bias, flat)
    }

    pub fn zeros(n: usize, m: usize) -> Result<Self> {
        Self::new(vec![F::zero(); n], vec![F::zero(); m], vec![F::zero(); n * m])
    }

    /// Zero biases and weights drawn from `N(0, std²)`.
    pub fn random(n: usize, m: usize, std: f64, seeds: SeedSequence) -> Result<Self> {
        let normal = Normal::new(0.0, std)
            .map_err(|e| Error::InvalidParameter(format!("weight std: {e}")))?;
        let mut rng = seeds.rng();
        let weights = (0..n * m).map(|_| F::of(normal.sample(&mut rng))).collect();
        Self::new(vec![F::zero(); n], vec![F::zero(); m], weights)
    }

    /// Biases and weights all drawn from `N(0, std²)`; handy for oracle tests.
    pub fn random_full(n: usize, m: usize, std: f64, seeds: SeedSequence) -> Result<Self> {
        let normal = Normal::new(0.0, std)
            .map_err(|e| Error::InvalidParameter(format!("parameter std: {e}")))?;
        let mut rng = seeds.rng();
        let mut draw = |k: usize| -> Vec<F> { (0..k).map(|_| F::of(normal.sample(&mut rng))).collect() };
        let a = draw(n);
        let b = draw(m);
        let w = draw(n * m);
        Self::new(a, b, w)
    }

    pub fn n_visible(&self) -> usize {
        self.visible_bias.len()
    }

    pub fn n_hidden(&self) -> usize {
        self.hidden_bias.len()
    }

    pub fn visible_bias(&self) -> &[F] {
        &self.visible_bias
    }

    pub fn hidden_bias(&self) -> &[F] {
        &self.hidden_bias
    }

    /// Row-major n×m weights.
    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> F {
        self.weights[i * self.n_hidden() + j]
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [F], &mut [F], &mut [F]) {
        (&mut self.visible_bias, &mut self.hidden_bias, &mut self.weights)
    }

    /// Largest absolute parameter value.
    pub fn max_abs(&self) -> F {
        self.visible_bias
            .iter()
            .chain(&self.hidden_bias)
            .chain(&self.weights)
            .fold(F::zero(), |acc, x| acc.max(x.abs()))
    }

    /// `E(v, h) = -a·v - b·h - vᵀ w h`.
    pub fn energy(&self, v: &[u8], h: &[u8]) -> Result<F> {
        check_len(self.n_visible(), v.len())?;
        check_len(self.n_hidden(), h.len())?;
        Ok(self.energy_unchecked(v, h))
    }

    pub(crate) fn energy_unchecked(&self, v: &[u8], h: &[u8]) -> F {
        let m = self.n_hidden();
        let mut e = F::zero();
        for (i, &vi) in v.iter().enumerate() {
            if vi == 1 {
                e = e - self.visible_bias[i];
                let row = &self.weights[i * m..(i + 1) * m];
                for (j, &hj) in h.iter().enumerate() {
                    if hj == 1 {
                        e = e - row[j];
                    }
                }
            }
        }
        for (j, &hj) in h.iter().enumerate() {
            if hj == 1 {
                e = e - self.hidden_bias[j];
            }
        }
        e
    }

    /// `b_j + Σ_i w_ij v_i` for every hidden unit.
    pub(crate) fn hidden_activations(&self, v: &[u8], out: &mut [F]) {
        let m = self.n_hidden();
        out.copy_from_slice(&self.hidden_bias);
        for (i, &vi) in v.iter().enumerate() {
            if vi == 1 {
                for (o, &w) in out.iter_mut().zip(&self.weights[i * m..(i + 1) * m]) {
                    *o = *o + w;
                }
            }
        }
    }

    /// `p(h_j = 1 | v)` for every hidden unit.
    pub fn hidden_probs(&self, v: &[u8]) -> Result<Vec<F>> {
        check_len(self.n_visible(), v.len())?;
        let mut act = vec![F::zero(); self.n_hidden()];
        self.hidden_activations(v, &mut act);
        Ok(act.into_iter().map(logistic).collect())
    }

    /// `p(v_i = 1 | h)` for every visible unit.
    pub fn visible_probs(&self, h: &[u8]) -> Result<Vec<F>> {
        check_len(self.n_hidden(), h.len())?;
        let m = self.n_hidden();
        Ok((0..self.n_visible())
            .map(|i| {
                let row = &self.weights[i * m..(i + 1) * m];
                let act = h
                    .iter()
                    .zip(row)
                    .filter(|(&hj, _)| hj == 1)
                    .fold(self.visible_bias[i], |acc, (_, &w)| acc + w);
                logistic(act)
            })
            .collect())
    }

    /// Parameters divided by `T`, so that `exp(-E/T)` under `self` equals
    /// `exp(-E')` under the result.
    pub fn scale_temperature(&self, t: Temperature<F>) -> Self {
        let beta = t.beta();
        let scale = |xs: &[F]| xs.iter().map(|&x| x * beta).collect::<Vec<F>>();
        Self {
            visible_bias: scale(&self.visible_bias),
            hidden_bias: scale(&self.hidden_bias),
            weights: scale(&self.weights),
        }
    }

    /// Lossy conversion to another scalar type.
    pub fn cast<G: Real>(&self) -> RbmParams<G> {
        let conv = |xs: &[F]| xs.iter().map(|x| G::of(x.as_f64())).collect::<Vec<G>>();
        RbmParams {
            visible_bias: conv(&self.visible_bias),
            hidden_bias: conv(&self.hidden_bias),
            weights: conv(&self.weights),
        }
    }
}

#[inline]
fn bernoulli<F: Real, R: Rng>(p: F, rng: &mut R) -> u8 {
    (rng.gen::<f64>() < p.as_f64()) as u8
}

/// Block Gibbs sampler bound to one parameter set.
///
/// Holds a transposed copy of the weights so both half-steps read contiguous
/// memory. Chains are processed in parallel; chain `c` draws from
/// `seeds.stream(id_c)`, so output is independent of the thread schedule.
pub struct GibbsSampler<'a, F> {
    params: &'a RbmParams<F>,
    weights_t: Vec<F>,
}

impl<'a, F: Real> GibbsSampler<'a, F> {
    pub fn new(params: &'a RbmParams<F>) -> Self {
        let (n, m) = (params.n_visible(), params.n_hidden());
        let mut weights_t = vec![F::zero(); n * m];
        for i in 0..n {
            for j in 0..m {
                weights_t[j * n + i] = params.weights[i * m + j];
            }
        }
        Self { params, weights_t }
    }

    pub fn params(&self) -> &RbmParams<F> {
        self.params
    }

    fn sample_hidden_row<R: Rng>(&self, v: &[u8], act: &mut [F], out: &mut [u8], rng: &mut R) {
        self.params.hidden_activations(v, act);
        for (o, &a) in out.iter_mut().zip(act.iter()) {
            *o = bernoulli(logistic(a), rng);
        }
    }

    fn sample_visible_row<R: Rng>(&self, h: &[u8], act: &mut [F], out: &mut [u8], rng: &mut R) {
        let n = self.params.n_visible();
        act.copy_from_slice(&self.params.visible_bias);
        for (j, &hj) in h.iter().enumerate() {
            if hj == 1 {
                for (o, &w) in act.iter_mut().zip(&self.weights_t[j * n..(j + 1) * n]) {
                    *o = *o + w;
                }
            }
        }
        for (o, &a) in out.iter_mut().zip(act.iter()) {
            *o = bernoulli(logistic(a), rng);
        }
    }

    /// One full update per chain: `h ~ p(h|v)`, then `v' ~ p(v|h)`.
    pub fn update_chain<R: Rng>(&self, v: &[u8], out: &mut [u8], rng: &mut R) {
        let m = self.params.n_hidden();
        let n = self.params.n_visible();
        let mut h = vec![0u8; m];
        let mut act_h = vec![F::zero(); m];
        let mut act_v = vec![F::zero(); n];
        self.sample_hidden_row(v, &mut act_h, &mut h, rng);
        self.sample_visible_row(&h, &mut act_v, out, rng);
    }

    fn check_width(&self, batch: &StateBatch, width: usize) -> Result<()> {
        check_len(width, batch.width())
    }

    pub fn sample_hidden(&self, v: &StateBatch, seeds: SeedSequence) -> Result<StateBatch> {
        self.check_width(v, self.params.n_visible())?;
        let m = self.params.n_hidden();
        let mut data = vec![0u8; v.chains() * m];
        data.par_chunks_mut(m)
            .zip(v.as_slice().par_chunks(v.width()))
            .zip(v.ids().par_iter())
            .for_each_init(
                || vec![F::zero(); m],
                |act, ((out, row), &id)| {
                    let mut rng = seeds.stream(id);
                    self.sample_hidden_row(row, act, out, &mut rng);
                },
            );
        Ok(StateBatch::from_parts(m, data, v.ids().to_vec()))
    }

    pub fn sample_visible(&self, h: &StateBatch, seeds: SeedSequence) -> Result<StateBatch> {
        self.check_width(h, self.params.n_hidden())?;
        let n = self.params.n_visible();
        let mut data = vec![0u8; h.chains() * n];
        data.par_chunks_mut(n)
            .zip(h.as_slice().par_chunks(h.width()))
            .zip(h.ids().par_iter())
            .for_each_init(
                || vec![F::zero(); n],
                |act, ((out, row), &id)| {
                    let mut rng = seeds.stream(id);
                    self.sample_visible_row(row, act, out, &mut rng);
                },
            );
        Ok(StateBatch::from_parts(n, data, h.ids().to_vec()))
    }

    /// One full Gibbs update of every chain; returns `v^(k+1)`.
    pub fn update(&self, v: &StateBatch, seeds: SeedSequence) -> Result<StateBatch> {
        self.check_width(v, self.params.n_visible())?;
        let (n, m) = (self.params.n_visible(), self.params.n_hidden());
        let mut data = vec![0u8; v.chains() * n];
        data.par_chunks_mut(n)
            .zip(v.as_slice().par_chunks(n))
            .zip(v.ids().par_iter())
            .for_each_init(
                || (vec![0u8; m], vec![F::zero(); m], vec![F::zero(); n]),
                |(h, act_h, act_v), ((out, row), &id)| {
                    let mut rng = seeds.stream(id);
                    self.sample_hidden_row(row, act_h, h, &mut rng);
                    self.sample_visible_row(h, act_v, out, &mut rng);
                },
            );
        Ok(StateBatch::from_parts(n, data, v.ids().to_vec()))
    }

    /// Applies `steps` updates; update `k` (1-based) uses `seeds.derive(k)`.
    pub fn run(&self, v: &StateBatch, steps: usize, seeds: SeedSequence) -> Result<StateBatch> {
        let mut state = v.clone();
        for k in 1..=steps {
            state = self.update(&state, seeds.derive(k as u64))?;
        }
        Ok(state)
    }
}

pub fn sample_hidden<F: Real>(params: &RbmParams<F>, v: &StateBatch, seeds: SeedSequence) -> Result<StateBatch> {
    GibbsSampler::new(params).sample_hidden(v, seeds)
}

pub fn sample_visible<F: Real>(params: &RbmParams<F>, h: &StateBatch, seeds: SeedSequence) -> Result<StateBatch> {
    GibbsSampler::new(params).sample_visible(h, seeds)
}

pub fn gibbs_update<F: Real>(params: &RbmParams<F>, v: &StateBatch, seeds: SeedSequence) -> Result<StateBatch> {
    GibbsSampler::new(params).update(v, seeds)
}
