//! The experiment protocol: per replicate, draw a training set, train a model,
//! initialise chains per strategy, run Gibbs updates and record metrics on
//! the schedule.

use std::collections::HashMap;

use bmlab_core::datasets::{sample_training_set, PositiveSet};
use bmlab_core::io::{import_samples_with_width, Checkpoint};
use bmlab_core::metrics::evaluate;
use bmlab_core::samplers::{
    exact_boltzmann_init, hybrid_mix, rbm_to_ising, spin_reversal_ensemble, spins_to_visible, uniform_init,
    SaConfig, MAX_EXACT_INIT_VISIBLE,
};
use bmlab_core::training::train;
use bmlab_core::{GibbsSampler, MetricsRecord, Rbm, SeedSequence, StateBatch, Temp, TrainConfig};

use crate::aggregate::{aggregate, StepAggregate};
use crate::config::{Backend, ExperimentConfig, InitStrategy};
use crate::error::HarnessError;

const LABEL_TRAINING_SET: u64 = 1;
const LABEL_INIT_PARAMS: u64 = 2;
const LABEL_TRAIN: u64 = 3;
const LABEL_CLASSICAL_POOL: u64 = 4;
const LABEL_ANNEALER_POOL: u64 = 5;
const LABEL_CONDITION: u64 = 6;
const LABEL_MIX: u64 = 0;
const LABEL_GIBBS: u64 = 1;

/// One initialisation strategy, at one temperature where applicable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Condition {
    pub strategy: InitStrategy,
    pub temperature: Option<f64>,
}

impl Condition {
    /// `classical`, `annealer_T8`, `hybrid_T32`, ...
    pub fn label(&self) -> String {
        match self.temperature {
            None => self.strategy.to_string(),
            Some(t) => format!("{}_T{}", self.strategy, t),
        }
    }

    fn seed_label(&self) -> u64 {
        // FNV-1a over the label keeps seeds stable when conditions are reordered
        self.label()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
    }
}

/// Every condition implied by the configured strategies and temperatures.
pub fn conditions(cfg: &ExperimentConfig) -> Vec<Condition> {
    let mut out = Vec::new();
    for &strategy in &cfg.init_strategies {
        match strategy {
            InitStrategy::Classical => out.push(Condition {
                strategy,
                temperature: None,
            }),
            _ => out.extend(cfg.temperatures.iter().map(|&t| Condition {
                strategy,
                temperature: Some(t),
            })),
        }
    }
    out.dedup_by(|a, b| a == b);
    out
}

/// Records of one condition, per replicate, plus their aggregates.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsSeries {
    pub condition: String,
    /// `replicates[r]` holds the scheduled records of replicate `r`.
    pub replicates: Vec<Vec<MetricsRecord>>,
    pub aggregates: Vec<StepAggregate>,
}

fn replicate_seeds(cfg: &ExperimentConfig, replicate: usize) -> SeedSequence {
    SeedSequence::new(cfg.master_seed).derive(replicate as u64)
}

pub fn train_config(cfg: &ExperimentConfig) -> TrainConfig {
    TrainConfig {
        learning_rate: cfg.learning_rate,
        epochs: cfg.epochs,
        kind: cfg.model_kind,
        gibbs_updates_negative: cfg.gibbs_updates_negative,
        negative_chain_count: cfg.negative_chain_count,
        batch_size: cfg.batch_size,
    }
}

/// Training set of one replicate: distinct positives drawn without replacement.
pub fn training_set(cfg: &ExperimentConfig, set: &PositiveSet, replicate: usize) -> Result<StateBatch, HarnessError> {
    Ok(sample_training_set(
        set,
        cfg.training_set_size,
        replicate_seeds(cfg, replicate).derive(LABEL_TRAINING_SET),
    )?)
}

/// Trains the model of one replicate from its own training set.
pub fn train_replicate(cfg: &ExperimentConfig, set: &PositiveSet, replicate: usize) -> Result<Checkpoint<f64>, HarnessError> {
    let seeds = replicate_seeds(cfg, replicate);
    let data = training_set(cfg, set, replicate)?;
    let init = Rbm::random(set.dim(), cfg.hidden_units, cfg.init_weight_std, seeds.derive(LABEL_INIT_PARAMS))?;
    let params = train(&init, &data, &train_config(cfg), seeds.derive(LABEL_TRAIN))?;
    Ok(Checkpoint {
        params,
        kind: cfg.model_kind,
        seed: cfg.master_seed,
        epoch: cfg.epochs,
    })
}

pub fn train_replicates(cfg: &ExperimentConfig) -> Result<Vec<Checkpoint<f64>>, HarnessError> {
    let set = cfg.dataset.positives()?;
    (0..cfg.replicates).map(|r| train_replicate(cfg, &set, r)).collect()
}

/// Settings for drawing annealer samples outside a full experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerSpec {
    pub backend: Backend,
    pub chain_count: usize,
    pub sa_sweeps: usize,
    pub spin_reversal_transforms: usize,
}

impl SamplerSpec {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            backend: cfg.backend.clone(),
            chain_count: cfg.chain_count,
            sa_sweeps: cfg.sa_sweeps,
            spin_reversal_transforms: cfg.spin_reversal_transforms,
        }
    }

    /// Visible-layer samples at temperature `t`. `replicate` only matters for
    /// import paths.
    pub fn sample(&self, params: &Rbm, t: f64, replicate: usize, seeds: SeedSequence) -> Result<StateBatch, HarnessError> {
        let temp = Temp::new(t)?;
        let n = params.n_visible();
        match &self.backend {
            Backend::Emulator => {
                let ising = rbm_to_ising(params, temp);
                let sa = SaConfig {
                    sweeps: self.sa_sweeps,
                    ..SaConfig::for_temperature(t)
                };
                let spins = spin_reversal_ensemble(&ising, &sa, self.chain_count, self.spin_reversal_transforms, seeds)?;
                Ok(spins_to_visible(&spins, n)?)
            }
            Backend::Exact => {
                if n > MAX_EXACT_INIT_VISIBLE {
                    return Err(HarnessError::Invalid(format!(
                        "exact backend enumerates 2^{n} visible states; limit is {MAX_EXACT_INIT_VISIBLE} visible units"
                    )));
                }
                Ok(exact_boltzmann_init(params, temp, self.chain_count, seeds)?)
            }
            Backend::Import(template) => {
                let path = Backend::import_path(template, replicate, t);
                let batch = import_samples_with_width(&path, n)?.batch;
                if batch.chains() == 0 {
                    return Err(HarnessError::Invalid(format!("{} holds no samples", path.display())));
                }
                Ok(batch)
            }
        }
    }
}

/// Annealer samples of the visible layer at temperature `t`.
pub fn annealer_samples(
    cfg: &ExperimentConfig,
    params: &Rbm,
    t: f64,
    replicate: usize,
    seeds: SeedSequence,
) -> Result<StateBatch, HarnessError> {
    SamplerSpec::from_config(cfg).sample(params, t, replicate, seeds)
}

/// Gibbs-runs `init` for `cfg.gibbs_updates` steps, evaluating on the schedule.
pub fn run_chains(
    cfg: &ExperimentConfig,
    params: &Rbm,
    set: &PositiveSet,
    init: StateBatch,
    seeds: SeedSequence,
) -> Result<Vec<MetricsRecord>, HarnessError> {
    let sampler = GibbsSampler::new(params);
    let mut records = vec![evaluate(&init, set, 0, cfg.top_k)?];
    let mut state = init;
    for step in 1..=cfg.gibbs_updates {
        state = sampler.update(&state, seeds.derive(step as u64))?;
        if cfg.schedule.contains(step) {
            records.push(evaluate(&state, set, step, cfg.top_k)?);
        }
    }
    Ok(records)
}

/// Runs every condition of one replicate against a trained model.
pub fn run_replicate(
    cfg: &ExperimentConfig,
    params: &Rbm,
    set: &PositiveSet,
    replicate: usize,
) -> Result<Vec<(Condition, Vec<MetricsRecord>)>, HarnessError> {
    if params.n_visible() != set.dim() {
        return Err(HarnessError::Invalid(format!(
            "model has {} visible units but {} needs {}",
            params.n_visible(),
            cfg.dataset,
            set.dim()
        )));
    }
    let seeds = replicate_seeds(cfg, replicate);
    let classical = uniform_init(cfg.chain_count, set.dim(), seeds.derive(LABEL_CLASSICAL_POOL))?;
    let mut annealer: HashMap<u64, StateBatch> = HashMap::new();
    let mut out = Vec::new();
    for cond in conditions(cfg) {
        let mut annealer_pool = |t: f64| -> Result<StateBatch, HarnessError> {
            if let Some(b) = annealer.get(&t.to_bits()) {
                return Ok(b.clone());
            }
            let pool_seeds = seeds.derive(LABEL_ANNEALER_POOL).derive(t.to_bits());
            let b = annealer_samples(cfg, params, t, replicate, pool_seeds)?;
            annealer.insert(t.to_bits(), b.clone());
            Ok(b)
        };
        let cond_seeds = seeds.derive(LABEL_CONDITION).derive(cond.seed_label());
        let init = match (cond.strategy, cond.temperature) {
            (InitStrategy::Classical, _) => classical.clone(),
            (InitStrategy::Annealer, Some(t)) => annealer_pool(t)?,
            (InitStrategy::Hybrid, Some(t)) => {
                let pool = annealer_pool(t)?;
                hybrid_mix(&classical, &pool, cfg.chain_count, cond_seeds.derive(LABEL_MIX))?
            }
            _ => unreachable!("annealer and hybrid conditions carry a temperature"),
        };
        let records = run_chains(cfg, params, set, init, cond_seeds.derive(LABEL_GIBBS))?;
        out.push((cond, records));
    }
    Ok(out)
}

/// Full protocol with in-process training.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<MetricsSeries>, HarnessError> {
    let models = train_replicates(cfg)?;
    run_experiment_with_models(cfg, &models)
}

/// Protocol with pre-trained models, one per replicate.
pub fn run_experiment_with_models(
    cfg: &ExperimentConfig,
    models: &[Checkpoint<f64>],
) -> Result<Vec<MetricsSeries>, HarnessError> {
    cfg.validate()?;
    if models.len() != cfg.replicates {
        return Err(HarnessError::Invalid(format!(
            "{} replicates configured but {} models given",
            cfg.replicates,
            models.len()
        )));
    }
    let set = cfg.dataset.positives()?;
    let conds = conditions(cfg);
    let mut per_condition: Vec<Vec<Vec<MetricsRecord>>> = vec![Vec::new(); conds.len()];
    for (r, model) in models.iter().enumerate() {
        for (k, (_, records)) in run_replicate(cfg, &model.params, &set, r)?.into_iter().enumerate() {
            per_condition[k].push(records);
        }
    }
    conds
        .iter()
        .zip(per_condition)
        .map(|(c, replicates)| {
            Ok(MetricsSeries {
                condition: c.label(),
                aggregates: aggregate(&replicates)?,
                replicates,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use bmlab_core::datasets::DatasetKind;
    use bmlab_core::NegativePhaseKind;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            replicates: 2,
            chain_count: 500,
            gibbs_updates: 12,
            epochs: 20,
            training_set_size: 10,
            batch_size: 10,
            negative_chain_count: 10,
            init_strategies: vec![InitStrategy::Classical, InitStrategy::Annealer, InitStrategy::Hybrid],
            temperatures: vec![2.0],
            backend: Backend::Exact,
            ..ExperimentConfig::defaults(DatasetKind::Bas(3), NegativePhaseKind::Cd)
        }
    }

    #[test]
    fn condition_labels() {
        let labels: Vec<String> = conditions(&tiny()).iter().map(Condition::label).collect();
        assert_eq!(labels, vec!["classical", "annealer_T2", "hybrid_T2"]);
    }

    #[test]
    fn zero_updates_records_only_step_zero() {
        let cfg = ExperimentConfig {
            gibbs_updates: 0,
            ..tiny()
        };
        let out = run_experiment(&cfg).unwrap();
        for s in &out {
            assert_eq!(s.replicates.len(), 2);
            assert!(s.replicates.iter().all(|r| r.len() == 1 && r[0].step == 0));
        }
    }

    #[test]
    fn records_follow_schedule_and_are_deterministic() {
        let cfg = ExperimentConfig {
            schedule: crate::config::ScheduleSpec {
                dense_until: 5,
                sparse_stride: 3,
            },
            ..tiny()
        };
        let a = run_experiment(&cfg).unwrap();
        let steps: Vec<usize> = a[0].replicates[0].iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 1, 2, 3, 4, 5, 8, 11]);
        assert_eq!(a, run_experiment(&cfg).unwrap());
    }

    #[test]
    fn exact_backend_refuses_large_models() {
        let cfg = ExperimentConfig {
            replicates: 1,
            epochs: 1,
            chain_count: 10,
            training_set_size: 10,
            batch_size: 10,
            negative_chain_count: 10,
            init_strategies: vec![InitStrategy::Annealer],
            backend: Backend::Exact,
            ..ExperimentConfig::defaults(DatasetKind::Bas(5), NegativePhaseKind::Cd)
        };
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn model_count_must_match_replicates() {
        let cfg = tiny();
        let models = train_replicates(&ExperimentConfig { replicates: 1, ..cfg.clone() }).unwrap();
        assert!(run_experiment_with_models(&cfg, &models).is_err());
    }

    #[test]
    fn uniform_precision_at_step_zero_matches_positive_fraction() {
        let cfg = ExperimentConfig {
            replicates: 1,
            epochs: 1,
            chain_count: 400_000,
            gibbs_updates: 0,
            training_set_size: 30,
            batch_size: 30,
            negative_chain_count: 30,
            ..ExperimentConfig::defaults(DatasetKind::Bas(4), NegativePhaseKind::Cd)
        };
        let p: f64 = 30.0 / 65536.0;
        let got = run_experiment(&cfg).unwrap()[0].replicates[0][0].precision;
        let sigma = (p * (1.0 - p) / 400_000.0).sqrt();
        assert!((got - p).abs() < 4.0 * sigma, "{got} vs {p}");
    }

    #[test]
    fn series_do_not_depend_on_thread_count() {
        let cfg = tiny();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_experiment(&cfg).unwrap())
        };
        assert_eq!(run(1), run(3));
    }
}
