//! Experiment configuration, read from a flat `key = value` text file.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error so typos do not silently fall back to defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bmlab_core::datasets::DatasetKind;
use bmlab_core::NegativePhaseKind;

use crate::error::HarnessError;

/// Number of Gibbs updates in long-run mode.
pub const LONG_RUN_UPDATES: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitStrategy {
    /// Uniform random bits.
    Classical,
    /// Samples from the annealer backend at each configured temperature.
    Annealer,
    /// Per-chain uniform draw from classical ∪ annealer samples.
    Hybrid,
}

impl FromStr for InitStrategy {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classical" => Ok(Self::Classical),
            "annealer" | "dwave" | "d-wave" => Ok(Self::Annealer),
            "hybrid" => Ok(Self::Hybrid),
            other => Err(HarnessError::Config(format!("unknown init strategy '{other}'"))),
        }
    }
}

impl fmt::Display for InitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Classical => "classical",
            Self::Annealer => "annealer",
            Self::Hybrid => "hybrid",
        })
    }
}

/// Where annealer samples come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Backend {
    /// Simulated annealing over the Ising image with spin-reversal transforms.
    Emulator,
    /// Exact Boltzmann draws (small visible layers only).
    Exact,
    /// Sample files; `{replicate}` and `{temperature}` in the path are substituted.
    Import(String),
}

impl FromStr for Backend {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "emulator" | "sa" => Ok(Self::Emulator),
            "exact" => Ok(Self::Exact),
            _ => {
                if let Some(path) = s.strip_prefix("import:") {
                    Ok(Self::Import(path.trim().to_string()))
                } else {
                    Err(HarnessError::Config(format!(
                        "unknown backend '{s}' (expected emulator, exact or import:<path>)"
                    )))
                }
            }
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Emulator => f.write_str("emulator"),
            Self::Exact => f.write_str("exact"),
            Self::Import(p) => write!(f, "import:{p}"),
        }
    }
}

impl Backend {
    pub fn import_path(template: &str, replicate: usize, temperature: f64) -> PathBuf {
        PathBuf::from(
            template
                .replace("{replicate}", &replicate.to_string())
                .replace("{temperature}", &temperature.to_string()),
        )
    }
}

/// Steps at which metrics are recorded: every step up to `dense_until`, then
/// every `sparse_stride` steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScheduleSpec {
    pub dense_until: usize,
    pub sparse_stride: usize,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            dense_until: 100,
            sparse_stride: 10,
        }
    }
}

impl ScheduleSpec {
    pub fn contains(&self, step: usize) -> bool {
        step <= self.dense_until || (step - self.dense_until).is_multiple_of(self.sparse_stride)
    }

    /// Recorded steps for a run of `updates` Gibbs updates, starting at 0.
    pub fn steps(&self, updates: usize) -> Vec<usize> {
        (0..=updates).filter(|&s| self.contains(s)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub model_kind: NegativePhaseKind,
    pub replicates: usize,
    pub training_set_size: usize,
    pub chain_count: usize,
    pub init_strategies: Vec<InitStrategy>,
    pub temperatures: Vec<f64>,
    pub gibbs_updates: usize,
    pub master_seed: u64,
    pub backend: Backend,
    pub schedule: ScheduleSpec,
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub negative_chain_count: usize,
    pub gibbs_updates_negative: usize,
    pub init_weight_std: f64,
    pub spin_reversal_transforms: usize,
    pub sa_sweeps: usize,
    pub top_k: usize,
}

impl ExperimentConfig {
    /// Protocol defaults for a dataset and model kind.
    pub fn defaults(dataset: DatasetKind, model_kind: NegativePhaseKind) -> Self {
        let positives = match dataset {
            DatasetKind::Bas(n) => 2usize.saturating_mul(1usize << n.min(40)).saturating_sub(2),
            DatasetKind::Shifter(n) => 3usize.saturating_mul(1usize << n.min(40)),
        };
        let (training_set_size, chain_count, epochs) = match dataset {
            DatasetKind::Bas(_) => (512usize.min(positives), 40_000, 2000),
            DatasetKind::Shifter(_) => (256usize.min(positives), 4000, 4000),
        };
        Self {
            dataset,
            model_kind,
            replicates: 5,
            training_set_size,
            chain_count,
            init_strategies: vec![InitStrategy::Classical],
            temperatures: vec![8.0],
            gibbs_updates: 1000,
            master_seed: 0,
            backend: Backend::Emulator,
            schedule: ScheduleSpec::default(),
            hidden_units: dataset.dim(),
            learning_rate: 0.05,
            epochs,
            batch_size: training_set_size,
            negative_chain_count: training_set_size,
            gibbs_updates_negative: match model_kind {
                NegativePhaseKind::Naive => 50,
                NegativePhaseKind::Cd => 1,
            },
            init_weight_std: 0.01,
            spin_reversal_transforms: 10,
            sa_sweeps: 1000,
            top_k: 10,
        }
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut pairs = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected key = value, got '{line}'", k + 1))
            })?;
            pairs.push((k + 1, key.trim().to_string(), value.trim().to_string()));
        }
        let lookup = |name: &str| pairs.iter().rev().find(|(_, k, _)| k == name).map(|(_, _, v)| v.as_str());
        let dataset: DatasetKind = lookup("dataset")
            .ok_or_else(|| HarnessError::Config("missing required key 'dataset'".into()))?
            .parse()?;
        let model_kind: NegativePhaseKind = lookup("model_kind").unwrap_or("naive").parse()?;
        let mut cfg = Self::defaults(dataset, model_kind);
        // keys whose defaults follow other keys unless set explicitly
        let mut batch_set = false;
        let mut chains_set = false;

        for (line, key, value) in &pairs {
            let bad = |what: &str| HarnessError::Config(format!("line {line}: invalid {what} '{value}'"));
            let int = || value.parse::<usize>().map_err(|_| bad(key));
            let real = || value.parse::<f64>().map_err(|_| bad(key));
            match key.as_str() {
                "dataset" | "model_kind" => {}
                "replicates" => cfg.replicates = int()?,
                "training_set_size" => cfg.training_set_size = int()?,
                "chain_count" => cfg.chain_count = int()?,
                "init_strategy" => {
                    cfg.init_strategies = value
                        .split(',')
                        .map(str::parse)
                        .collect::<Result<_, _>>()?;
                }
                "temperatures" | "temperature" => {
                    cfg.temperatures = value
                        .split(',')
                        .map(|t| t.trim().parse::<f64>().map_err(|_| bad("temperature")))
                        .collect::<Result<_, _>>()?;
                }
                "gibbs_updates" => cfg.gibbs_updates = int()?,
                "master_seed" | "seed" => cfg.master_seed = value.parse().map_err(|_| bad(key))?,
                "backend" => cfg.backend = value.parse()?,
                "dense_until" => cfg.schedule.dense_until = int()?,
                "sparse_stride" => cfg.schedule.sparse_stride = int()?,
                "hidden_units" => cfg.hidden_units = int()?,
                "learning_rate" => cfg.learning_rate = real()?,
                "epochs" => cfg.epochs = int()?,
                "batch_size" => {
                    cfg.batch_size = int()?;
                    batch_set = true;
                }
                "negative_chain_count" => {
                    cfg.negative_chain_count = int()?;
                    chains_set = true;
                }
                "gibbs_updates_negative" => cfg.gibbs_updates_negative = int()?,
                "init_weight_std" => cfg.init_weight_std = real()?,
                "spin_reversal_transforms" => cfg.spin_reversal_transforms = int()?,
                "sa_sweeps" => cfg.sa_sweeps = int()?,
                "top_k" => cfg.top_k = int()?,
                other => return Err(HarnessError::Config(format!("line {line}: unknown key '{other}'"))),
            }
        }
        if !batch_set {
            cfg.batch_size = cfg.training_set_size;
        }
        if !chains_set {
            cfg.negative_chain_count = cfg.batch_size;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let counts = [
            ("replicates", self.replicates),
            ("training_set_size", self.training_set_size),
            ("chain_count", self.chain_count),
            ("hidden_units", self.hidden_units),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("negative_chain_count", self.negative_chain_count),
            ("gibbs_updates_negative", self.gibbs_updates_negative),
            ("dense_until", self.schedule.dense_until),
            ("sparse_stride", self.schedule.sparse_stride),
            ("spin_reversal_transforms", self.spin_reversal_transforms),
            ("sa_sweeps", self.sa_sweeps),
            ("top_k", self.top_k),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(HarnessError::Config(format!("{name} must be positive")));
            }
        }
        if self.init_strategies.is_empty() {
            return Err(HarnessError::Config("init_strategy must name at least one strategy".into()));
        }
        if self.temperatures.is_empty() || self.temperatures.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(HarnessError::Config("temperatures must be a non-empty list of positive numbers".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(HarnessError::Config("learning_rate must be non-negative".into()));
        }
        if self.init_weight_std.is_nan() || self.init_weight_std < 0.0 {
            return Err(HarnessError::Config("init_weight_std must be non-negative".into()));
        }
        Ok(())
    }

    /// Switches to long-run mode: one replicate, 100 000 updates.
    pub fn long_run(&mut self) {
        self.replicates = 1;
        self.gibbs_updates = LONG_RUN_UPDATES;
    }
}
