use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use bmlab::aggregate::{aggregate, METRICS};
use bmlab::bench::{bench_gibbs, AnnealerTiming};
use bmlab::config::{Backend, ExperimentConfig};
use bmlab::experiment::{run_experiment_with_models, train_replicates, SamplerSpec};
use bmlab::plot::{plot, PlotSeries};
use bmlab::report::{parse_metrics_csv, record_line, write_series, METRICS_HEADER};
use bmlab_core::datasets::DatasetKind;
use bmlab_core::io::{import_samples, Checkpoint, SampleFile};
use bmlab_core::metrics::evaluate;
use bmlab_core::{Rbm, SeedSequence};

#[derive(Parser)]
#[command(name = "bmlab", version, about = "RBM chain-initialization experiments")]
struct Cli {
    /// Worker threads (default: all cores, or RAYON_NUM_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model per replicate and write checkpoints.
    Train(TrainArgs),
    /// Draw annealer-backend samples from a checkpoint into a sample file.
    InitSamples(InitSamplesArgs),
    /// Run the full protocol and write metrics CSVs.
    Run(RunArgs),
    /// Score a sample file against a dataset (step-0 record).
    Eval(EvalArgs),
    /// Time full Gibbs updates and compare with the annealer budget.
    Bench(BenchArgs),
    /// Render SVG plots from metrics CSVs.
    Plot(PlotArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides master_seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// emulator, exact or import:<path template>
    #[arg(long)]
    backend: Option<Backend>,
    /// Comma-separated temperatures, overriding the config.
    #[arg(long, value_delimiter = ',')]
    temperature: Vec<f64>,
    /// One replicate, 100000 updates.
    #[arg(long)]
    long_run: bool,
    /// Directory of model_r<k>.ckpt files written by `train`; trains in-process when absent.
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
}

#[derive(Args)]
struct InitSamplesArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    temperature: f64,
    #[arg(long, default_value = "emulator")]
    backend: Backend,
    #[arg(long, default_value_t = 10_000)]
    chains: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 10)]
    transforms: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// e.g. bas:12 or shifter:8
    #[arg(long)]
    dataset: DatasetKind,
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 144)]
    visible: usize,
    #[arg(long, default_value_t = 144)]
    hidden: usize,
    #[arg(long, default_value_t = 10_000)]
    chains: usize,
    /// Full updates per timed repetition.
    #[arg(long, default_value_t = 1)]
    updates: usize,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20.0)]
    anneal_us: f64,
    #[arg(long, default_value_t = 20.0)]
    delay_us: f64,
    #[arg(long, default_value_t = 214.0)]
    readout_us: f64,
}

#[derive(Args)]
struct PlotArgs {
    /// Directory holding metrics_<condition>.csv files.
    #[arg(long)]
    input: PathBuf,
    /// Output directory; one SVG per metric.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    Ok(cfg)
}

fn checkpoint_path(dir: &Path, replicate: usize) -> PathBuf {
    dir.join(format!("model_r{replicate}.ckpt"))
}

fn train(args: TrainArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let models = train_replicates(&cfg)?;
    std::fs::create_dir_all(&args.common.out_dir)
        .with_context(|| format!("creating {}", args.common.out_dir.display()))?;
    for (r, model) in models.iter().enumerate() {
        let path = checkpoint_path(&args.common.out_dir, r);
        model.save(&path)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(b) = args.backend {
        cfg.backend = b;
    }
    if !args.temperature.is_empty() {
        cfg.temperatures = args.temperature;
    }
    if args.long_run {
        cfg.long_run();
    }
    cfg.validate()?;
    let models = match &args.checkpoint_dir {
        Some(dir) => (0..cfg.replicates)
            .map(|r| {
                let path = checkpoint_path(dir, r);
                Checkpoint::<f64>::load(&path).with_context(|| format!("loading {}", path.display()))
            })
            .collect::<Result<Vec<_>>>()?,
        None => train_replicates(&cfg)?,
    };
    let series = run_experiment_with_models(&cfg, &models)?;
    for path in write_series(&args.common.out_dir, &series)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn init_samples(args: InitSamplesArgs) -> Result<()> {
    let ckpt = Checkpoint::<f64>::load(&args.checkpoint)
        .with_context(|| format!("loading {}", args.checkpoint.display()))?;
    if let Backend::Import(_) = args.backend {
        bail!("init-samples draws samples; use emulator or exact");
    }
    let spec = SamplerSpec {
        backend: args.backend.clone(),
        chain_count: args.chains,
        sa_sweeps: args.sweeps,
        spin_reversal_transforms: args.transforms,
    };
    let batch = spec.sample(&ckpt.params, args.temperature, 0, SeedSequence::new(args.seed))?;
    let mut file = SampleFile::new(batch)
        .with_meta("device", args.backend)
        .with_meta("temperature", args.temperature)
        .with_meta("seed", args.seed);
    if spec.backend == Backend::Emulator {
        file = file
            .with_meta("spin_reversal_transforms", args.transforms)
            .with_meta("sweeps", args.sweeps);
    }
    file.save(&args.out)?;
    println!("{}", args.out.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let set = args.dataset.positives()?;
    let file = import_samples(&args.samples).with_context(|| format!("reading {}", args.samples.display()))?;
    let file = file.expect_width(set.dim())?;
    let record = evaluate(&file.batch, &set, 0, args.top_k)?;
    println!("{METRICS_HEADER}");
    println!("{}", record_line(0, &record));
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let seeds = SeedSequence::new(args.seed);
    let params = Rbm::random(args.visible, args.hidden, 0.1, seeds.derive(0))?;
    let timing = AnnealerTiming {
        anneal_us: args.anneal_us,
        delay_us: args.delay_us,
        readout_us: args.readout_us,
    };
    let report = bench_gibbs(&params, args.chains, args.updates, args.reps, timing, seeds.derive(1))?;
    println!("{report}");
    Ok(())
}

fn plot_cmd(args: PlotArgs) -> Result<()> {
    let mut entries: Vec<(String, PathBuf)> = std::fs::read_dir(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter_map(|p| {
            let name = p.file_name()?.to_str()?;
            let label = name.strip_prefix("metrics_")?.strip_suffix(".csv")?.to_string();
            Some((label, p))
        })
        .collect();
    entries.sort();
    if entries.is_empty() {
        bail!("no metrics_*.csv files in {}", args.input.display());
    }
    let mut aggregates = Vec::new();
    for (label, path) in &entries {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let replicates = parse_metrics_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
        aggregates.push((label.clone(), aggregate(&replicates)?));
    }
    let out_dir = args.out_dir.unwrap_or(args.input);
    for metric in METRICS {
        let series: Vec<PlotSeries> = aggregates
            .iter()
            .map(|(label, a)| PlotSeries::from_aggregates(label, a, metric))
            .filter(|s| !s.points.is_empty())
            .collect();
        if series.is_empty() {
            continue;
        }
        let path = out_dir.join(format!("{metric}.svg"));
        plot(&series, metric, metric, &path)?;
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::InitSamples(a) => init_samples(a),
        Command::Run(a) => run(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => bench(a),
        Command::Plot(a) => plot_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
