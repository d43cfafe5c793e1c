use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qvae_core::evaluation::{
    default_sample_count, estimated_bond_dimension, fidelity_vs_empirical, max_entanglement_entropy, noise_floor,
    reconstruct_distribution,
};
use qvae_core::harness::{
    generate_state_cached, read_rows, run_compression_sweep, run_depth_sweep, summarize, write_summary,
    ExperimentConfig, FamilyKind, StateCache, StateFamily, TrainingOverrides, CACHE_ENV,
};
use qvae_core::sampling::Sampler;
use qvae_core::states::{evolve_long_range, haar_random_state, product_random_state, AmplitudeState, HamiltonianSpec};
use qvae_core::vae::{architecture_for, read_checkpoint, train, write_checkpoint, NetworkArchitecture};
use qvae_core::ProbabilityTable;

#[derive(Parser)]
#[command(name = "qvae", version, about = "Learn quantum probability distributions with a variational autoencoder")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an exact probability table and write it as QDST or CSV.
    Generate(GenerateArgs),
    /// Train one network and write a QVAE checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint against the exact table.
    Evaluate(EvaluateArgs),
    /// Fidelity against decoder depth at fixed compression.
    SweepDepth(SweepArgs),
    /// Fidelity against compression at fixed depth.
    SweepCompression(SweepArgs),
    /// Aggregate a result CSV over seeds.
    Summarize(SummarizeArgs),
}

#[derive(Args, Clone, Default)]
struct StateArgs {
    /// product | haar | hard | hamiltonian
    #[arg(long)]
    family: Option<String>,
    /// Qubit count (product, haar, hamiltonian).
    #[arg(long)]
    n: Option<usize>,
    /// Permutation size of the hard distribution.
    #[arg(long = "hard-n")]
    hard_n: Option<usize>,
    /// Root-of-unity order of the hard distribution (power of two).
    #[arg(long = "hard-L")]
    hard_l: Option<usize>,
    /// Evolution time of the hamiltonian family.
    #[arg(long)]
    time: Option<f64>,
    #[arg(long, env = CACHE_ENV)]
    cache_dir: Option<PathBuf>,
}

impl StateArgs {
    fn family(&self) -> Result<StateFamily> {
        let name = self.family.as_deref().context("--family is required")?;
        let kind: FamilyKind = name.parse()?;
        Ok(StateFamily::from_parts(kind, self.n, self.hard_n, self.hard_l, self.time)?)
    }

    fn cache(&self) -> Option<StateCache> {
        self.cache_dir.as_ref().map(StateCache::new)
    }
}

#[derive(Args, Clone, Default)]
struct ScheduleArgs {
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    warmup_final: Option<f64>,
    #[arg(long)]
    warmup_fraction: Option<f64>,
}

impl ScheduleArgs {
    fn overrides(&self) -> TrainingOverrides {
        TrainingOverrides {
            batches: self.batches,
            batch_size: self.batch_size,
            lr: self.lr,
            warmup_final: self.warmup_final,
            warmup_fraction: self.warmup_fraction,
            log_interval: None,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; `.csv` writes CSV, anything else QDST.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also draw this many samples...
    #[arg(long)]
    samples: Option<usize>,
    /// ...and write them one bit string per line here.
    #[arg(long, requires = "samples")]
    samples_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, default_value_t = 1)]
    depth: usize,
    /// Target compression C = m / 2^n.
    #[arg(long, conflicts_with = "width")]
    compression: Option<f64>,
    /// Explicit uniform hidden width instead of sizing from C.
    #[arg(long)]
    width: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Training log CSV.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    /// State seed for random families.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Latent draws; defaults to 100 · 2^n.
    #[arg(long)]
    samples: Option<u64>,
    /// Write the reconstructed table (QDST or `.csv`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    compressions: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Latent draws for reconstruction.
    #[arg(long)]
    samples: Option<u64>,
    /// Result CSV; provenance goes to `<out>.meta.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train_cmd(a),
        Command::Evaluate(a) => evaluate(a),
        Command::SweepDepth(a) => sweep(a, true),
        Command::SweepCompression(a) => sweep(a, false),
        Command::Summarize(a) => summarize_cmd(a),
    }
}

fn write_table(table: &ProbabilityTable, path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e == "csv") {
        table.write_csv(BufWriter::new(File::create(path)?))?;
    } else {
        table.write_qdst(path)?;
    }
    Ok(())
}

fn amplitude_state(family: &StateFamily, seed: u64) -> Option<qvae_core::Result<AmplitudeState>> {
    match *family {
        StateFamily::Product { n } => Some(product_random_state(n, seed)),
        StateFamily::Haar { n } => Some(haar_random_state(n, seed)),
        StateFamily::Hamiltonian { n, time } => Some(HamiltonianSpec::new(n, time).and_then(|s| evolve_long_range(&s))),
        StateFamily::Hard { .. } => None,
    }
}

fn generate(a: GenerateArgs) -> Result<()> {
    let family = a.state.family()?;
    let cache = a.state.cache();
    let table = generate_state_cached(&family, a.seed, cache.as_ref())?;
    if let Some(out) = &a.out {
        write_table(&table, out)?;
    }
    let mut report = json!({
        "family": family.kind().to_string(),
        "n_qubits": table.n_qubits(),
        "seed": a.seed,
    });
    if let StateFamily::Hard { hard_n, hard_l } = family {
        report["hard_n"] = json!(hard_n);
        report["hard_L"] = json!(hard_l);
    }
    // entropy needs amplitudes; skip above 14 qubits where the SVD gets slow
    if table.n_qubits() <= 14 {
        if let Some(state) = amplitude_state(&family, a.seed) {
            let state = state?;
            report["max_entropy_bits"] = json!(max_entanglement_entropy(&state)?);
            report["bond_dimension"] = json!(estimated_bond_dimension(&state)?);
        }
    }
    if let (Some(count), Some(path)) = (a.samples, &a.samples_out) {
        let mut sampler = Sampler::new(&table, a.seed);
        let batch = sampler.draw(count)?;
        batch.write_dump(BufWriter::new(File::create(path)?))?;
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let family = a.state.family()?;
    let table = generate_state_cached(&family, a.seed, a.state.cache().as_ref())?;
    let n = table.n_qubits();
    let arch = match (a.width, a.compression) {
        (Some(w), _) => NetworkArchitecture::uniform(n, a.depth, w)?,
        (None, Some(c)) => architecture_for(n, a.depth, c)?,
        (None, None) => bail!("pass --compression or --width"),
    };
    let schedule = a.schedule.overrides().apply(a.seed);
    let (params, log) = train(&table, &arch, &schedule)?;
    let mut f = BufWriter::new(File::create(&a.out)?);
    write_checkpoint(&params, &mut f)?;
    f.flush()?;
    if let Some(path) = &a.log {
        log.write_csv(BufWriter::new(File::create(path)?))?;
    }
    let report = json!({
        "n": n,
        "depth": arch.depth(),
        "width": arch.penultimate_width(),
        "m_weights": arch.decoder_weight_count(),
        "m_total": arch.decoder_parameter_count(),
        "C": arch.compression(),
        "final_loss": log.final_loss(),
        "elapsed_ms": log.elapsed_ms,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let family = a.state.family()?;
    let table = generate_state_cached(&family, a.seed, a.state.cache().as_ref())?;
    let params = read_checkpoint(File::open(&a.checkpoint).with_context(|| a.checkpoint.display().to_string())?)?;
    if params.architecture().n() != table.n_qubits() {
        bail!(
            "checkpoint is for {} qubits, state has {}",
            params.architecture().n(),
            table.n_qubits()
        );
    }
    let samples = a.samples.unwrap_or_else(|| default_sample_count(table.n_qubits()));
    let learned = reconstruct_distribution(&params, samples, a.seed)?;
    let score = fidelity_vs_empirical(&table, &learned, samples)?;
    let floor = noise_floor(&table, samples, a.seed)?;
    if let Some(out) = &a.out {
        write_table(&learned, out)?;
    }
    let report = json!({
        "fidelity": score.value,
        "noise_floor": floor,
        "samples": samples,
        "total_variation": table.total_variation(&learned)?,
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn sweep(a: SweepArgs, depth_axis: bool) -> Result<()> {
    let mut config = match &a.config {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path).with_context(|| path.display().to_string())?)?,
        None => {
            let family = a.state.family()?;
            ExperimentConfig {
                family,
                depths: vec![1],
                compressions: vec![0.5],
                seeds: vec![0],
                schedule: TrainingOverrides::default(),
                reconstruction_samples: None,
                out: None,
                cache_dir: None,
            }
        }
    };
    if a.config.is_some() && a.state.family.is_some() {
        config.family = a.state.family()?;
    }
    if let Some(d) = a.depths {
        config.depths = d;
    }
    if let Some(c) = a.compressions {
        config.compressions = c;
    }
    if let Some(s) = a.seeds {
        config.seeds = s;
    }
    config.schedule = config.schedule.merged(&a.schedule.overrides());
    if a.samples.is_some() {
        config.reconstruction_samples = a.samples;
    }
    if a.out.is_some() {
        config.out = a.out;
    }
    if a.state.cache_dir.is_some() {
        config.cache_dir = a.state.cache_dir.clone();
    }
    config.validate()?;

    let cache = config.cache_dir.as_ref().map(StateCache::new);
    let result = if depth_axis {
        run_depth_sweep(&config, cache.as_ref())?
    } else {
        run_compression_sweep(&config, cache.as_ref())?
    };
    for s in &result.skipped {
        eprintln!("skipped depth={} C={} seed={}: {}", s.depth, s.compression, s.seed, s.reason);
    }
    match &config.out {
        Some(path) => result.write_csv(path)?,
        None => qvae_core::harness::write_rows(&result.rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn summarize_cmd(a: SummarizeArgs) -> Result<()> {
    let rows = read_rows(File::open(&a.input).with_context(|| a.input.display().to_string())?)?;
    let summary = summarize(&rows);
    match &a.out {
        Some(p) => write_summary(&summary, BufWriter::new(File::create(p)?))?,
        None => write_summary(&summary, std::io::stdout().lock())?,
    }
    Ok(())
}
