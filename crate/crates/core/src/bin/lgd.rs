use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::Array2;

use lgd_core::data::{self, Dataset, FlipMap, NoiseKind, NoiseSource, NoiseSpec, SynthSpec};
use lgd_core::harness::{
    self, DataSource, ExperimentConfig, ExperimentOutput, ScaleExpSpec, TraceFormat, Training,
};
use lgd_core::lgd::{LgdConfig, RelabelConfig};
use lgd_core::nn::{LossSpec, MixupSpec, TrainHyper};
use lgd_core::theory::{self, BoundsQuery};
use lgd_core::Error;

/// Learning with noisy labels by limited gradient descent.
#[derive(Debug, Parser)]
#[command(name = "lgd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a noise/selection configuration against the feasibility bounds.
    Bounds(BoundsArgs),
    /// Write a Gaussian cluster dataset as IDX files.
    Synth(SynthArgs),
    /// Corrupt an IDX label file.
    Pollute(PolluteArgs),
    /// Train with LGD and select the checkpoint at the LoR peak.
    TrainLgd(TrainArgs),
    /// Alternate LGD training and relabeling of the training set.
    TrainRelabel(TrainArgs),
    /// Per-pattern learning curves for large, small and chaos patterns.
    ScaleExp(ScaleArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NoiseArg {
    Sym,
    Asym,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LossArg {
    Cce,
    Mae,
    Lq,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for TraceFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => TraceFormat::Csv,
            FormatArg::Json => TraceFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
struct NoiseArgs {
    /// Noise ratio; omit to train on clean labels.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_enum, default_value = "sym")]
    noise: NoiseArg,
    /// Asymmetric flip map as a comma-separated permutation, e.g. 2,3,0,1.
    #[arg(long)]
    map: Option<String>,
}

impl NoiseArgs {
    fn spec(&self, k: usize) -> anyhow::Result<Option<NoiseSpec>> {
        let Some(eta) = self.eta else {
            return Ok(None);
        };
        let source = match self.noise {
            NoiseArg::Sym => NoiseSource::Symmetric,
            NoiseArg::Asym => {
                let map = match &self.map {
                    Some(s) => FlipMap::parse(s)?,
                    None => FlipMap::default_for(k)?,
                };
                if map.k() != k {
                    return Err(Error::Config(format!("flip map covers {} classes, data has {k}", map.k())).into());
                }
                let collisions = map.shift_collisions();
                if !collisions.is_empty() {
                    eprintln!(
                        "warning: flip map collides with the label shift for classes {collisions:?}; \
                         shifted noisy labels may land on true labels"
                    );
                }
                NoiseSource::Asymmetric(map)
            }
        };
        Ok(Some(NoiseSpec::new(source, eta)?))
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Directory holding the four MNIST IDX files.
    #[arg(long)]
    mnist_dir: Option<PathBuf>,
    #[arg(long, requires_all = ["train_labels", "test_images", "test_labels"])]
    train_images: Option<PathBuf>,
    #[arg(long)]
    train_labels: Option<PathBuf>,
    #[arg(long)]
    test_images: Option<PathBuf>,
    #[arg(long)]
    test_labels: Option<PathBuf>,
    /// Use only the first N training samples of IDX data.
    #[arg(long)]
    train_limit: Option<usize>,
    #[arg(long)]
    test_limit: Option<usize>,
    /// Class count of synthetic data.
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 2000)]
    per_class: usize,
    #[arg(long, default_value_t = 1000)]
    test_per_class: usize,
    #[arg(long, default_value_t = 256)]
    dim: usize,
    #[arg(long, default_value_t = 5.0)]
    separation: f64,
    /// Seed for synthetic data; defaults to --seed.
    #[arg(long)]
    data_seed: Option<u64>,
}

impl DataArgs {
    fn source(&self, seed: u64) -> DataSource {
        if let Some(dir) = &self.mnist_dir {
            return DataSource::mnist(dir, self.train_limit, self.test_limit);
        }
        if let (Some(ti), Some(tl), Some(vi), Some(vl)) =
            (&self.train_images, &self.train_labels, &self.test_images, &self.test_labels)
        {
            return DataSource::Idx {
                train_images: ti.clone(),
                train_labels: tl.clone(),
                test_images: vi.clone(),
                test_labels: vl.clone(),
                train_limit: self.train_limit,
                test_limit: self.test_limit,
            };
        }
        DataSource::Synthetic {
            spec: self.synth_spec(seed),
            test_per_class: self.test_per_class,
        }
    }

    fn synth_spec(&self, seed: u64) -> SynthSpec {
        SynthSpec {
            k: self.k,
            per_class: self.per_class,
            d: self.dim,
            separation: self.separation,
            seed: self.data_seed.unwrap_or(seed),
        }
    }

    fn is_synthetic(&self) -> bool {
        self.mnist_dir.is_none() && self.train_images.is_none()
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Epochs per LGD run [default: 60 synthetic, 100 IDX].
    #[arg(long)]
    epochs: Option<usize>,
    /// Hidden widths [default: 64,64 synthetic, 100,100 IDX].
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value = "cce")]
    loss: LossArg,
    /// Exponent of the Lq loss.
    #[arg(long, default_value_t = 0.7)]
    q: f64,
    #[arg(long)]
    mixup: bool,
    #[arg(long, default_value_t = 8.0)]
    mixup_alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 128)]
    batch: usize,
    #[arg(long, default_value_t = 0.0)]
    dropout: f64,
}

impl ModelArgs {
    fn loss(&self) -> LossSpec {
        match self.loss {
            LossArg::Cce => LossSpec::Cce,
            LossArg::Mae => LossSpec::Mae,
            LossArg::Lq => LossSpec::Lq { q: self.q },
        }
    }

    fn hyper(&self) -> TrainHyper {
        TrainHyper {
            learning_rate: self.lr,
            batch_size: self.batch,
            dropout_rate: self.dropout,
        }
    }
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    eta: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 9.0)]
    delta: f64,
    #[arg(long, value_enum, default_value = "sym")]
    noise: NoiseArg,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PolluteArgs {
    /// IDX label file to corrupt.
    #[arg(long)]
    labels: PathBuf,
    /// Class count; defaults to the largest label plus one.
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Experiment configuration as JSON; replaces the data, noise and
    /// training flags. --strict and --out still apply.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    #[arg(long, default_value_t = 9.0)]
    delta: f64,
    /// Outer iterations of train-relabel.
    #[arg(long, default_value_t = 3)]
    relabel_iters: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Never read ground-truth labels; held-out accuracies are omitted.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct ScaleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 2000)]
    n_large: usize,
    #[arg(long, default_value_t = 1000)]
    n_small: usize,
    #[arg(long, default_value_t = 4000)]
    n_chaos: usize,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, value_delimiter = ',', default_value = "100,100")]
    hidden: Vec<usize>,
    #[arg(long, value_enum, default_value = "cce")]
    loss: LossArg,
    #[arg(long, default_value_t = 0.7)]
    q: f64,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 128)]
    batch: usize,
    #[arg(long, default_value_t = 5)]
    probes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

fn bounds(args: &BoundsArgs) -> anyhow::Result<()> {
    let query = BoundsQuery {
        k: args.k,
        eta: args.eta,
        beta: args.beta,
        delta: args.delta,
    };
    query.validate()?;
    let kind = match args.noise {
        NoiseArg::Sym => NoiseKind::Symmetric,
        NoiseArg::Asym => NoiseKind::Asymmetric,
    };
    let report = theory::check_config(&query, kind);
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!();
    print!("{}", report.table());
    Ok(())
}

fn to_bytes(ds: &Dataset) -> Vec<u8> {
    ds.features().iter().map(|&x| (x * 255.0).round() as u8).collect()
}

fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    let spec = args.data.synth_spec(args.seed);
    let train = data::synth_gaussian(&spec)?;
    let test = data::synth_gaussian_test(&spec, args.data.test_per_class)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    for (name, ds) in [("train", &train), ("t10k", &test)] {
        let images = args.out.join(format!("{name}-images-idx3-ubyte"));
        data::write_idx_images(&images, &to_bytes(ds), ds.n(), 1, ds.d())?;
        data::write_idx_labels(&args.out.join(format!("{name}-labels-idx1-ubyte")), ds.labels())?;
    }
    println!(
        "wrote {} train and {} test samples ({} classes, {} features) to {}",
        train.n(),
        test.n(),
        spec.k,
        spec.d,
        args.out.display()
    );
    Ok(())
}

fn pollute(args: &PolluteArgs) -> anyhow::Result<()> {
    let raw = data::read_idx_labels(&args.labels)?;
    let labels: Vec<usize> = raw.iter().map(|&y| y as usize).collect();
    let k = args
        .k
        .unwrap_or_else(|| labels.iter().copied().max().unwrap_or(0).max(1) + 1);
    let spec = args
        .noise
        .spec(k)?
        .ok_or_else(|| Error::Config("pollute needs --eta".into()))?;
    let clean = Dataset::new(Array2::zeros((labels.len(), 0)), labels, k)?;
    let noisy = data::inject_noise(&clean, &spec, args.seed)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let path = args.out.join("noisy-labels-idx1-ubyte");
    data::write_idx_labels(&path, noisy.labels())?;
    let agreement = noisy.oracle_agreement().unwrap_or(f64::NAN);
    println!(
        "wrote {} labels to {}; {:.4} still correct",
        noisy.n(),
        path.display(),
        agreement
    );
    Ok(())
}

fn experiment_config(args: &TrainArgs, relabel: bool, k: usize) -> anyhow::Result<ExperimentConfig> {
    let synthetic = args.data.is_synthetic();
    let inner = LgdConfig {
        beta: args.beta,
        epochs: args.model.epochs.unwrap_or(if synthetic { 60 } else { 100 }),
        hidden: args
            .model
            .hidden
            .clone()
            .unwrap_or_else(|| if synthetic { vec![64, 64] } else { vec![100, 100] }),
        loss: args.model.loss(),
        mixup: MixupSpec {
            enabled: args.model.mixup,
            alpha: args.model.mixup_alpha,
        },
        hyper: args.model.hyper(),
        delta: args.delta,
        ..LgdConfig::default()
    };
    let training = if relabel {
        Training::Relabel(RelabelConfig {
            outer_iters: args.relabel_iters,
            inner,
        })
    } else {
        Training::Lgd(inner)
    };
    Ok(ExperimentConfig {
        data: args.data.source(args.seed),
        noise: args.noise.spec(k)?,
        training,
        repeats: args.repeats,
        seed: args.seed,
        strict: args.strict,
        out: args.out.clone(),
    })
}

fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(cfg)
}

fn train(args: &TrainArgs, relabel: bool) -> anyhow::Result<()> {
    let (cfg, train, test) = match &args.config {
        Some(path) => {
            let mut cfg = load_config(path)?;
            cfg.strict |= args.strict;
            if args.out.is_some() {
                cfg.out.clone_from(&args.out);
            }
            let (train, test) = cfg.data.load()?;
            (cfg, train, test)
        }
        None => {
            let (train, test) = args.data.source(args.seed).load()?;
            (experiment_config(args, relabel, train.k())?, train, test)
        }
    };
    let output = harness::run_noise_experiment_on(&cfg, &train, &test)?;
    report(&output);
    if let Some(dir) = &cfg.out {
        let files = harness::emit_results(&output, dir, args.format.into())?;
        println!("wrote {} files to {}", files.len(), dir.display());
    }
    Ok(())
}

fn report(output: &ExperimentOutput) {
    let s = &output.summary;
    for r in &s.repeats {
        let acc = r
            .selected_test_acc
            .map_or_else(|| "-".to_string(), |a| format!("{a:.4}"));
        println!(
            "repeat {}: peak epoch {} (iteration {}), LoR {:.4}, test acc {}",
            r.repeat, r.peak_epoch, r.model_iteration, r.peak_lor, acc
        );
    }
    if let (Some(m), Some(sd)) = (s.mean_test_acc, s.std_test_acc) {
        println!("mean test acc {m:.4} (std {sd:.4})");
    }
}

fn scale_exp(args: &ScaleArgs) -> anyhow::Result<()> {
    let (train, _) = args.data.source(args.seed).load()?;
    let loss = match args.loss {
        LossArg::Cce => LossSpec::Cce,
        LossArg::Mae => LossSpec::Mae,
        LossArg::Lq => LossSpec::Lq { q: args.q },
    };
    let spec = ScaleExpSpec {
        n_large: args.n_large,
        n_small: args.n_small,
        n_chaos: args.n_chaos,
        epochs: args.epochs,
        hidden: args.hidden.clone(),
        loss,
        hyper: TrainHyper {
            learning_rate: args.lr,
            batch_size: args.batch,
            dropout_rate: 0.0,
        },
        probes: args.probes,
        seed: args.seed,
    };
    let report = harness::run_scale_experiment(&train, &spec)?;
    println!("epoch  large  small  chaos");
    for a in &report.accuracy {
        println!("{:5}  {:.3}  {:.3}  {:.3}", a.epoch, a.large, a.small, a.chaos);
    }
    println!(
        "first-epoch gradient cosine with total: large {:.3}, small {:.3}, chaos {:.3}",
        report.mean_cos_large, report.mean_cos_small, report.mean_cos_chaos
    );
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        if let FormatArg::Csv = args.format {
            let path = dir.join("scale.csv");
            let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            report
                .write_csv(std::io::BufWriter::new(file))
                .map_err(|e| Error::io(&path, e))?;
        }
        // probes only fit the JSON report, so it is written either way
        let path = dir.join("scale.json");
        let text = serde_json::to_string_pretty(&report)?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        println!("wrote results to {}", dir.display());
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::Infeasible(_)) => 2,
        Some(Error::Io { .. } | Error::Format { .. } | Error::Json { .. }) => 3,
        Some(Error::Degenerate { .. }) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap reports usage errors with 2, which is reserved for infeasible configs
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Bounds(a) => bounds(a),
        Command::Synth(a) => synth(a),
        Command::Pollute(a) => pollute(a),
        Command::TrainLgd(a) => train(a, false),
        Command::TrainRelabel(a) => train(a, true),
        Command::ScaleExp(a) => scale_exp(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(Error::Infeasible(report)) = e.downcast_ref::<Error>() {
                eprint!("{}", report.table());
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
