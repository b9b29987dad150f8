mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gse_core::learner::Method;
use gse_core::toolkit::{AutoOr, KernelKind, MatrixFormat, RunConfig};
use gse_core::{Error, ErrorClass};

/// Graph Space Embedding kernels, SVM benchmarking and local explanations.
#[derive(Debug, Parser)]
#[command(name = "gse", version)]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random stage.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Feature CSV: sample_id,label,<features...>
    #[arg(long)]
    features: Option<PathBuf>,
    /// Interaction TSV: protein1 protein2 combined_score
    #[arg(long)]
    interactions: Option<PathBuf>,
    /// Use an all-ones network instead of an interaction file.
    #[arg(long)]
    complete_network: bool,
}

#[derive(Debug, Args)]
struct ProtocolArgs {
    /// Number of stratified shuffle splits.
    #[arg(long)]
    splits: Option<usize>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Features kept by F-statistic selection.
    #[arg(long)]
    k_features: Option<usize>,
    /// SVM box constraint.
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Gse,
    Rbf,
    RwFinite,
    RwExp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Binary,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic feature CSV, interaction TSV and ground truth.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        n_features: Option<usize>,
        #[arg(long)]
        n_samples: Option<usize>,
        #[arg(long)]
        edge_density: Option<f64>,
        #[arg(long)]
        n_signal_edges: Option<usize>,
        #[arg(long)]
        noise_std: Option<f64>,
    },
    /// Compute a Gram matrix over all samples.
    Kernel {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// GSE rate in k = exp(-nu * d), or "auto". Under the sigma^2/gamma
        /// convention this is the reciprocal of that parameter.
        #[arg(long)]
        nu: Option<AutoOr>,
        /// RBF bandwidth, or "auto".
        #[arg(long)]
        sigma: Option<AutoOr>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Find the nu maximizing the GSE Gram-matrix variance.
    TuneNu {
        #[command(flatten)]
        data: DataArgs,
        /// Result JSON; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validated AUC and timings for each kernel method.
    Benchmark {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long)]
        out: PathBuf,
        /// Per-split timing CSV.
        #[arg(long)]
        timings: Option<PathBuf>,
        /// Comma-separated subset of gse, gse-star, rbf, rw-finite, rw-exp.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
    },
    /// GSE AUC at multiples of the tuned nu.
    NuSweep {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        protocol: ProtocolArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        multipliers: Option<Vec<f64>>,
    },
    /// Even Descent around one sample and a surrogate tree over its edges.
    Explain {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        /// Trajectory CSV for plotting.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        sample_id: Option<String>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        k_features: Option<usize>,
        /// SVM box constraint of the explained model.
        #[arg(long)]
        c: Option<f64>,
        /// Surrogate complexity budget as a fraction of the mean loss.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Surrogate max_depth grid.
        #[arg(long, value_delimiter = ',')]
        max_depths: Option<Vec<usize>>,
        /// Surrogate min_samples_split grid.
        #[arg(long, value_delimiter = ',')]
        min_samples_splits: Option<Vec<usize>>,
        /// Complexity weight on tree depth.
        #[arg(long)]
        w_d: Option<f64>,
        /// Complexity weight on 1 / min_samples_split.
        #[arg(long)]
        w_s: Option<f64>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Core(e) => match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Data => 2,
                ErrorClass::Numerical => 3,
            },
        }
    }

    fn class(&self) -> &'static str {
        match self.code() {
            1 => "usage",
            2 => "data",
            _ => "numerical",
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

fn report_failure(f: &Failure) -> ExitCode {
    let line = serde_json::json!({
        "error": { "class": f.class(), "code": f.code(), "message": f.message() }
    });
    eprintln!("{line}");
    ExitCode::from(f.code())
}

fn apply_data(cfg: &mut RunConfig, data: DataArgs) {
    if data.features.is_some() {
        cfg.data.features = data.features;
    }
    if data.interactions.is_some() {
        cfg.data.interactions = data.interactions;
    }
    if data.complete_network {
        cfg.data.complete_network = true;
    }
}

fn apply_protocol(cfg: &mut RunConfig, p: ProtocolArgs) {
    if let Some(n) = p.splits {
        cfg.cv.plan.n_splits = n;
    }
    if let Some(f) = p.test_fraction {
        cfg.cv.plan.test_fraction = f;
    }
    if let Some(k) = p.k_features {
        cfg.cv.k_features = k;
    }
    if let Some(c) = p.c {
        cfg.cv.svm.c = c;
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }

    let action = match cli.command {
        Command::Synth { out_dir, n_features, n_samples, edge_density, n_signal_edges, noise_std } => {
            let s = &mut cfg.synth;
            s.n_features = n_features.unwrap_or(s.n_features);
            s.n_samples = n_samples.unwrap_or(s.n_samples);
            s.edge_density = edge_density.unwrap_or(s.edge_density);
            s.n_signal_edges = n_signal_edges.unwrap_or(s.n_signal_edges);
            s.noise_std = noise_std.unwrap_or(s.noise_std);
            commands::Action::Synth { out_dir }
        }
        Command::Kernel { data, out, kind, nu, sigma, format } => {
            apply_data(&mut cfg, data);
            if let Some(k) = kind {
                cfg.kernel.kind = match k {
                    KindArg::Gse => KernelKind::Gse,
                    KindArg::Rbf => KernelKind::Rbf,
                    KindArg::RwFinite => KernelKind::RwFinite,
                    KindArg::RwExp => KernelKind::RwExp,
                };
            }
            if let Some(nu) = nu {
                cfg.kernel.nu = nu;
            }
            if let Some(sigma) = sigma {
                cfg.kernel.sigma = sigma;
            }
            if let Some(f) = format {
                cfg.kernel.format = match f {
                    FormatArg::Csv => MatrixFormat::Csv,
                    FormatArg::Binary => MatrixFormat::Binary,
                };
            }
            commands::Action::Kernel { out }
        }
        Command::TuneNu { data, out } => {
            apply_data(&mut cfg, data);
            commands::Action::TuneNu { out }
        }
        Command::Benchmark { data, protocol, out, timings, methods } => {
            apply_data(&mut cfg, data);
            apply_protocol(&mut cfg, protocol);
            if let Some(m) = methods {
                cfg.benchmark.methods = m;
            }
            commands::Action::Benchmark { out, timings }
        }
        Command::NuSweep { data, protocol, out, csv, multipliers } => {
            apply_data(&mut cfg, data);
            apply_protocol(&mut cfg, protocol);
            if let Some(m) = multipliers {
                cfg.sweep.multipliers = m;
            }
            commands::Action::NuSweep { out, csv }
        }
        Command::Explain {
            data,
            out,
            csv,
            sample_id,
            tau,
            k_features,
            c,
            epsilon,
            max_depths,
            min_samples_splits,
            w_d,
            w_s,
        } => {
            apply_data(&mut cfg, data);
            if sample_id.is_some() {
                cfg.explain.sample_id = sample_id;
            }
            if let Some(t) = tau {
                cfg.sampler.tau = t;
            }
            if let Some(k) = k_features {
                cfg.cv.k_features = k;
            }
            if let Some(c) = c {
                cfg.cv.svm.c = c;
            }
            let sur = &mut cfg.surrogate;
            sur.epsilon = epsilon.unwrap_or(sur.epsilon);
            sur.max_depth = max_depths.unwrap_or(std::mem::take(&mut sur.max_depth));
            sur.min_samples_split = min_samples_splits.unwrap_or(std::mem::take(&mut sur.min_samples_split));
            sur.w_d = w_d.unwrap_or(sur.w_d);
            sur.w_s = w_s.unwrap_or(sur.w_s);
            commands::Action::Explain { out, csv }
        }
    };

    let cfg = cfg.resolve()?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot start {n} threads: {e}")))?;
    }
    commands::execute(action, &cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                // --help and --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let first = e.to_string().lines().next().unwrap_or("invalid arguments").to_string();
            return report_failure(&Failure::Usage(first));
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report_failure(&f),
    }
}
