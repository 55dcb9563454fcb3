//! `lrcalc`: likelihood ratios for the rare type match problem.
//!
//! Exit codes: 0 success, 2 invalid input, 3 prior contradicts the data,
//! 4 oracle disagreement.

mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use lrcalc_core::beta_binomial::{lr_full, lr_joint, lr_plugin, lr_two_step};
use lrcalc_core::dirichlet_multinomial::{lr_plugin_dirichlet, lr_series};
use lrcalc_core::kpriors::parse_count;
use lrcalc_core::oracles::{
    beta_lr_quadrature, dirichlet_posterior_mean_exact, dirichlet_posterior_mean_mc, EnumerationMode,
};
use lrcalc_core::sweep::{builtin_figure, sweep_to_csv, Figure};
use lrcalc_core::{
    BetaParams, BinomialData, DirichletModel, ExactRational, Field, KPrior, LrError, LrResult, OracleConfig,
    RareMatchData, SweepSpec,
};

use report::{Format, Report};

#[derive(Parser)]
#[command(name = "lrcalc", version, about = "Likelihood ratios for the rare type match problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Beta-binomial model: full-Bayes LR in closed form.
    Beta(BetaArgs),
    /// Dirichlet-multinomial model with a prior on the number of types.
    Dirichlet(DirichletArgs),
    /// Plug-in LR only.
    Plugin {
        #[command(subcommand)]
        model: PluginModel,
    },
    /// Compare a model value against an independent oracle.
    Oracle {
        #[command(subcommand)]
        model: OracleModel,
    },
    /// Run a parameter sweep and write CSV.
    Sweep(SweepArgs),
    /// Write the CSVs for every builtin figure into a directory.
    Figures(FiguresArgs),
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Args)]
struct BetaData {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    /// Database size N.
    #[arg(long)]
    db_size: u64,
    /// Database copies of the suspect's profile.
    #[arg(long)]
    count: u64,
}

impl BetaData {
    fn build(&self) -> Result<(BetaParams<f64>, BinomialData), Failure> {
        Ok((BetaParams::new(self.alpha, self.beta)?, BinomialData::new(self.db_size, self.count)?))
    }
}

#[derive(Args)]
struct BetaArgs {
    #[command(flatten)]
    data: BetaData,
    /// Also report the plug-in LR and the log10 gap.
    #[arg(long)]
    plugin: bool,
    /// Also report the joint-posterior form.
    #[arg(long)]
    joint: bool,
    /// Also report the two-step update form.
    #[arg(long)]
    two_step: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct DirichletData {
    /// Prior on K, e.g. `poisson:lambda=1000`, `negbinomial:r=10,mean=40,m=20^10`.
    #[arg(long)]
    k_prior: String,
    #[arg(long)]
    db_size: Option<u64>,
    /// Number of distinct types in the database.
    #[arg(long)]
    k_obs: Option<u64>,
    /// File of per-type database counts (comma or whitespace separated).
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Number of possible profiles; defaults to the prior's bound.
    #[arg(long, value_parser = parse_m)]
    m: Option<u64>,
}

fn parse_m(text: &str) -> Result<u64, String> {
    parse_count(text).ok_or_else(|| format!("'{text}' is not a count"))
}

impl DirichletData {
    fn prior(&self) -> Result<KPrior<f64>, Failure> {
        Ok(KPrior::parse_spec(&self.k_prior)?)
    }

    fn data(&self) -> Result<RareMatchData, Failure> {
        match &self.counts {
            Some(path) => {
                let counts = read_counts(path)?;
                let data = RareMatchData::from_counts(counts)?;
                let mismatch = self.db_size.is_some_and(|n| n != data.n_db())
                    || self.k_obs.is_some_and(|k| k != data.k_obs());
                if mismatch {
                    return Err(Failure::Usage(format!(
                        "--counts gives N={} and k-obs={}, which contradicts --db-size/--k-obs",
                        data.n_db(),
                        data.k_obs()
                    )));
                }
                Ok(data)
            }
            None => match (self.db_size, self.k_obs) {
                (Some(n), Some(k)) => Ok(RareMatchData::new(n, k)?),
                _ => Err(Failure::Usage("--db-size and --k-obs are required unless --counts is given".into())),
            },
        }
    }

    fn model(&self) -> Result<(DirichletModel<f64>, RareMatchData), Failure> {
        let prior = self.prior()?;
        let m = self.m.or(prior.support_max());
        Ok((DirichletModel::new(prior, m)?, self.data()?))
    }
}

fn read_counts(path: &Path) -> Result<Vec<u64>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| Failure::Usage(format!("{}: '{t}' is not a count", path.display())))
        })
        .collect()
}

#[derive(Args)]
struct DirichletArgs {
    #[command(flatten)]
    data: DirichletData,
    /// Also report the plug-in LR (k-bar defaults to the prior mean).
    #[arg(long)]
    plugin: bool,
    #[arg(long, requires = "plugin")]
    k_bar: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Subcommand)]
enum PluginModel {
    /// (α + β + N) / (α + b).
    Beta {
        #[command(flatten)]
        data: BetaData,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// k̄ + N for the symmetric Dirichlet(1) model.
    Dirichlet(PluginDirichlet),
}

#[derive(Args)]
#[command(group(ArgGroup::new("kbar_source").required(true).args(["k_bar", "k_prior"])))]
struct PluginDirichlet {
    #[arg(long)]
    k_bar: Option<f64>,
    /// Take k-bar as this prior's mean.
    #[arg(long)]
    k_prior: Option<String>,
    #[arg(long)]
    db_size: u64,
    #[arg(long)]
    k_obs: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OracleMode {
    Exact,
    Mc,
    Quadrature,
}

#[derive(Subcommand)]
enum OracleModel {
    Beta {
        #[command(flatten)]
        data: BetaData,
        #[arg(long, value_enum, default_value_t = OracleMode::Quadrature)]
        mode: OracleMode,
        /// Relative tolerance (default 1e-6).
        #[arg(long)]
        tolerance: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    Dirichlet {
        #[command(flatten)]
        data: DirichletData,
        #[arg(long, value_enum, default_value_t = OracleMode::Exact)]
        mode: OracleMode,
        /// Visit every type assignment instead of the collapsed sum (exact mode).
        #[arg(long)]
        explicit: bool,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        /// Relative tolerance for exact mode (default 1e-6); standard errors for mc (default 3).
        #[arg(long)]
        tolerance: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["spec", "figure"])))]
struct SweepArgs {
    /// JSON sweep specification.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Builtin grid: fig5, fig6 or table3.
    #[arg(long)]
    figure: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FiguresArgs {
    #[arg(long, default_value = "figures")]
    out_dir: PathBuf,
}

enum Failure {
    Model(LrError),
    Usage(String),
    Mismatch,
}

impl From<LrError> for Failure {
    fn from(e: LrError) -> Self {
        Failure::Model(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Model(LrError::EmptySupport { .. }) => 3,
            Failure::Model(_) | Failure::Usage(_) => 2,
            Failure::Mismatch => 4,
        }
    }
}

fn emit(report: &Report, out: &OutputArgs) {
    println!("{}", report.render(out.format));
}

fn add_gap(report: &mut Report, full: &LrResult<f64>, plugin: &LrResult<f64>) {
    report.set_serialized("plugin", plugin);
    report.set("diff_log10", plugin.log10_lr - full.log10_lr);
}

fn cmd_beta(args: &BetaArgs) -> Result<(), Failure> {
    let (prior, data) = args.data.build()?;
    let full = lr_full(&prior, &data);
    let mut report = Report::new();
    report.merge(&full);
    if args.plugin {
        add_gap(&mut report, &full, &lr_plugin(&prior, &data));
    }
    if args.joint {
        report.set_serialized("joint", &lr_joint(&prior, &data));
    }
    if args.two_step {
        report.set_serialized("two_step", &lr_two_step(&prior, &data));
    }
    emit(&report, &args.out);
    Ok(())
}

fn cmd_dirichlet(args: &DirichletArgs) -> Result<(), Failure> {
    let (model, data) = args.data.model()?;
    let mut report = Report::new();
    report.set("k_prior", model.k_prior.to_string());
    let full = lr_series(&model, &data)?;
    report.merge(&full);
    if args.plugin {
        let k_bar = match args.k_bar {
            Some(v) => v,
            None => model.k_prior.mean()?,
        };
        report.set("k_bar", k_bar);
        add_gap(&mut report, &full, &lr_plugin_dirichlet(k_bar, &data, 1.0)?);
    }
    emit(&report, &args.out);
    Ok(())
}

fn cmd_plugin(model: &PluginModel) -> Result<(), Failure> {
    match model {
        PluginModel::Beta { data, out } => {
            let (prior, data) = data.build()?;
            let mut report = Report::new();
            report.merge(&lr_plugin(&prior, &data));
            emit(&report, out);
        }
        PluginModel::Dirichlet(args) => {
            let k_bar = match (&args.k_bar, &args.k_prior) {
                (Some(v), _) => *v,
                (None, Some(spec)) => KPrior::<f64>::parse_spec(spec)?.mean()?,
                (None, None) => unreachable!("clap enforces one source"),
            };
            let data = RareMatchData::new(args.db_size, args.k_obs)?;
            let mut report = Report::new();
            report.set("k_bar", k_bar);
            report.merge(&lr_plugin_dirichlet(k_bar, &data, 1.0)?);
            emit(&report, &args.out);
        }
    }
    Ok(())
}

fn compare(report: &mut Report, oracle_lr: f64, model_lr: f64, tolerance: f64) -> bool {
    let abs = (oracle_lr - model_lr).abs();
    let rel = abs / model_lr.abs();
    report
        .set("oracle_lr", oracle_lr)
        .set("model_lr", model_lr)
        .set("abs_diff", abs)
        .set("rel_diff", rel)
        .set("tolerance", tolerance);
    rel <= tolerance
}

fn cmd_oracle(model: &OracleModel) -> Result<(), Failure> {
    let mut report = Report::new();
    let (pass, out) = match model {
        OracleModel::Beta {
            data,
            mode,
            tolerance,
            out,
        } => {
            if *mode != OracleMode::Quadrature {
                return Err(Failure::Usage("--mode: the beta model is checked by quadrature only".into()));
            }
            let (prior, data) = data.build()?;
            let cfg = OracleConfig::default();
            report.set("mode", "quadrature");
            let oracle = beta_lr_quadrature(&prior, &data, &cfg)?;
            let pass = compare(&mut report, oracle, lr_full(&prior, &data).lr, tolerance.unwrap_or(1e-6));
            (pass, out)
        }
        OracleModel::Dirichlet {
            data,
            mode,
            explicit,
            seed,
            samples,
            tolerance,
            out,
        } => {
            let (model, data) = data.model()?;
            let model_lr = lr_series(&model, &data)?.lr;
            let cfg = OracleConfig {
                rng_seed: *seed,
                mc_samples: *samples,
                enumeration: if *explicit {
                    EnumerationMode::Explicit
                } else {
                    EnumerationMode::Collapsed
                },
                ..OracleConfig::default()
            };
            match mode {
                OracleMode::Exact => {
                    report.set("mode", "exact");
                    let mean: ExactRational = dirichlet_posterior_mean_exact(&model, &data, &cfg)?;
                    let oracle = (ExactRational::from_integer(1.into()) / mean).to_f64_lossy();
                    let pass = compare(&mut report, oracle, model_lr, tolerance.unwrap_or(1e-6));
                    (pass, out)
                }
                OracleMode::Mc => {
                    report.set("mode", "mc").set("seed", *seed).set("samples", *samples);
                    let budget = tolerance.unwrap_or(3.0);
                    match dirichlet_posterior_mean_mc(&model, &data, &cfg) {
                        Ok(est) => {
                            let model_mean = 1.0 / model_lr;
                            let z = (est.estimate - model_mean).abs() / est.std_error;
                            report
                                .set("oracle_lr", 1.0 / est.estimate)
                                .set("model_lr", model_lr)
                                .set("posterior_mean", est.estimate)
                                .set("std_error", est.std_error)
                                .set("effective_sample_size", est.effective_sample_size)
                                .set("std_errors_apart", z)
                                .set("tolerance_std_errors", budget);
                            (z <= budget, out)
                        }
                        Err(e @ LrError::DegenerateWeights { .. }) => {
                            report.set("model_lr", model_lr).set("note", e.to_string());
                            (false, out)
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                OracleMode::Quadrature => {
                    return Err(Failure::Usage(
                        "--mode: the Dirichlet model is checked by exact or mc only".into(),
                    ))
                }
            }
        }
    };
    report.set("verdict", if pass { "PASS" } else { "FAIL" });
    emit(&report, out);
    if pass {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

/// Streams a sweep into `path`, deleting the file if anything fails.
fn write_sweep(spec: &SweepSpec, path: &Path) -> Result<u64, Failure> {
    let result = File::create(path).map_err(LrError::from).and_then(|file| {
        let mut writer = BufWriter::new(file);
        let rows = sweep_to_csv(spec, &mut writer)?;
        writer.flush()?;
        Ok(rows)
    });
    if result.is_err() {
        let _ = std::fs::remove_file(path);
    }
    result.map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let spec = match (&args.spec, &args.figure) {
        (Some(path), _) => SweepSpec::from_path(path)?,
        (None, Some(name)) => builtin_figure(name.parse()?),
        (None, None) => unreachable!("clap enforces one source"),
    };
    let rows = write_sweep(&spec, &args.out)?;
    println!("wrote {rows} rows to {}", args.out.display());
    Ok(())
}

fn cmd_figures(args: &FiguresArgs) -> Result<(), Failure> {
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Failure::Usage(format!("{}: {e}", args.out_dir.display())))?;
    for figure in Figure::ALL {
        let path = args.out_dir.join(format!("{figure}.csv"));
        let rows = write_sweep(&builtin_figure(figure), &path)?;
        println!("wrote {rows} rows to {}", path.display());
    }
    Ok(())
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("LRCALC_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("LRCALC_THREADS must be a positive integer (got '{value}')")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Beta(args) => cmd_beta(args),
        Command::Dirichlet(args) => cmd_dirichlet(args),
        Command::Plugin { model } => cmd_plugin(model),
        Command::Oracle { model } => cmd_oracle(model),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Figures(args) => cmd_figures(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Model(e) => eprintln!("error: {e}"),
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Mismatch => eprintln!("error: oracle and model disagree"),
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
