//! `exprule`: binarize data, train rule classifiers, cross-validate, sweep
//! and export depth-one models.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use exprule::data::{save_dataset, stratified_split, Dataset};
use exprule::depth_one::{
    export_lp, ilp_to_qubo, qubo_anneal, subsample_rows, AnnealConfig, DepthOneBackend, DepthOneProblem,
    Penalties, Qubo, QuboMode, DEFAULT_ENUMERATION_CAP, MAX_MODEL_ROWS,
};
use exprule::harness::{self, binarize_csv, to_result_json, Classifier, DataSource, RunConfig};
use exprule::formula::NodeJson;
use exprule::local::SolverConfig;
use exprule::nonlocal::NonLocalConfig;
use exprule::timing::Stopwatch;
use exprule::{Error, MetricKind, OperatorKind};
use serde_json::json;

#[derive(Parser)]
#[command(name = "exprule", version, about = "Interpretable Boolean rule classifiers")]
struct Cli {
    /// Master seed (overrides the seed in a config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parallel worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Score to optimize and report.
    #[arg(long, global = true, value_parser = parse_metric)]
    metric: Option<MetricKind>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a CSV file to a binary feature matrix and its JSON sidecar.
    Binarize {
        #[arg(long)]
        input: PathBuf,
        /// Label column.
        #[arg(long)]
        label: String,
        /// Value of the label column that marks the positive class.
        #[arg(long)]
        positive: String,
        #[arg(long, default_value_t = 10)]
        num_bins: usize,
        /// Matrix file; the sidecar gets the same name with a .json extension.
        #[arg(long)]
        output: PathBuf,
    },
    /// Train one classifier and report train/test scores.
    Train(TrainArgs),
    /// Run a parameter sweep over the inner splits of a config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output prefix; writes PREFIX.csv and PREFIX.json.
        #[arg(long)]
        output: PathBuf,
    },
    /// Cross-validate the classifiers of a config.
    Crossval {
        #[arg(long)]
        config: PathBuf,
        /// JSON results file (stdout when omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the depth-one ILP of a dataset as an LP file.
    ExportIlp {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        output: PathBuf,
    },
    /// Build the depth-one QUBO of a dataset, or anneal a QUBO file.
    Qubo {
        /// Binarized matrix (with sidecar) or CSV file to build the model from.
        #[arg(long, requires_all = ["operator", "max_literals"])]
        data: Option<PathBuf>,
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        positive: Option<String>,
        #[arg(long, default_value_t = 10)]
        num_bins: usize,
        #[arg(long, value_parser = parse_operator)]
        operator: Option<OperatorKind>,
        #[arg(long)]
        max_literals: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[arg(long, default_value_t = MAX_MODEL_ROWS)]
        max_rows: usize,
        /// Existing coordinate file to anneal instead of building one.
        #[arg(long, conflicts_with = "data")]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::WithEta)]
        mode: ModeArg,
        /// Coordinate file to write.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Anneal and print the best read.
        #[arg(long)]
        anneal: bool,
        #[arg(long, default_value_t = 100)]
        reads: usize,
        #[arg(long, default_value_t = 2000)]
        sweeps: usize,
        /// Stop annealing after this many seconds.
        #[arg(long)]
        timeout: Option<f64>,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Binarized matrix (with sidecar) or CSV file.
    #[arg(long)]
    data: PathBuf,
    /// Label column (CSV input).
    #[arg(long)]
    label: Option<String>,
    /// Positive label (CSV input).
    #[arg(long)]
    positive: Option<String>,
    #[arg(long, default_value_t = 10)]
    num_bins: usize,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset, Error> {
        let source = DataSource {
            path: self.data.clone(),
            label: self.label.clone(),
            positive_label: self.positive.clone(),
            num_bins: self.num_bins,
        };
        let data = source.load()?;
        data.require_both_classes()?;
        Ok(data)
    }
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_parser = parse_operator)]
    operator: OperatorKind,
    #[arg(long)]
    max_literals: usize,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    /// Rows kept in the model (stratified subsample above this).
    #[arg(long, default_value_t = MAX_MODEL_ROWS)]
    max_rows: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    MostFrequent,
    SingleFeature,
    DepthOne,
    Local,
    Nonlocal,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum BackendArg {
    Oracle,
    Qubo,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    WithEta,
    WithoutEta,
}

impl From<ModeArg> for QuboMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::WithEta => QuboMode::WithEta,
            ModeArg::WithoutEta => QuboMode::WithoutEta,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum)]
    classifier: ClassifierArg,
    /// Operator of a depth-one rule.
    #[arg(long, value_parser = parse_operator)]
    operator: Option<OperatorKind>,
    /// Literal cap of a depth-one rule.
    #[arg(long)]
    max_literals: Option<usize>,
    /// Complexity cap of an annealed rule.
    #[arg(long)]
    max_complexity: Option<usize>,
    /// Complexity penalty per node (per literal for depth-one rules).
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    starts: Option<usize>,
    /// Depth-one solver.
    #[arg(long, value_enum, default_value_t = BackendArg::Oracle)]
    backend: BackendArg,
    #[arg(long, value_enum, default_value_t = ModeArg::WithEta)]
    mode: ModeArg,
    /// Candidate cap of the exhaustive depth-one solver.
    #[arg(long)]
    cap: Option<u64>,
    /// Stratified test fraction; 0 trains on every row.
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Rule JSON (stdout when omitted).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Metrics JSON.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

fn parse_metric(s: &str) -> Result<MetricKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_operator(s: &str) -> Result<OperatorKind, String> {
    OperatorKind::from_name(s).ok_or_else(|| format!("unknown operator `{s}` (And, Or, AtLeast, AtMost, Choose)"))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::EnumerationCap { .. } | Error::NoFeasibleSolution(_) => 4,
        Error::Config(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        std::env::set_var("RAYON_NUM_THREADS", w.to_string());
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => Ok(fs::write(p, text)?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Binarize {
            input,
            label,
            positive,
            num_bins,
            output,
        } => {
            let (data, descriptor) = binarize_csv(input, label, positive, *num_bins)?;
            save_dataset(output, &data, &descriptor)?;
            for w in &descriptor.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("{} rows, {} features", data.rows(), data.cols());
            Ok(())
        }
        Command::Train(args) => train(cli, args),
        Command::Sweep { config, output } => {
            let config = load_config(cli, config)?;
            let data = config.data.load()?;
            let report = harness::sweep(&data, &config)?;
            let mut csv = Vec::new();
            report.write_csv(&mut csv)?;
            fs::write(output.with_extension("csv"), csv)?;
            fs::write(output.with_extension("json"), to_result_json(&report)?)?;
            eprintln!("{} sweep rows", report.rows.len());
            Ok(())
        }
        Command::Crossval { config, output } => {
            let config = load_config(cli, config)?;
            let data = config.data.load()?;
            let watch = Stopwatch::start();
            let report = harness::crossval(&data, &config)?;
            write_or_print(output.as_deref(), &to_result_json(&report)?)?;
            for s in &report.summary {
                eprintln!(
                    "{:<18} train {:.4} ± {:.4}  test {:.4} ± {:.4}  complexity {:.2}",
                    s.classifier, s.train_mean, s.train_std, s.test_mean, s.test_std, s.complexity_mean
                );
            }
            eprintln!("{:.1} s", watch.seconds());
            Ok(())
        }
        Command::ExportIlp { model, output } => {
            let data = model.data.load()?;
            let seed = cli.seed.unwrap_or(0);
            let (x, y) = subsample_rows(&data.x, &data.y, model.max_rows, seed);
            let ilp = problem(&x, &y, model, cli)?.build_ilp()?;
            fs::write(output, export_lp(&ilp))?;
            eprintln!("{} variables, {} constraints", ilp.num_vars(), ilp.constraints.len());
            Ok(())
        }
        Command::Qubo {
            data,
            label,
            positive,
            num_bins,
            operator,
            max_literals,
            lambda,
            max_rows,
            input,
            mode,
            output,
            anneal,
            reads,
            sweeps,
            timeout,
        } => {
            let config = AnnealConfig {
                num_reads: *reads,
                num_sweeps: *sweeps,
                seed: cli.seed.unwrap_or(0),
                timeout: timeout.map(Duration::from_secs_f64),
            };
            let model = match (data, operator, max_literals) {
                (Some(data), Some(operator), Some(max_literals)) => Some(ModelArgs {
                    data: DataArgs {
                        data: data.clone(),
                        label: label.clone(),
                        positive: positive.clone(),
                        num_bins: *num_bins,
                    },
                    operator: *operator,
                    max_literals: *max_literals,
                    lambda: *lambda,
                    max_rows: *max_rows,
                }),
                _ => None,
            };
            match (&model, input) {
                (_, Some(path)) => {
                    let q = Qubo::from_coordinate_text(&fs::read_to_string(path)?)?;
                    if let Some(out) = output {
                        fs::write(out, q.to_coordinate_text())?;
                    }
                    if *anneal {
                        let outcome = qubo_anneal(&q, &config);
                        let best = outcome.best().ok_or_else(|| Error::NoFeasibleSolution("no reads".into()))?;
                        let bits: String = best.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
                        println!("{}", json!({ "energy": best.energy, "bits": bits, "timed_out": outcome.timed_out }));
                    }
                    Ok(())
                }
                (Some(model), None) => {
                    let data = model.data.load()?;
                    let (x, y) = subsample_rows(&data.x, &data.y, model.max_rows, config.seed);
                    let p = problem(&x, &y, model, cli)?;
                    let q = ilp_to_qubo(&p.build_ilp()?, (*mode).into(), &Penalties::default())?;
                    if let Some(out) = output {
                        fs::write(out, q.qubo.to_coordinate_text())?;
                    }
                    eprintln!("{} binary variables", q.num_vars());
                    if *anneal {
                        let s = p.solve_qubo((*mode).into(), &Penalties::default(), &config)?;
                        let rule = s.to_formula();
                        println!(
                            "{}",
                            json!({
                                "rule": rule.to_text(&data.names()),
                                "objective": s.objective,
                                "weighted_errors": s.weighted_errors,
                            })
                        );
                    }
                    Ok(())
                }
                (None, None) => Err(Error::Config("qubo needs --data (with --operator and --max-literals) or --input".into())),
            }
        }
    }
}

fn load_config(cli: &Cli, path: &Path) -> Result<RunConfig, Error> {
    let mut config = RunConfig::from_file(path)?;
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(w) = cli.workers {
        config.workers = Some(w);
    }
    if let Some(m) = cli.metric {
        config.metric = m;
    }
    Ok(config)
}

fn problem<'a>(
    x: &'a exprule::BitMatrix,
    y: &'a exprule::BitVector,
    model: &ModelArgs,
    cli: &Cli,
) -> Result<DepthOneProblem<'a>, Error> {
    Ok(DepthOneProblem {
        x,
        y,
        operator: model.operator,
        max_literals: model.max_literals,
        min_literals: 0,
        lambda: model.lambda * y.len() as f64,
        weights: harness::error_weights(y, cli.metric.unwrap_or_default()),
    })
}

fn train(cli: &Cli, args: &TrainArgs) -> Result<(), Error> {
    let metric = cli.metric.unwrap_or_default();
    let seed = cli.seed.unwrap_or(0);
    let solver = || {
        let d = SolverConfig::default();
        SolverConfig {
            num_starts: args.starts.unwrap_or(d.num_starts),
            num_iterations: args.iterations.unwrap_or(d.num_iterations),
            max_complexity: args.max_complexity,
            lambda: args.lambda,
            ..d
        }
    };
    let classifier = match args.classifier {
        ClassifierArg::MostFrequent => Classifier::MostFrequent,
        ClassifierArg::SingleFeature => Classifier::SingleFeature,
        ClassifierArg::DepthOne => {
            let (Some(operator), Some(max_literals)) = (args.operator, args.max_literals) else {
                return Err(Error::Config("depth-one needs --operator and --max-literals".into()));
            };
            let backend = match args.backend {
                BackendArg::Oracle => DepthOneBackend::Oracle {
                    cap: args.cap.map_or(DEFAULT_ENUMERATION_CAP, u128::from),
                },
                BackendArg::Qubo => DepthOneBackend::Qubo {
                    mode: args.mode.into(),
                    penalties: Penalties::default(),
                    anneal: AnnealConfig::default(),
                },
            };
            Classifier::DepthOne {
                operator,
                max_literals,
                lambda: args.lambda,
                backend,
            }
        }
        ClassifierArg::Local => Classifier::Local { solver: solver() },
        ClassifierArg::Nonlocal => Classifier::NonLocal {
            solver: solver(),
            nonlocal: NonLocalConfig::default(),
        },
    };
    if !matches!(args.classifier, ClassifierArg::DepthOne) && (args.operator.is_some() || args.max_literals.is_some()) {
        return Err(Error::Config("--operator and --max-literals apply to depth-one only".into()));
    }
    if matches!(args.classifier, ClassifierArg::MostFrequent | ClassifierArg::SingleFeature | ClassifierArg::DepthOne)
        && (args.max_complexity.is_some() || args.iterations.is_some() || args.starts.is_some())
    {
        return Err(Error::Config("--max-complexity, --iterations and --starts apply to local and nonlocal only".into()));
    }

    let data = args.data.load()?;
    let (train_idx, test_idx) = if args.test_fraction > 0.0 {
        stratified_split(&data.y, args.test_fraction, seed)?
    } else {
        ((0..data.rows()).collect(), Vec::new())
    };
    let train = data.subset(&train_idx);
    let watch = Stopwatch::start();
    let rule = classifier.train(&train.x, &train.y, metric, seed)?;
    let seconds = watch.seconds();
    let (train_score, complexity) = harness::evaluate(&rule, &train.x, &train.y, metric)?;
    let test_score = if test_idx.is_empty() {
        None
    } else {
        let test = data.subset(&test_idx);
        Some(harness::evaluate(&rule, &test.x, &test.y, metric)?.0)
    };
    let names = data.names();
    let rule_json = json!({
        "schema": harness::SCHEMA,
        "classifier": classifier.name(),
        "rule": rule.to_text(&names),
        "formula": NodeJson::from_node(rule.root(), &names),
    });
    let metrics = json!({
        "schema": harness::SCHEMA,
        "classifier": classifier.name(),
        "metric": metric,
        "seed": seed,
        "train_rows": train_idx.len(),
        "test_rows": test_idx.len(),
        "train_score": train_score,
        "test_score": test_score,
        "complexity": complexity,
        "depth": rule.depth(),
    });
    write_or_print(args.output.as_deref(), &to_result_json(&rule_json)?)?;
    if let Some(p) = &args.metrics {
        fs::write(p, to_result_json(&metrics)?)?;
    }
    eprintln!(
        "{}  train {train_score:.4}{}  complexity {complexity}  {seconds:.2} s",
        rule.to_text(&names),
        test_score.map_or(String::new(), |t| format!("  test {t:.4}")),
    );
    Ok(())
}
