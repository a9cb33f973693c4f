//! `combu` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error (bad flags, unreadable input file,
//! invalid config), 2 data or domain error, 3 diverged-run fraction above the
//! configured limit.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use combu::datasets::{csv_write, make_classification, split_and_fit, CsvSchema, TargetKind};
use combu::experiment::{
    cross_dataset_ranks, fit_one, run_experiment, DatasetSpec, RunRecord, TaskSpec, DATA_STREAM,
};
use combu::metrics::Ties;
use combu::{
    compile, parse_expr, verify, ActivationScheme, Bounds, ExperimentConfig, ExprAst, Formula,
    LayeredNetwork, ModelSize, Rng, RunReport,
};

#[derive(Parser)]
#[command(
    name = "combu",
    version,
    about = "CombU activations, exact expression compilation and formula benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a formula dataset as train/test CSV files plus meta.json.
    Generate(GenerateArgs),
    /// Train one activation scheme on one dataset.
    Train(TrainArgs),
    /// Compile an s-expression into network JSON.
    Compile(CompileArgs),
    /// Compare a compiled network with the expression it came from.
    Verify(VerifyArgs),
    /// Run an experiment config (or an array of them).
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// gs, ar, ns or bs.
    formula: String,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Bin the target into this many equal-frequency classes.
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// A formula name, or the path of a CSV file (needs --target).
    dataset: String,
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated categorical feature columns of a CSV dataset.
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,
    /// Treat the CSV target as class labels.
    #[arg(long)]
    classify: bool,
    #[arg(long, default_value = "combu")]
    scheme: String,
    #[arg(long, default_value = "large", value_parser = parse_size)]
    size: ModelSize,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long, default_value_t = 5000)]
    n: usize,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct CompileArgs {
    /// File holding one s-expression.
    expr: PathBuf,
    /// JSON object mapping x1, x2, ... to {"lo", "hi", "min_abs"}.
    #[arg(long)]
    bounds: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    network: PathBuf,
    expr: PathBuf,
    #[arg(long)]
    bounds: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest accepted error; above it the exit code is 2.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides `repeats` of every config.
    #[arg(long)]
    repeats: Option<usize>,
    /// Overrides `base_seed` of every config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Diverged(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Diverged(_) => 3,
        }
    }
}

impl From<combu::Error> for Failure {
    fn from(e: combu::Error) -> Self {
        Failure::Data(e.into())
    }
}

type CliResult<T> = Result<T, Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn data(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Data(e.into())
}

fn parse_size(s: &str) -> Result<ModelSize, String> {
    match s {
        "small" => Ok(ModelSize::Small),
        "large" => Ok(ModelSize::Large),
        _ => Err(format!(
            "unknown model size `{s}` (expected small or large)"
        )),
    }
}

fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(usage)
}

fn write_output(path: &Path, contents: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(data)?;
    }
    fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(data)
}

fn to_json(value: &impl Serialize) -> CliResult<Vec<u8>> {
    let mut text = serde_json::to_vec_pretty(value).map_err(data)?;
    text.push(b'\n');
    Ok(text)
}

fn read_bounds(path: &Path, ast: &ExprAst) -> CliResult<Vec<Bounds>> {
    let map: BTreeMap<String, Bounds> = serde_json::from_str(&read_input(path)?)
        .with_context(|| format!("invalid bounds file {}", path.display()))
        .map_err(usage)?;
    let mut inputs = Vec::with_capacity(map.len());
    for i in 1..=map.len().max(ast.num_vars()) {
        let b = map
            .get(&format!("x{i}"))
            .ok_or_else(|| usage(anyhow!("{}: missing bounds for x{i}", path.display())))?;
        inputs.push(*b);
    }
    Ok(inputs)
}

fn read_expr(path: &Path) -> CliResult<ExprAst> {
    let text = read_input(path)?;
    parse_expr(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(data)
}

fn generate(args: GenerateArgs) -> CliResult<()> {
    let formula: Formula = args.formula.parse().map_err(usage)?;
    let ds = formula.generate(args.n, &mut Rng::new(args.seed).child(DATA_STREAM))?;
    let (ds, bin_edges) = match args.bins {
        Some(k) => {
            let (binned, edges) = make_classification(&ds, k)?;
            (binned, Some(edges))
        }
        None => (ds, None),
    };
    let (train, test, pre) =
        split_and_fit(&ds, args.test_fraction, &mut Rng::new(args.seed).child(0))?;
    let name = formula.name();
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))
        .map_err(data)?;
    csv_write(args.out.join(format!("{name}_train.csv")), &train)?;
    csv_write(args.out.join(format!("{name}_test.csv")), &test)?;
    let meta = serde_json::json!({
        "formula": name,
        "seed": args.seed,
        "n": ds.n_rows(),
        "n_train": train.n_rows(),
        "n_test": test.n_rows(),
        "test_fraction": args.test_fraction,
        "features": ds.feature_names(),
        "target": ds.target_name(),
        "task": ds.task(),
        "preprocessor": pre,
        "bin_edges": bin_edges,
    });
    write_output(&args.out.join("meta.json"), &to_json(&meta)?)?;
    println!(
        "wrote {name}_train.csv ({} rows), {name}_test.csv ({} rows) and meta.json to {}",
        train.n_rows(),
        test.n_rows(),
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct TrainOutput {
    record: RunRecord,
    epoch_losses: Vec<f64>,
    preprocessor: combu::datasets::Preprocessor,
    bin_edges: Option<Vec<f64>>,
}

fn train(args: TrainArgs) -> CliResult<()> {
    let dataset = match args.dataset.parse::<Formula>() {
        Ok(formula) => DatasetSpec::Formula { formula, n: args.n },
        Err(_) => {
            let target = args
                .target
                .clone()
                .ok_or_else(|| usage(anyhow!("a CSV dataset needs --target")))?;
            let path = PathBuf::from(&args.dataset);
            if !path.is_file() {
                return Err(usage(anyhow!(
                    "`{}` is neither a formula name nor a readable file",
                    args.dataset
                )));
            }
            let task = if args.classify {
                TargetKind::Classification
            } else {
                TargetKind::Regression
            };
            DatasetSpec::Csv {
                path,
                schema: CsvSchema {
                    target,
                    categorical: args.categorical.clone(),
                    task,
                },
            }
        }
    };
    let scheme: ActivationScheme = args.scheme.parse().map_err(usage)?;
    let mut cfg = ExperimentConfig::new(dataset);
    cfg.schemes = vec![scheme.clone()];
    cfg.model = args.size;
    cfg.repeats = 1;
    cfg.base_seed = args.seed;
    if let Some(epochs) = args.epochs {
        cfg.train.epochs = epochs;
    }
    if let Some(n_bins) = args.bins {
        cfg.task = TaskSpec::Binned { n_bins };
    }
    cfg.validate().map_err(usage)?;
    let (ds, bin_edges) = cfg.load_dataset()?;
    let fitted = fit_one(&cfg, &ds, &scheme, 0)?;
    write_output(&args.out.join("model.json"), &to_json(&fitted.network)?)?;
    let output = TrainOutput {
        record: fitted.record,
        epoch_losses: fitted.epoch_losses,
        preprocessor: fitted.preprocessor,
        bin_edges,
    };
    write_output(&args.out.join("train_report.json"), &to_json(&output)?)?;
    if output.record.diverged {
        return Err(Failure::Diverged(format!(
            "training diverged after {} epochs",
            output.record.epochs_completed
        )));
    }
    for (metric, value) in &output.record.metrics {
        println!("{metric}\t{value}");
    }
    Ok(())
}

fn compile_cmd(args: CompileArgs) -> CliResult<()> {
    let ast = read_expr(&args.expr)?;
    let inputs = read_bounds(&args.bounds, &ast)?;
    let net = compile(&ast, &inputs)?;
    let json = to_json(&net)?;
    match args.out {
        Some(path) => write_output(&path, &json),
        None => {
            print!("{}", String::from_utf8_lossy(&json));
            Ok(())
        }
    }
}

fn verify_cmd(args: VerifyArgs) -> CliResult<()> {
    let net: LayeredNetwork = serde_json::from_str(&read_input(&args.network)?)
        .with_context(|| format!("invalid network file {}", args.network.display()))
        .map_err(data)?;
    let ast = read_expr(&args.expr)?;
    let inputs = read_bounds(&args.bounds, &ast)?;
    let report = verify(&net, &ast, &inputs, args.samples, &mut Rng::new(args.seed))?;
    let json = to_json(&report)?;
    match &args.out {
        Some(path) => write_output(path, &json)?,
        None => print!("{}", String::from_utf8_lossy(&json)),
    }
    if report.max_error <= args.tolerance {
        Ok(())
    } else {
        Err(data(anyhow!(
            "max error {:e} exceeds tolerance {:e}",
            report.max_error,
            args.tolerance
        )))
    }
}

/// A config file holds one experiment object or an array of them.
fn read_configs(path: &Path) -> CliResult<Vec<ExperimentConfig>> {
    let text = read_input(path)?;
    // Parsed straight into the typed config: going through a JSON value
    // would sort object keys and reorder CombU ratio maps.
    let parsed = if text.trim_start().starts_with('[') {
        serde_json::from_str::<Vec<ExperimentConfig>>(&text)
    } else {
        serde_json::from_str::<ExperimentConfig>(&text).map(|c| vec![c])
    };
    let mut configs = parsed
        .with_context(|| format!("invalid experiment config in {}", path.display()))
        .map_err(usage)?;
    if configs.is_empty() {
        return Err(usage(anyhow!("{} holds no experiments", path.display())));
    }
    // CSV paths are relative to the config file.
    let base = path.parent().unwrap_or(Path::new(""));
    for cfg in &mut configs {
        if let DatasetSpec::Csv { path: csv, .. } = &mut cfg.dataset {
            if csv.is_relative() {
                *csv = base.join(&*csv);
            }
        }
    }
    Ok(configs)
}

fn bench(args: BenchArgs) -> CliResult<()> {
    let mut configs = read_configs(&args.config)?;
    for cfg in &mut configs {
        if let Some(r) = args.repeats {
            cfg.repeats = r;
        }
        if let Some(s) = args.seed {
            cfg.base_seed = s;
        }
        cfg.validate()
            .with_context(|| format!("experiment `{}`", cfg.label()))
            .map_err(usage)?;
    }
    let mut labels: Vec<String> = configs.iter().map(ExperimentConfig::label).collect();
    labels.sort();
    if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
        return Err(usage(anyhow!(
            "two experiments share the label `{}`; set `name`",
            w[0]
        )));
    }
    if args.jobs == 0 {
        return Err(usage(anyhow!("--jobs must be at least 1")));
    }

    let mut reports: Vec<RunReport> = Vec::with_capacity(configs.len());
    for cfg in &configs {
        let report = run_experiment(cfg, args.jobs)?;
        let label = &report.label;
        write_output(&args.out.join(format!("{label}.json")), &to_json(&report)?)?;
        let mut table = Vec::new();
        report.write_csv(&mut table)?;
        write_output(&args.out.join(format!("{label}.csv")), &table)?;
        println!("# {label}");
        print!("{}", String::from_utf8_lossy(&table));
        if report.diverged_runs > 0 {
            eprintln!(
                "{label}: {} of {} runs diverged and were excluded",
                report.diverged_runs,
                report.runs.len()
            );
        }
        reports.push(report);
    }
    if reports.len() > 1 {
        let cross = cross_dataset_ranks(&reports, Ties::Average);
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = ["scheme", "metric", "datasets", "avg_rank"];
        w.write_record(header).map_err(data)?;
        for c in &cross {
            w.write_record([
                c.scheme.clone(),
                c.metric.to_string(),
                c.datasets.to_string(),
                c.avg_rank.to_string(),
            ])
            .map_err(data)?;
        }
        let table = w.into_inner().map_err(|e| data(anyhow!("{e}")))?;
        write_output(&args.out.join("cross_dataset.csv"), &table)?;
        println!("# cross-dataset average rank");
        print!("{}", String::from_utf8_lossy(&table));
    }
    let over: Vec<String> = reports
        .iter()
        .filter(|r| r.exceeds_divergence_limit())
        .map(|r| {
            format!(
                "{}: {:.3} of runs diverged (limit {})",
                r.label,
                r.diverged_fraction(),
                r.config.max_diverged_fraction
            )
        })
        .collect();
    if over.is_empty() {
        Ok(())
    } else {
        Err(Failure::Diverged(over.join("; ")))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Compile(a) => compile_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Bench(a) => bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(e) | Failure::Data(e) => eprintln!("error: {e:#}"),
                Failure::Diverged(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
