use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use vmr_eval::axioms::satisfaction_matrix;
use vmr_eval::experiments::{model_selection, noise_experiment, stability_experiment, NoiseConfig};
use vmr_eval::io::{
    load_bundle, load_ground_truth, load_run, write_bundle, write_report, write_report_to, CoverageMode,
    DatasetBundle, ReportFormat, Tabular,
};
use vmr_eval::measure::{mean_measure, MeasureSpec, ScoreTable};
use vmr_eval::rank_stats::{agreement_from_table, all_tied_ratio_from_table};
use vmr_eval::report::{AgreementReport, EvalReport, PerQueryReport};
use vmr_eval::synth::{bundled_reference_scenario, bundled_selection_scenario, generate_scenario, ScenarioConfig};
use vmr_eval::theory::theory_sweep;
use vmr_eval::{Error, GroundTruth, Result, Run};

const DEFAULT_SEED: u64 = 1;

const MEASURE_HELP: &str = "Comma-separated measures: recall@K:THETA (alias r), axiou@K, \
ap@K:THETA, dcg@K, ncxiou@W1/W2/... (abandonment weights summing to 1)";

#[derive(Parser)]
#[command(name = "vmr-eval", version, about = "Evaluation measures and experiments for video moment retrieval")]
struct Cli {
    /// Seed for every random choice. Same flags and seed give byte-identical output.
    #[arg(long, global = true, env = "VMR_EVAL_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean score of every run under every measure.
    Eval(EvalArgs),
    /// Check INV-k and MON-k for R@K, AP@K, DCG@K and AxIoU@K on random runs.
    Axioms(AxiomArgs),
    /// Kendall tau-b between the system rankings induced by each pair of measures.
    Agreement(AgreementArgs),
    /// Self-agreement of each measure on pairs of disjoint query subsets.
    Stability(StabilityArgs),
    /// RMSE of each measure under simulated annotator noise.
    Noise(NoiseArgs),
    /// Pick a model per validation measure and standardize the picks' test scores.
    Select(SelectArgs),
    /// Closed-form bias, variance and MSE of R@1 and AxIoU@1 under Gaussian IoU noise.
    Theory(TheoryArgs),
    /// Write a synthetic dataset bundle.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Input {
    /// Ground truth JSONL ({query_id, start, end, duration?} per line).
    #[arg(long, requires = "run", conflicts_with_all = ["bundle", "bundled"])]
    gt: Option<PathBuf>,

    /// Run JSONL ({query_id, moments: [{start, end, score?}]} per line); repeatable.
    /// The system id is the file stem.
    #[arg(long, requires = "gt")]
    run: Vec<PathBuf>,

    /// Bundle directory (ground_truth.jsonl, runs/*.jsonl, optional metadata.json).
    #[arg(long, conflicts_with = "bundled")]
    bundle: Option<PathBuf>,

    /// Use the built-in synthetic scenario (500 queries, six systems).
    #[arg(long)]
    bundled: bool,

    /// Accept runs that miss some queries and evaluate on the queries all runs answer.
    #[arg(long)]
    lenient: bool,
}

impl Input {
    fn mode(&self) -> CoverageMode {
        if self.lenient {
            CoverageMode::Lenient
        } else {
            CoverageMode::Strict
        }
    }

    fn load(&self) -> Result<DatasetBundle> {
        if self.bundled {
            return Ok(bundled_reference_scenario());
        }
        if let Some(dir) = &self.bundle {
            return load_bundle(dir, self.mode());
        }
        match &self.gt {
            Some(gt) => {
                let gt = load_ground_truth(gt)?;
                let runs = self.run.iter().map(load_run).collect::<Result<Vec<_>>>()?;
                DatasetBundle::new(gt, runs, self.mode())
            }
            None => Err(Error::InvalidInput(
                "no input: pass --gt with --run, --bundle DIR, or --bundled".into(),
            )),
        }
    }
}

/// The runs and the ground truth they are scored against.
struct Dataset {
    runs: Vec<Run>,
    gt: GroundTruth,
    /// Per-run fraction of queries answered; empty in strict mode.
    coverage: Vec<(String, f64)>,
}

fn dataset(input: &Input) -> Result<Dataset> {
    let bundle = input.load()?;
    let (gt, coverage) = match input.mode() {
        CoverageMode::Strict => (bundle.gt.clone(), Vec::new()),
        CoverageMode::Lenient => (bundle.common_ground_truth(), bundle.coverage()),
    };
    if gt.is_empty() {
        return Err(Error::EmptyQuerySet);
    }
    Ok(Dataset {
        runs: bundle.runs,
        gt,
        coverage,
    })
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Output {
    /// Report path; `.csv` selects CSV, anything else JSON. Defaults to stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,

    /// Override the format implied by --out.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Output {
    fn write<R: Serialize + Tabular + ?Sized>(&self, report: &R) -> Result<()> {
        let format = match (self.format, &self.out) {
            (Some(Format::Json), _) => ReportFormat::Json,
            (Some(Format::Csv), _) => ReportFormat::Csv,
            (None, Some(path)) => ReportFormat::from_path(path),
            (None, None) => ReportFormat::Json,
        };
        match &self.out {
            Some(path) => write_report(report, path, format),
            None => {
                let stdout = std::io::stdout().lock();
                write_report_to(report, stdout, Path::new("<stdout>"), format)
            }
        }
    }
}

fn parse_measure(s: &str) -> std::result::Result<MeasureSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Args)]
struct Measures {
    #[arg(long, value_delimiter = ',', value_parser = parse_measure, help = MEASURE_HELP,
          default_value = "recall@1:0.3,recall@1:0.5,recall@1:0.7,recall@5:0.3,recall@5:0.5,recall@5:0.7,\
recall@10:0.3,recall@10:0.5,recall@10:0.7,axiou@1,axiou@5,axiou@10")]
    measures: Vec<MeasureSpec>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    measures: Measures,
    #[command(flatten)]
    output: Output,
    /// Also write per-query scores to this path.
    #[arg(long)]
    per_query: Option<PathBuf>,
}

#[derive(Args)]
struct AxiomArgs {
    /// Cutoff K shared by all four measures.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Threshold for R@K and AP@K.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Random perturbation trials per cell.
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct AgreementArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    measures: Measures,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct StabilityArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    measures: Measures,
    /// Query subset sizes; each trial draws two disjoint subsets of this size.
    #[arg(long, value_delimiter = ',', default_value = "25,50,100,200")]
    sizes: Vec<usize>,
    /// Trials per subset size.
    #[arg(long, default_value_t = 5000)]
    trials: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct NoiseArgs {
    #[command(flatten)]
    input: Input,
    #[command(flatten)]
    measures: Measures,
    /// Variances (seconds²) of the annotators' start points.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
    beta2: Vec<f64>,
    /// Noisy datasets per noise level.
    #[arg(long, default_value_t = 100)]
    replicas: usize,
    /// Annotators per query (odd); their per-coordinate median is the noisy label.
    #[arg(long, default_value_t = 5)]
    raters: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct SelectArgs {
    /// Validation ground truth JSONL.
    #[arg(long, requires_all = ["val_run", "test_gt", "test_run"], conflicts_with = "bundled")]
    val_gt: Option<PathBuf>,
    /// Validation run JSONL per model; repeatable.
    #[arg(long)]
    val_run: Vec<PathBuf>,
    /// Test ground truth JSONL.
    #[arg(long)]
    test_gt: Option<PathBuf>,
    /// Test run JSONL per model (same file stems as the validation runs); repeatable.
    #[arg(long)]
    test_run: Vec<PathBuf>,
    /// Use the built-in 640-model sweep.
    #[arg(long)]
    bundled: bool,
    /// Queries per split for --bundled.
    #[arg(long, default_value_t = 500)]
    queries: usize,
    /// Validation measures (one chosen model each).
    #[arg(long, value_delimiter = ',', value_parser = parse_measure, help = MEASURE_HELP,
          default_value = "recall@1:0.3,recall@1:0.5,recall@1:0.7,recall@5:0.3,recall@5:0.5,recall@5:0.7,\
recall@10:0.3,recall@10:0.5,recall@10:0.7,axiou@1,axiou@5,axiou@10")]
    val_measures: Vec<MeasureSpec>,
    /// Test measures.
    #[arg(long, value_delimiter = ',', value_parser = parse_measure, help = MEASURE_HELP,
          default_value = "recall@1:0.3,recall@1:0.5,recall@1:0.7,recall@5:0.3,recall@5:0.5,recall@5:0.7,\
recall@10:0.3,recall@10:0.5,recall@10:0.7,axiou@1,axiou@5,axiou@10")]
    test_measures: Vec<MeasureSpec>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TheoryArgs {
    /// True top-1 IoU.
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    /// Thresholds for R@1.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    theta: Vec<f64>,
    /// Standard deviations of the IoU noise.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    gamma: Vec<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    /// 500 queries, six systems.
    Reference,
    /// Validation split of the 640-model sweep.
    SelectionVal,
    /// Test split of the 640-model sweep.
    SelectionTest,
}

#[derive(Args)]
struct SynthArgs {
    /// Output bundle directory.
    #[arg(long, short)]
    out: PathBuf,
    /// Built-in scenario to write.
    #[arg(long, value_enum, default_value = "reference", conflicts_with = "config")]
    scenario: Scenario,
    /// Queries per split for the selection scenarios.
    #[arg(long, default_value_t = 500)]
    queries: usize,
    /// Scenario configuration JSON; its seed is replaced by --seed.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn run_cli(cli: Cli) -> Result<ExitCode> {
    let seed = cli.seed;
    match cli.command {
        Command::Eval(args) => {
            let Dataset { runs, gt, coverage } = dataset(&args.input)?;
            let mut evaluations = Vec::with_capacity(runs.len() * args.measures.measures.len());
            for run in &runs {
                for spec in &args.measures.measures {
                    evaluations.push(mean_measure(run, &gt, spec)?);
                }
            }
            let report = EvalReport { evaluations, coverage };
            if let Some(path) = &args.per_query {
                write_report(&PerQueryReport::from(&report), path, ReportFormat::from_path(path))?;
            }
            args.output.write(&report)?;
        }
        Command::Axioms(args) => {
            let matrix = satisfaction_matrix(args.k, args.theta, args.trials, seed)?;
            args.output.write(&matrix)?;
            let bad: Vec<String> = matrix
                .unexpected_violations()
                .map(|c| format!("{} {}", c.verdict.measure, c.verdict.axiom.name()))
                .collect();
            if !bad.is_empty() {
                eprintln!("error: expected axioms violated: {}", bad.join(", "));
                return Ok(ExitCode::from(1));
            }
        }
        Command::Agreement(args) => {
            let Dataset { runs, gt, .. } = dataset(&args.input)?;
            if runs.len() < 2 {
                return Err(Error::InvalidInput("agreement needs at least two runs".into()));
            }
            let table = ScoreTable::build(&runs, &gt, &args.measures.measures)?;
            let report = AgreementReport {
                systems: table.systems.clone(),
                agreement: agreement_from_table(&table),
                all_tied_ratio: (0..table.measures.len())
                    .map(|m| all_tied_ratio_from_table(&table, m))
                    .collect(),
            };
            args.output.write(&report)?;
        }
        Command::Stability(args) => {
            let Dataset { runs, gt, .. } = dataset(&args.input)?;
            let reports = stability_experiment(&runs, &gt, &args.measures.measures, &args.sizes, args.trials, seed)?;
            args.output.write(reports.as_slice())?;
        }
        Command::Noise(args) => {
            let Dataset { runs, gt, .. } = dataset(&args.input)?;
            let configs = args
                .beta2
                .iter()
                .map(|&b| NoiseConfig::annotators(b, args.raters, args.replicas, seed))
                .collect::<Result<Vec<_>>>()?;
            let reports = noise_experiment(&runs, &gt, &args.measures.measures, &configs)?;
            args.output.write(reports.as_slice())?;
        }
        Command::Select(args) => {
            let (val, test) = if args.bundled {
                bundled_selection_scenario(args.queries)?
            } else {
                let (Some(val_gt), Some(test_gt)) = (&args.val_gt, &args.test_gt) else {
                    return Err(Error::InvalidInput(
                        "no input: pass --val-gt/--val-run/--test-gt/--test-run or --bundled".into(),
                    ));
                };
                let load = |gt: &Path, runs: &[PathBuf]| -> Result<DatasetBundle> {
                    let gt = load_ground_truth(gt)?;
                    let runs = runs.iter().map(load_run).collect::<Result<Vec<_>>>()?;
                    DatasetBundle::new(gt, runs, CoverageMode::Strict)
                };
                (load(val_gt, &args.val_run)?, load(test_gt, &args.test_run)?)
            };
            let report = model_selection(
                &val.runs,
                &test.runs,
                &val.gt,
                &test.gt,
                &args.val_measures,
                &args.test_measures,
            )?;
            args.output.write(&report)?;
        }
        Command::Theory(args) => {
            let rows = theory_sweep(args.r, &args.theta, &args.gamma)?;
            args.output.write(rows.as_slice())?;
        }
        Command::Synth(args) => {
            let bundle = match &args.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                        path: path.clone(),
                        source: e,
                    })?;
                    let mut cfg: ScenarioConfig = serde_json::from_str(&text)?;
                    cfg.seed = seed;
                    generate_scenario(&cfg)?
                }
                None => match args.scenario {
                    Scenario::Reference => bundled_reference_scenario(),
                    Scenario::SelectionVal => bundled_selection_scenario(args.queries)?.0,
                    Scenario::SelectionTest => bundled_selection_scenario(args.queries)?.1,
                },
            };
            write_bundle(&bundle, &args.out)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(cli) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
