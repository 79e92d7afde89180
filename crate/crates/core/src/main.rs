use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;

use btlcheck::dataset::{sample_dataset, ComparisonDataset, TrialCounts};
use btlcheck::experiments::{run_experiment, ExperimentSpec};
use btlcheck::inference::{self, Hypothesis, TestConfig, ThresholdKind};
use btlcheck::model::{self, PairwiseModel};
use btlcheck::{io, seed, Error, ObservationGraph, Result};

/// Test pairwise comparison data against the Bradley-Terry-Luce model.
///
/// Exit status: 0 when H0 is retained, 2 when H1 is declared, 1 on error.
#[derive(Parser)]
#[command(name = "btlcheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the test on a match log or aggregated counts (`-` reads stdin).
    Test(TestArgs),
    /// Run an experiment described by a key = value spec file.
    Simulate {
        spec: PathBuf,
        /// Overrides `output` in the spec; stdout if neither is set.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write a synthetic model, graph or dataset.
    Generate(GenerateArgs),
    /// Print spectral diagnostics of a dataset.
    Diagnose {
        #[arg(default_value = "-")]
        data: String,
        #[arg(long)]
        drop_ties: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ThresholdArg {
    Analytic,
    Quantile,
    Permutation,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Kv,
    Csv,
}

#[derive(Args)]
struct TestArgs {
    #[arg(default_value = "-")]
    data: String,
    #[arg(long, value_enum, default_value = "permutation")]
    threshold: ThresholdArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.95)]
    q: f64,
    /// BTL models in the quantile pool.
    #[arg(long, default_value_t = 200)]
    pool: usize,
    /// Shuffle repetitions of the permutation thresholds.
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// Cycle shuffles per repetition (default n).
    #[arg(long)]
    cycles: Option<usize>,
    /// Constant of the second analytic threshold term.
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    #[arg(long)]
    drop_ties: bool,
    #[arg(long, value_enum, default_value = "kv")]
    format: ReportFormat,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Btl,
    Uniform,
    LowerBound,
    Stability,
    Margin,
    Cyclic,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphArg {
    Complete,
    Circulant,
    Er,
}

#[derive(Clone, Copy, ValueEnum)]
enum Artifact {
    Dataset,
    Aggregated,
    Model,
    Graph,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    family: Family,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Trials per directed edge.
    #[arg(long, default_value_t = 12)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Perturbation size of the lower-bound family.
    #[arg(long, default_value_t = 0.25)]
    eta: f64,
    /// Margin of the margin family.
    #[arg(long, default_value_t = 0.22)]
    delta: f64,
    /// Bias of the cyclic family.
    #[arg(long, default_value_t = 0.1)]
    bias: f64,
    /// Comma-separated BTL scores; random when omitted.
    #[arg(long, value_delimiter = ',')]
    scores: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "complete")]
    graph: GraphArg,
    /// Edge probability for `--graph er`.
    #[arg(long)]
    p: Option<f64>,
    /// `dataset` writes a match log, `aggregated` i,j,k,z counts.
    #[arg(long, value_enum, default_value = "dataset")]
    what: Artifact,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn read_input(path: &str) -> Result<String> {
    let mut text = String::new();
    if path == "-" {
        std::io::stdin().read_to_string(&mut text)?;
    } else {
        text = std::fs::read_to_string(path)?;
    }
    Ok(text)
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run_test(args: &TestArgs) -> Result<Hypothesis> {
    let data = io::read_dataset(&read_input(&args.data)?, args.drop_ties)?;
    let config = TestConfig {
        c_alpha_gamma: args.c,
        q: args.q,
        model_pool: args.pool,
        reps: args.reps,
        cycles: args.cycles,
        ..TestConfig::default()
    };
    let kind = match args.threshold {
        ThresholdArg::Analytic => ThresholdKind::Analytic,
        ThresholdArg::Quantile => ThresholdKind::Quantile,
        ThresholdArg::Permutation => ThresholdKind::Permutation,
    };
    let report = inference::run_test(&data, &[kind], &config, args.seed)?;
    let text = match args.format {
        ReportFormat::Kv => report.to_key_value(),
        ReportFormat::Csv => format!("{}\n{}\n", inference::TestReport::CSV_HEADER, report.to_csv_row()),
    };
    emit(args.output.as_deref(), &text)?;
    Ok(report.decision())
}

fn simulate(spec_path: &Path, output: Option<&Path>) -> Result<()> {
    let spec = ExperimentSpec::parse(&std::fs::read_to_string(spec_path)?)?;
    let csv = run_experiment(&spec)?;
    emit(output.or(spec.output.as_deref()), &csv)
}

fn build_graph(args: &GenerateArgs) -> Result<ObservationGraph> {
    match args.graph {
        GraphArg::Complete => ObservationGraph::complete(args.n),
        GraphArg::Circulant => ObservationGraph::circulant_expander(args.n),
        GraphArg::Er => {
            let p = args.p.unwrap_or_else(|| btlcheck::experiments::er_probability(args.n));
            ObservationGraph::erdos_renyi(args.n, p, seed::derive(args.seed, &[1]))
        }
    }
}

fn build_model(args: &GenerateArgs, graph: &ObservationGraph) -> Result<PairwiseModel<f64>> {
    let complete_only = |name: &str| {
        if matches!(args.graph, GraphArg::Complete) {
            Ok(())
        } else {
            Err(Error::UnsupportedTopology(format!("the {name} family is defined on complete graphs")))
        }
    };
    match args.family {
        Family::Btl => {
            let scores = args.scores.clone().unwrap_or_else(|| model::random_btl_scores(args.n, seed::derive(args.seed, &[2])));
            model::btl_model(&scores, graph)
        }
        Family::Uniform => Ok(model::uniform_model(graph)),
        Family::LowerBound => {
            complete_only("lower-bound")?;
            let mut theta: Vec<usize> = (0..args.n / 2).collect();
            theta.shuffle(&mut seed::rng(args.seed, &[3]));
            model::lower_bound_model(args.n, args.eta, &theta)
        }
        Family::Stability => {
            complete_only("stability")?;
            model::stability_model(args.n)
        }
        Family::Margin => model::margin_model(graph, args.delta),
        Family::Cyclic => model::cyclic_model(graph, args.bias),
    }
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let graph = build_graph(args)?;
    if let Artifact::Graph = args.what {
        return emit(args.output.as_deref(), &graph.to_edge_list());
    }
    let model = build_model(args, &graph)?;
    let text = match args.what {
        Artifact::Model => model.to_csv(),
        Artifact::Dataset | Artifact::Aggregated => {
            let data = sample_dataset(&model, &TrialCounts::Uniform(args.k), seed::derive(args.seed, &[4]))?;
            let mut buf = Vec::new();
            if let Artifact::Dataset = args.what {
                io::write_matches(&data, &mut buf)?;
            } else {
                io::write_aggregated(&data, &mut buf)?;
            }
            String::from_utf8(buf).expect("csv output is UTF-8")
        }
        Artifact::Graph => unreachable!(),
    };
    emit(args.output.as_deref(), &text)
}

fn diagnose(data: &ComparisonDataset) -> Result<String> {
    let d = inference::diagnostics(data, &TestConfig::default())?;
    let stats = data.graph().degree_stats();
    let mut out = String::new();
    let _ = writeln!(out, "n={}", d.n);
    let _ = writeln!(out, "agents={}", data.names().join(";"));
    let pi: Vec<String> = d.pi_hat.iter().map(|p| format!("{p:.12e}")).collect();
    let _ = writeln!(out, "pi_hat={}", pi.join(";"));
    let _ = writeln!(out, "h_pi={:.12e}", d.h_pi);
    let _ = writeln!(out, "sigma2={:.12e}", d.sigma2);
    let _ = writeln!(out, "eps_hat={:.12e}", d.eps_hat);
    let _ = writeln!(out, "d_min={}", stats.d_min);
    let _ = writeln!(out, "d_max={}", stats.d_max);
    let _ = writeln!(out, "kappa={}", stats.kappa);
    let _ = writeln!(out, "k_min={}", d.k_min);
    let _ = writeln!(out, "k_max={}", d.k_max);
    let _ = writeln!(out, "k_mean={:.6}", d.k_mean);
    let _ = writeln!(out, "observations={}", data.total_observations());
    Ok(out)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match &cli.command {
        Command::Test(args) => run_test(args).map(|h| match h {
            Hypothesis::H0 => ExitCode::SUCCESS,
            Hypothesis::H1 => ExitCode::from(2),
        }),
        Command::Simulate { spec, output } => simulate(spec, output.as_deref()).map(|_| ExitCode::SUCCESS),
        Command::Generate(args) => generate(args).map(|_| ExitCode::SUCCESS),
        Command::Diagnose { data, drop_ties, output } => read_input(data)
            .and_then(|text| io::read_dataset(&text, *drop_ties))
            .and_then(|d| diagnose(&d))
            .and_then(|text| emit(output.as_deref(), &text))
            .map(|_| ExitCode::SUCCESS),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}
