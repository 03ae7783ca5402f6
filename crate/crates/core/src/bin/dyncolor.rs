use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dyncolor::harness::{self, HarnessError, MetricsOutput, RunOptions, StaticMetrics};
use dyncolor::stream::{generate, GenSpec, StreamFile, StreamKind};

#[derive(Parser)]
#[command(name = "dyncolor", version, about = "Dynamic (1+eps)Delta edge coloring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic update stream.
    Gen(GenArgs),
    /// Run a stream through the dynamic engine and report metrics.
    Run(RunArgs),
    /// Color all inserted edges of a stream at once.
    Static(CommonArgs),
    /// Run a stream with every audit after every update.
    Verify(CommonArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Random,
    Forest,
    Regularish,
    Churn,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    delta: usize,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Probability that a churn step is a deletion.
    #[arg(long, default_value_t = 0.5)]
    delete_fraction: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CommonArgs {
    /// Stream file; `-` reads standard input.
    stream: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    greedy_slack: f64,
    /// One subgraph with the full palette instead of the random split.
    #[arg(long)]
    no_partition: bool,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Compare against the from-scratch oracle after every k-th update.
    #[arg(long, value_name = "K")]
    oracle_check: Option<usize>,
    /// Resample all randomness after every k-th update.
    #[arg(long, value_name = "K")]
    resample_every: Option<usize>,
    /// Resample when the failed-edge graph's max degree exceeds T * eps * Delta.
    #[arg(long, value_name = "T")]
    resample_threshold: Option<f64>,
    /// Independent runs with derived seeds, in parallel.
    #[arg(long, default_value_t = 1)]
    trials: usize,
}

impl CommonArgs {
    fn options(&self) -> RunOptions {
        let mut o = RunOptions::new(self.epsilon, self.seed);
        o.greedy_slack = self.greedy_slack;
        o.no_partition = self.no_partition;
        o
    }

    fn load(&self) -> Result<StreamFile, HarnessError> {
        let text = if self.stream.as_os_str() == "-" {
            std::io::read_to_string(std::io::stdin())?
        } else {
            fs::read_to_string(&self.stream)?
        };
        Ok(StreamFile::parse(&text)?)
    }
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<(), HarnessError> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn metrics_text(runs: &[MetricsOutput], format: Format) -> String {
    match format {
        Format::Json if runs.len() == 1 => json(&runs[0]),
        Format::Json => json(&runs),
        Format::Csv => {
            let mut out = format!("{}\n", MetricsOutput::CSV_HEADER);
            for m in runs {
                out.push_str(&m.csv_row());
                out.push('\n');
            }
            out
        }
    }
}

fn static_text(m: &StaticMetrics, format: Format) -> String {
    match format {
        Format::Json => json(m),
        Format::Csv => format!("{}\n{}\n", StaticMetrics::CSV_HEADER, m.csv_row()),
    }
}

fn execute(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Gen(a) => {
            let kind = match a.kind {
                Kind::Random => StreamKind::Random,
                Kind::Forest => StreamKind::Forest,
                Kind::Regularish => StreamKind::Regularish,
                Kind::Churn => StreamKind::Churn,
            };
            let spec = GenSpec::new(kind, a.n, a.delta, a.count, a.seed).delete_fraction(a.delete_fraction);
            emit(&generate(&spec)?.to_text(), &a.output)
        }
        Command::Run(a) => {
            let stream = a.common.load()?;
            let mut o = a.common.options();
            o.oracle_check = a.oracle_check;
            o.resample_every = a.resample_every;
            o.resample_threshold = a.resample_threshold;
            let runs = harness::run_trials(&stream, &o, a.trials)?;
            emit(&metrics_text(&runs, a.common.format), &a.common.output)
        }
        Command::Static(a) => {
            let stream = a.load()?;
            let m = harness::run_static(&stream, &a.options())?;
            emit(&static_text(&m, a.format), &a.output)
        }
        Command::Verify(a) => {
            let stream = a.load()?;
            let r = harness::run_verify(&stream, &a.options())?;
            let text = match a.format {
                Format::Json => json(&r),
                Format::Csv => format!("passed,updates,checks,seed\n{},{},{},{}\n", r.passed, r.updates, r.checks, r.seed),
            };
            emit(&text, &a.output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(HarnessError::Oracle(failure)) => {
            eprint!("{}", failure.dump());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
