//! Command-line front end: run tests on sequence files, simulate sources,
//! estimate error rates, and execute the invariant suite.
//!
//! Exit codes: 0 success, 1 usage error, 2 invariant-suite failure,
//! 3 codec or runtime error.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use entropytest::codecs::ExternalCodec;
use entropytest::hypothesis::{run_code_test, run_predictor_test, CodeEvidence};
use entropytest::mc::{run_experiment, with_thread_cap, ExperimentSpec};
use entropytest::measures::MeasureSpec;
use entropytest::rng::SeededRng;
use entropytest::sequence::{parse_sequence, Alphabet};
use entropytest::sources::SourceSpec;
use entropytest::verify::{verify_suite, VerifyGroup};

#[derive(Parser)]
#[command(
    name = "entropytest",
    version,
    about = "Serial-independence and Markov-order tests driven by universal measures and compressors",
    after_help = "Alphabets: binary | byte | chars:<symbols>\n\
                  Measures:  uniform | laplace | kt:<k> | mixture[:K] | code:<command>\n\
                  ENTROPYTEST_THREADS caps Monte Carlo parallelism."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a sequence file for Markov memory at most --order
    Test(TestArgs),
    /// Sample a source spec into a sequence file
    Simulate(SimulateArgs),
    /// Monte Carlo error-rate estimation from an experiment spec
    Mc(McArgs),
    /// Run invariant groups and report pass/fail
    Verify(VerifyArgs),
}

#[derive(Args)]
struct TestArgs {
    /// Sequence file; '-' reads standard input
    #[arg(long)]
    input: String,
    /// Alphabet spec: binary, byte, or chars:<symbols>
    #[arg(long, default_value = "binary")]
    alphabet: String,
    /// Tested memory m
    #[arg(long, default_value_t = 0)]
    order: usize,
    /// Test level in (0, 1)
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Evidence source: a measure spec or code:<command>
    #[arg(long, default_value = "mixture")]
    measure: String,
    /// Override the mixture's maximum component order (only with
    /// --measure mixture; defaults to max(order + 2, 8 binary / 3 byte))
    #[arg(long)]
    max_order: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Source spec file (TOML)
    #[arg(long)]
    source: PathBuf,
    /// Sample length
    #[arg(long)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Output file; '-' writes standard output
    #[arg(long, default_value = "-")]
    output: String,
}

#[derive(Args)]
struct McArgs {
    /// Experiment spec file (TOML)
    #[arg(long)]
    spec: PathBuf,
    /// Override the spec's trials per grid point
    #[arg(long)]
    trials: Option<usize>,
    /// Override the spec's base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the power-curve CSV here
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the JSON report here instead of standard output
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Groups to run (repeatable); all groups when omitted
    #[arg(long = "group")]
    groups: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let _ = e.print();
            return 1;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            classify(&err)
        }
    }
}

/// Usage problems exit 1; invariant failures 2 (handled in run); codec and
/// other runtime failures 3.
fn classify(err: &anyhow::Error) -> i32 {
    if let Some(core) = err.downcast_ref::<entropytest::Error>() {
        use entropytest::Error::*;
        return match core {
            Parse { .. } | Argument(_) | Spec(_) | Model(_) | Unsupported(_) | Domain(_) => 1,
            Codec(_) | Capacity(_) | Internal(_) => 3,
        };
    }
    3
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Test(args) => cmd_test(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Mc(args) => cmd_mc(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn read_input(path: &str) -> anyhow::Result<Vec<u8>> {
    if path == "-" {
        let mut buf = Vec::new();
        std::io::stdin().read_to_end(&mut buf).context("reading standard input")?;
        Ok(buf)
    } else {
        std::fs::read(path).with_context(|| format!("reading {path}"))
    }
}

fn write_output(path: &str, bytes: &[u8]) -> anyhow::Result<()> {
    if path == "-" {
        std::io::stdout().write_all(bytes).context("writing standard output")
    } else {
        std::fs::write(path, bytes).with_context(|| format!("writing {path}"))
    }
}

fn cmd_test(args: TestArgs) -> anyhow::Result<i32> {
    let alphabet = Arc::new(Alphabet::parse_spec(&args.alphabet)?);
    let raw = read_input(&args.input)?;
    let seq = parse_sequence(&raw, Arc::clone(&alphabet))?;

    let outcome = if args.measure.starts_with("code:") {
        if args.max_order.is_some() {
            bail!("--max-order only applies to measure evidence, not code:<command>");
        }
        let codec = ExternalCodec::parse_spec(&args.measure)?;
        run_code_test(&seq, args.order, CodeEvidence::External(&codec), args.alpha)?
    } else {
        let spec = match (MeasureSpec::parse(&args.measure)?, args.max_order) {
            (MeasureSpec::Mixture { max_order: None }, Some(k)) => {
                MeasureSpec::Mixture { max_order: Some(k) }
            }
            (spec, None) => spec,
            (_, Some(_)) => bail!("--max-order requires --measure mixture"),
        };
        let measure = spec.build_for_test(alphabet.size(), args.order);
        run_predictor_test(&seq, args.order, measure.as_ref(), args.alpha)?
    };

    println!("{}", serde_json::to_string_pretty(&outcome)?);
    Ok(0)
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<i32> {
    let text = std::fs::read_to_string(&args.source)
        .with_context(|| format!("reading {}", args.source.display()))?;
    let model = SourceSpec::parse_toml(&text)?.build()?;
    let seq = model.sample(args.length, SeededRng::new(args.seed, args.stream))?;
    let mut payload = seq.render();
    if !seq.alphabet().is_byte_mode() {
        payload.push(b'\n');
    }
    write_output(&args.output, &payload)?;
    Ok(0)
}

fn cmd_mc(args: McArgs) -> anyhow::Result<i32> {
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    let mut spec = ExperimentSpec::parse_toml(&text)?;
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;

    let report = run_experiment(&spec)?;
    eprintln!(
        "mc: {} cells x {} trials in {:.1?}",
        report.cells.len(),
        spec.trials,
        report.wall_time
    );

    if let Some(csv_path) = &args.csv {
        std::fs::write(csv_path, report.to_csv())
            .with_context(|| format!("writing {}", csv_path.display()))?;
    }
    let json = serde_json::to_string_pretty(&report)?;
    match &args.output {
        Some(path) => std::fs::write(path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<i32> {
    let groups: Vec<VerifyGroup> = args
        .groups
        .iter()
        .map(|g| g.parse())
        .collect::<entropytest::Result<_>>()?;
    let reports = with_thread_cap(|| verify_suite(&groups, args.seed));
    for r in &reports {
        eprintln!(
            "{} {} ({} checks): {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.group,
            r.checks,
            r.detail
        );
    }
    println!("{}", serde_json::to_string_pretty(&reports)?);
    Ok(if reports.iter().all(|r| r.passed) { 0 } else { 2 })
}
