use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use choreo_bench::{report, BenchError, BenchName, OutputFormat, SpecFile, TransportKind, Variant};

/// Times projected choreographies against handwritten node programs.
#[derive(Parser)]
#[command(name = "bench")]
struct Cli {
    /// counter, comm or kvs; may come from the config file instead.
    name: Option<BenchName>,
    /// Measure one variant only; both by default.
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    /// Loop counts for counter and comm, comma separated for a sweep.
    #[arg(long, value_delimiter = ',')]
    iterations: Option<Vec<u64>>,
    /// Requests per kvs run.
    #[arg(long)]
    requests: Option<usize>,
    /// Fraction of kvs requests that are gets.
    #[arg(long)]
    get_ratio: Option<f64>,
    /// Required for kvs; ignored by counter.
    #[arg(long, value_enum)]
    transport: Option<TransportKind>,
    /// Timed repetitions per variant and size.
    #[arg(long)]
    reps: Option<usize>,
    /// Untimed repetitions per variant before timing starts.
    #[arg(long)]
    warmup: Option<usize>,
    /// Workload seed for kvs.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    output: Option<OutputFormat>,
    /// Write results here instead of stdout.
    #[arg(long)]
    out_file: Option<PathBuf>,
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), BenchError> {
    let file = match &cli.config {
        Some(path) => SpecFile::load(path)?,
        None => SpecFile::default(),
    };
    let flags = SpecFile {
        bench: cli.name,
        variant: cli.variant,
        iterations: cli.iterations,
        requests: cli.requests,
        get_ratio: cli.get_ratio,
        transport: cli.transport,
        reps: cli.reps,
        warmup: cli.warmup,
        seed: cli.seed,
        output: cli.output,
        out_file: cli.out_file,
    };
    let spec = file.overridden_by(flags).resolve()?;
    let samples = choreo_bench::run(&spec)?;
    let mut out: Box<dyn Write> = match &spec.out_file {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };
    report::write(&mut out, &spec, &samples)?;
    out.flush()?;
    Ok(())
}
