use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use exemplar_core::bench::{self, Axis, BenchConfig, Shape};
use exemplar_core::io::{load_ground_set, read_sets_csv};
use exemplar_core::{
    assign_clusters, evaluate_chunked, greedy_maximize, Backend, DeviceLimits, Error, Evaluator, Precision,
    SquaredEuclidean,
};

const EXIT_USAGE: u8 = 1;
const EXIT_OUT_OF_MEMORY: u8 = 2;

#[derive(Parser)]
#[command(name = "exemplar", version, about = "Batch evaluation of the exemplar clustering objective")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time batch evaluation on generated problems and write a CSV of records.
    Bench(BenchArgs),
    /// Pick k exemplars from a dataset with Greedy.
    Cluster(ClusterArgs),
    /// Evaluate sets given in a CSV file, one value per output line.
    Eval(EvalArgs),
    /// Print the default device limits and the version.
    Info,
}

#[derive(Args)]
struct Engine {
    #[arg(long, default_value = "tiled")]
    backend: Backend,
    /// Worker threads for the parallel and tiled backends [default: all cores].
    #[arg(long)]
    workers: Option<usize>,
    /// Free-memory budget in bytes; batches are chunked to fit.
    #[arg(long)]
    memory_budget: Option<u64>,
}

impl Engine {
    fn evaluator(&self) -> Result<Evaluator, Error> {
        Evaluator::new(self.backend, self.workers.unwrap_or_else(default_workers))
    }
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value = "n")]
    vary: Axis,
    /// Comma-separated values of the varied axis [default: the fixed value].
    #[arg(long, value_delimiter = ',')]
    values: Vec<usize>,
    #[arg(long, default_value_t = Shape::DESK.n)]
    n: usize,
    #[arg(long, default_value_t = Shape::DESK.l)]
    l: usize,
    #[arg(long, default_value_t = Shape::DESK.k)]
    k: usize,
    #[arg(long, default_value_t = Shape::DESK.d)]
    d: usize,
    /// Comma-separated backends.
    #[arg(long, value_delimiter = ',', default_value = "reference,parallel,tiled")]
    backend: Vec<Backend>,
    /// Comma-separated precisions.
    #[arg(long, value_delimiter = ',', default_value = "fp32")]
    precision: Vec<Precision>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long)]
    memory_budget: Option<u64>,
    /// Output CSV [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Observations as CSV (one per row) or `.exem` binary.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    k: usize,
    /// Storage precision [default: fp32 for CSV, the file's own for `.exem`].
    #[arg(long)]
    precision: Option<Precision>,
    #[command(flatten)]
    engine: Engine,
    /// Exemplars as CSV: ground index followed by coordinates.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Nearest-exemplar label of every observation, one per line.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    /// Rows of `set_id, x_0, ..., x_{d-1}`.
    #[arg(long)]
    sets: PathBuf,
    #[arg(long)]
    precision: Option<Precision>,
    #[command(flatten)]
    engine: Engine,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_bench(args: BenchArgs) -> Result<(), Error> {
    let fixed = Shape { n: args.n, l: args.l, k: args.k, d: args.d };
    let values = if args.values.is_empty() {
        vec![match args.vary {
            Axis::N => fixed.n,
            Axis::L => fixed.l,
            Axis::K => fixed.k,
        }]
    } else {
        args.values
    };
    let config = BenchConfig {
        vary: args.vary,
        values,
        fixed,
        backends: args.backend,
        precisions: args.precision,
        workers: args.workers.unwrap_or_else(default_workers),
        repetitions: args.reps,
        seed: args.seed,
        memory_budget: args.memory_budget,
    };
    let records = bench::run_benchmark(&config)?;
    for r in records.iter().filter(|r| r.failed()) {
        eprintln!("warning: {} at n={} l={} k={} did not fit the memory budget", r.backend, r.n, r.l, r.k);
    }
    bench::write_records(&records, output(args.out.as_ref())?)
}

fn run_cluster(args: ClusterArgs) -> Result<(), Error> {
    let ground = load_ground_set(&args.input, args.precision, None, &SquaredEuclidean)?;
    let evaluator = args.engine.evaluator()?;
    let result = greedy_maximize(&ground, args.k, &evaluator, &SquaredEuclidean, args.engine.memory_budget)?;
    let exemplars: Vec<Vec<f64>> = result.exemplar_indices.iter().map(|&i| ground.point(i)).collect();

    let mut out = output(args.out.as_ref())?;
    let header: Vec<String> =
        std::iter::once("index".to_string()).chain((0..ground.d()).map(|k| format!("x{k}"))).collect();
    writeln!(out, "{}", header.join(","))?;
    for (&i, v) in result.exemplar_indices.iter().zip(&exemplars) {
        let coords: Vec<String> = v.iter().map(f64::to_string).collect();
        writeln!(out, "{i},{}", coords.join(","))?;
    }
    out.flush()?;

    if let Some(path) = &args.labels {
        let labels = if exemplars.is_empty() {
            vec![0; ground.n()]
        } else {
            assign_clusters(&ground, &exemplars, &SquaredEuclidean)?
        };
        let mut w = BufWriter::new(File::create(path)?);
        for label in labels {
            writeln!(w, "{label}")?;
        }
        w.flush()?;
    }
    eprintln!("f = {} after {} evaluations", result.value(), result.evaluations);
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<(), Error> {
    let ground = load_ground_set(&args.input, args.precision, None, &SquaredEuclidean)?;
    let batch = read_sets_csv(BufReader::new(File::open(&args.sets)?), ground.d())?;
    let evaluator = args.engine.evaluator()?;
    let values = match args.engine.memory_budget {
        Some(budget) => evaluate_chunked(&evaluator, &ground, &batch, &SquaredEuclidean, budget)?,
        None => evaluator.evaluate_batch(&ground, &batch, &SquaredEuclidean)?,
    };
    let mut out = output(None)?;
    for v in values {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}

fn run_info() -> Result<(), Error> {
    println!("exemplar {}", env!("CARGO_PKG_VERSION"));
    println!("{}", DeviceLimits::default());
    println!("precisions: {}", Precision::ALL.map(|p| p.name()).join(", "));
    println!("backends: {}", Backend::ALL.map(|b| b.name()).join(", "));
    println!("host workers: {}", default_workers());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Bench(args) => run_bench(args),
        Command::Cluster(args) => run_cluster(args),
        Command::Eval(args) => run_eval(args),
        Command::Info => run_info(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::OutOfMemory { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_OUT_OF_MEMORY)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
