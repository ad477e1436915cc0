use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::thread;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use dynmatch::metrics::{export, Format, Recorder, RunError, RunStats};
use dynmatch::verifier::{check_invariants, ratio};
use dynmatch::workload::{self, extend_with_teardown, gen_named, gen_random, Pattern, UpdateSequence};
use dynmatch::Config;

#[derive(Parser)]
#[command(name = "dynmatch", version, about = "Dynamic 3/2-approximate matching driver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an update sequence file.
    Gen(GenArgs),
    /// Replay a sequence file through the engine.
    Run(RunArgs),
    /// Replay with invariant checks after every update and the exact ratio
    /// check whenever the graph is small enough.
    Verify(VerifyArgs),
    /// Time random workloads over several graph sizes, one thread per size.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenArgs {
    /// `random`, `star-churn`, `clique-build-teardown` or `path-zipper`.
    #[arg(long, default_value = "random")]
    pattern: String,
    #[arg(long)]
    n: usize,
    /// Number of updates (random pattern only).
    #[arg(long, default_value_t = 0)]
    t: usize,
    #[arg(long, default_value_t = 0.5)]
    p_insert: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    input: PathBuf,
    /// Engine seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Level threshold; defaults to ceil(sqrt(n)).
    #[arg(long)]
    threshold: Option<usize>,
    /// Append deletes of every remaining edge before replaying.
    #[arg(long)]
    teardown: bool,
    /// Metrics output file.
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricsFormat::Json)]
    format: MetricsFormat,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    replay: ReplayArgs,
    /// Check invariants every V updates; 0 checks only the final state.
    #[arg(long, default_value_t = 1)]
    verify_every: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    replay: ReplayArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated vertex counts.
    #[arg(long, value_delimiter = ',', required = true)]
    n_list: Vec<usize>,
    /// Updates per vertex: each cell replays `updates_per_n * n` updates.
    #[arg(long, default_value_t = 10)]
    updates_per_n: usize,
    #[arg(long, default_value_t = 0.6)]
    p_insert: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricsFormat {
    Json,
    Csv,
}

impl From<MetricsFormat> for Format {
    fn from(f: MetricsFormat) -> Self {
        match f {
            MetricsFormat::Json => Format::Json,
            MetricsFormat::Csv => Format::Csv,
        }
    }
}

enum Failure {
    /// Bad arguments, unreadable or malformed input, I/O errors.
    Usage(anyhow::Error),
    /// The engine reached a state that breaks an invariant or the ratio.
    Violation(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => gen(args),
        Command::Run(args) => run(args),
        Command::Verify(args) => verify(args),
        Command::Bench(args) => bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violation(msg)) => {
            eprintln!("violation: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let seq = if args.pattern == "random" {
        gen_random(args.n, args.t, args.p_insert, args.seed)
    } else {
        let pattern: Pattern = args.pattern.parse().map_err(anyhow::Error::from)?;
        gen_named(pattern, args.n, args.seed)
    }
    .map_err(anyhow::Error::from)?;
    let text = workload::serialize(&seq);
    match &args.out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_sequence(path: &Path, teardown: bool) -> anyhow::Result<UpdateSequence> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let seq = workload::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    if teardown {
        Ok(extend_with_teardown(&seq)?)
    } else {
        Ok(seq)
    }
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn recorder(seq: &UpdateSequence, replay: &ReplayArgs) -> anyhow::Result<Recorder> {
    let mut config = Config::new(seq.n, replay.seed);
    if let Some(k) = replay.threshold {
        config = config.with_threshold(k);
    }
    Ok(Recorder::new(config)?.with_generator(seq.generator.clone()))
}

/// Replays `seq`, checking invariants after update `i` whenever
/// `check(i)` holds, plus once at the end.
fn replay(
    seq: &UpdateSequence,
    args: &ReplayArgs,
    mut check: impl FnMut(usize) -> bool,
    mut after: impl FnMut(&Recorder) -> Result<(), Failure>,
) -> Result<RunStats, Failure> {
    let mut rec = recorder(seq, args)?;
    for (i, op) in seq.ops.iter().enumerate() {
        rec.apply(op).map_err(|e: RunError| Failure::Violation(e.to_string()))?;
        if check(i) || i + 1 == seq.len() {
            let report = check_invariants(&rec.state);
            if !report.is_clean() {
                return Err(Failure::Violation(format!("after update {i} ({op}):\n{report}")));
            }
        }
        after(&rec)?;
    }
    if seq.is_empty() {
        let report = check_invariants(&rec.state);
        if !report.is_clean() {
            return Err(Failure::Violation(format!("initial state:\n{report}")));
        }
    }
    let stats = rec.finish();
    if let Some(path) = &args.metrics {
        write_file(path, &export(&stats, args.format.into()))?;
    }
    Ok(stats)
}

fn report(stats: &RunStats) {
    let t = &stats.totals;
    println!(
        "updates={} matching_size={} edge_count={} max_calls={} threshold={}",
        t.updates, t.final_matching_size, t.final_edge_count, t.max_calls, stats.threshold
    );
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let seq = read_sequence(&args.replay.input, args.replay.teardown)?;
    let every = args.verify_every;
    let stats = replay(&seq, &args.replay, |i| every > 0 && (i + 1) % every == 0, |_| Ok(()))?;
    report(&stats);
    Ok(())
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let seq = read_sequence(&args.replay.input, args.replay.teardown)?;
    let (mut checked, mut skipped) = (0usize, 0usize);
    let stats = replay(
        &seq,
        &args.replay,
        |_| true,
        |rec| {
            let Ok(r) = ratio(&rec.state) else {
                // Too large for the exact search.
                skipped += 1;
                return Ok(());
            };
            if !r.within_three_halves() || !r.meets_two_thirds() {
                return Err(Failure::Violation(format!(
                    "after update {}: maximum matching {} but maintained {}",
                    rec.updates() - 1,
                    r.maximum,
                    r.maintained
                )));
            }
            checked += 1;
            Ok(())
        },
    )?;
    report(&stats);
    println!("ratio_checked={checked} ratio_skipped={skipped}");
    Ok(())
}

struct BenchCell {
    n: usize,
    threshold: usize,
    stats: RunStats,
}

fn bench_cell(n: usize, t: usize, p_insert: f64, seed: u64) -> anyhow::Result<BenchCell> {
    let seq = gen_random(n, t, p_insert, seed)?;
    let config = Config::new(n, seed);
    let threshold = config.threshold;
    let mut rec = Recorder::new(config)?;
    for op in &seq.ops {
        rec.apply(op)?;
    }
    Ok(BenchCell {
        n,
        threshold,
        stats: rec.finish(),
    })
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    if args.n_list.is_empty() {
        return Err(anyhow!("--n-list is empty").into());
    }
    let cells: Vec<anyhow::Result<BenchCell>> = thread::scope(|scope| {
        let handles: Vec<_> = args
            .n_list
            .iter()
            .map(|&n| scope.spawn(move || bench_cell(n, args.updates_per_n * n, args.p_insert, args.seed)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("bench worker panicked"))))
            .collect()
    });
    println!("n,threshold,updates,total_wall_ns,amortized_wall_ns,amortized_work,max_calls");
    let mut prev: Option<(usize, f64)> = None;
    for cell in cells {
        let cell = cell?;
        let s = &cell.stats;
        let amortized = s.amortized_wall_ns();
        println!(
            "{},{},{},{},{:.1},{:.2},{}",
            cell.n,
            cell.threshold,
            s.totals.updates,
            s.total_wall_ns(),
            amortized,
            s.amortized_work(),
            s.totals.max_calls
        );
        if let Some((pn, pa)) = prev {
            if pa > 0.0 {
                eprintln!("n {pn} -> {}: amortized time x{:.2}", cell.n, amortized / pa);
            }
        }
        prev = Some((cell.n, amortized));
    }
    Ok(())
}
