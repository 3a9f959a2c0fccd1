//! Command-line frontend for the expirable-store library and its
//! benchmark suite.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::fs;
use std::io::BufReader;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use expire_treap::{Clock, ExpirableStore, ExpirationTime, SweepPolicy};
use expire_treap_bench::report::{emit_rows_csv, emit_summary_csv};
use expire_treap_bench::runner::{parse_lifetime, run_scenario, ScenarioConfig};
use expire_treap_bench::verify::{oracle_replay, ReplayOptions};
use expire_treap_bench::workload::{generate, BModelParams, WorkloadTrace};

/// Seed used when neither `--seed` nor `EXPIRE_TREAP_SEED` is given.
const DEFAULT_SEED: u64 = 0;

#[derive(Parser)]
#[command(
    name = "expire-treap",
    version,
    about = "Expiration-time indexing: workload generation, benchmarks, store demo, verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a bursty workload trace and write it to a file
    Generate {
        /// Bias in [0.5, 1.0); 0.5 is uniform traffic
        #[arg(long)]
        b: f64,
        /// Aggregation level: the trace spans 2^l buckets
        #[arg(long)]
        l: u32,
        /// Total number of records
        #[arg(long)]
        n: u64,
        /// Lifetime spec: fixed:MS | uniform:LO:HI | exp:MEAN | inf
        #[arg(long, default_value = "fixed:1000")]
        lifetime: String,
        /// Simulated duration of one bucket
        #[arg(long, default_value_t = 100)]
        bucket_ms: u64,
        /// RNG seed (default: $EXPIRE_TREAP_SEED, then 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Output trace file
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark scenario described by a key=value config file
    Bench {
        /// Scenario config path
        #[arg(long)]
        config: PathBuf,
        /// Directory for the CSV reports
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a trace file through the expirable store
    Demo {
        /// Trace file produced by `generate`
        #[arg(long)]
        trace: PathBuf,
        /// Expiration sweep cadence in simulated milliseconds
        #[arg(long, default_value_t = 100)]
        cadence: u64,
        /// RNG seed (default: $EXPIRE_TREAP_SEED, then 0)
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the randomised oracle-equivalence suite
    Verify {
        /// Operations per run
        #[arg(long, default_value_t = 10_000)]
        ops: u64,
        /// Seed of the first run (default: $EXPIRE_TREAP_SEED, then 0)
        #[arg(long)]
        seed: Option<u64>,
        /// Number of runs with consecutive seeds
        #[arg(long, default_value_t = 1)]
        runs: u64,
    },
}

fn seed_or_env(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("EXPIRE_TREAP_SEED") {
        Ok(text) => text
            .parse()
            .with_context(|| format!("EXPIRE_TREAP_SEED is not an integer: '{text}'")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate { b, l, n, lifetime, bucket_ms, seed, out } => {
            let seed = seed_or_env(seed)?;
            let lifetime = parse_lifetime(&lifetime)?;
            let params = BModelParams::new(b, l, n, seed)?;
            let trace = generate(&params, &lifetime, bucket_ms)?;
            let mut file = fs::File::create(&out)
                .with_context(|| format!("cannot create {}", out.display()))?;
            trace
                .write_to(&mut file)
                .with_context(|| format!("cannot write {}", out.display()))?;
            println!(
                "wrote {} records over {} buckets to {}",
                trace.total_records(),
                trace.bucket_count(),
                out.display()
            );
            Ok(())
        }
        Command::Bench { config, out } => {
            let text = fs::read_to_string(&config)
                .with_context(|| format!("cannot read {}", config.display()))?;
            let cfg = ScenarioConfig::parse_kv(&text)
                .with_context(|| format!("invalid config {}", config.display()))?;
            fs::create_dir_all(&out)
                .with_context(|| format!("cannot create {}", out.display()))?;
            let report = run_scenario(&cfg)?;
            let rows_path = out.join(format!("{}_rows.csv", cfg.name));
            let summary_path = out.join(format!("{}_summary.csv", cfg.name));
            emit_rows_csv(&report, &rows_path)?;
            emit_summary_csv(&report, &summary_path)?;
            for (metric, value) in &report.summary {
                println!("{metric} = {value}");
            }
            println!("rows: {}", rows_path.display());
            println!("summary: {}", summary_path.display());
            Ok(())
        }
        Command::Demo { trace, cadence, seed } => {
            let seed = seed_or_env(seed)?;
            let file = fs::File::open(&trace)
                .with_context(|| format!("cannot read {}", trace.display()))?;
            let trace = WorkloadTrace::read_from(BufReader::new(file))?;
            demo(&trace, cadence, seed)
        }
        Command::Verify { ops, seed, runs } => {
            if runs == 0 {
                bail!("--runs must be at least 1");
            }
            let seed = seed_or_env(seed)?;
            let mut failures = 0u64;
            for run in 0..runs {
                let opts = ReplayOptions::new(ops, seed + run);
                match oracle_replay(&opts) {
                    Ok(stats) => println!(
                        "seed {}: ok ({} inserts, {} expirations, {} removes, max live {})",
                        seed + run,
                        stats.inserts,
                        stats.expirations,
                        stats.removes,
                        stats.max_live
                    ),
                    Err(msg) => {
                        println!("seed {}: FAILED: {msg}", seed + run);
                        failures += 1;
                    }
                }
            }
            if failures > 0 {
                bail!("{failures}/{runs} verification runs failed");
            }
            Ok(())
        }
    }
}

/// Replay a trace through the store under a simulated clock, counting
/// expirations through the hook.
fn demo(trace: &WorkloadTrace, cadence: u64, seed: u64) -> Result<()> {
    use std::sync::atomic::{AtomicU64, Ordering};
    use std::sync::Arc;

    let mut store: ExpirableStore<u64, u32> = ExpirableStore::with_policy(
        Clock::simulated(0),
        seed,
        SweepPolicy::Cadence { every_ms: cadence },
    );
    let expelled = Arc::new(AtomicU64::new(0));
    let sink = expelled.clone();
    store.set_expiration_hook(move |_, _, _| {
        sink.fetch_add(1, Ordering::Relaxed);
    });

    let mut inserted = 0u64;
    let mut rejected = 0u64;
    let mut peak = 0usize;
    for bucket in &trace.buckets {
        for rec in bucket {
            let exp = match rec.lifetime_ms {
                Some(ms) => ExpirationTime::finite(store.now_ms() + ms),
                None => ExpirationTime::INFINITY,
            };
            match store.put(rec.key, exp, rec.key as u32) {
                Ok(_) => inserted += 1,
                Err(_) => rejected += 1,
            }
            peak = peak.max(store.len());
        }
        store.tick(trace.bucket_ms);
    }
    // Let every finite record run out.
    while store
        .snapshot()
        .min_expiration()
        .is_some_and(|e| e.is_finite())
    {
        store.tick(cadence.max(1));
    }

    println!("records inserted:  {inserted}");
    println!("records rejected:  {rejected}");
    println!("expired via hook:  {}", expelled.load(Ordering::Relaxed));
    println!("peak live size:    {peak}");
    println!("final live size:   {} (never-expiring records)", store.len());
    Ok(())
}
