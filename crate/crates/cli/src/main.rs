use std::fs::File;
use std::io::{self, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};
use likemind_core::dataset::load_dataset;
use likemind_core::simulator::{hr_rows, simulate, simulate_baseline, BaselineKind, SimulationConfig, Strategy};
use likemind_core::synth::{SynthCity, SynthConfig};
use likemind_core::{Budget, Dataset, Engine, EngineParams, LoadConfig};
use likemind_server::ServerConfig;
use tracing_subscriber::EnvFilter;

/// Explainable POI recommendations from look-alike visitor groups.
#[derive(Debug, Parser)]
#[command(name = "likemind", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load JSON-lines check-in files and write a binary snapshot.
    Ingest(IngestArgs),
    /// Write a seeded synthetic city as JSON-lines files.
    Synth(SynthArgs),
    /// Run the hit-ratio simulation and write a CSV report.
    Simulate(SimulateArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    pois: PathBuf,
    #[arg(long)]
    visitors: PathBuf,
    #[arg(long)]
    checkins: PathBuf,
    /// Snapshot file to write.
    #[arg(long)]
    out: PathBuf,
    /// Fail on check-ins that reference unknown POIs or visitors.
    #[arg(long)]
    strict: bool,
    /// Minutes added to timestamps that carry a UTC offset.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    utc_offset_minutes: i32,
    /// Fit demographic cut points to this dataset's quartiles.
    #[arg(long)]
    refit_buckets: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Directory for pois.jsonl, visitors.jsonl and checkins.jsonl.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// A few hundred check-ins instead of ~50k.
    #[arg(long)]
    small: bool,
    /// Also write a snapshot of the loaded city.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Source {
    /// Snapshot written by `ingest`, or a directory holding pois.jsonl, visitors.jsonl and
    /// checkins.jsonl.
    #[arg(long, env = "LIKEMIND_DATASET", conflicts_with = "synthetic")]
    dataset: Option<PathBuf>,
    /// Use the synthetic city generated with this seed.
    #[arg(long, value_name = "SEED")]
    synthetic: Option<u64>,
}

impl Source {
    fn load(&self) -> Result<Dataset> {
        match (&self.dataset, self.synthetic) {
            (Some(path), _) => open_dataset(path),
            (None, Some(seed)) => Ok(SynthCity::generate(&SynthConfig {
                seed,
                ..SynthConfig::default()
            })
            .load(&LoadConfig::default())?),
            (None, None) => bail!("pass --dataset (or set LIKEMIND_DATASET) or --synthetic <SEED>"),
        }
    }
}

#[derive(Debug, Args)]
struct Tuning {
    /// Radius in metres.
    #[arg(long = "r", default_value_t = 500.0)]
    r: f64,
    /// Groups per recommendation.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// POIs per group.
    #[arg(long, default_value_t = 5)]
    k_prime: usize,
    /// Relevance threshold.
    #[arg(long, default_value_t = 0.01)]
    sigma: f64,
}

impl Tuning {
    fn apply(&self, p: EngineParams) -> EngineParams {
        EngineParams {
            radius_m: self.r,
            k: self.k,
            k_prime: self.k_prime,
            sigma: self.sigma,
            ..p
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long, default_value_t = 100)]
    sessions: usize,
    #[arg(long, default_value_t = 50)]
    iterations: usize,
    #[arg(long, default_value_t = Strategy::Random)]
    group_strategy: Strategy,
    #[arg(long, default_value_t = Strategy::Random)]
    mindset_strategy: Strategy,
    /// Probability of keeping the current mindset.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Swap evaluations per iteration.
    #[arg(long, default_value_t = 1000)]
    swaps: u64,
    /// Keep bookmarked POIs in the display lists.
    #[arg(long)]
    show_bookmarked: bool,
    /// Also emit rows for a baseline; repeatable.
    #[arg(long)]
    baseline: Vec<BaselineKind>,
    /// CSV output; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long, env = "LIKEMIND_BIND", default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Time limit of the optimizer per recommendation, in milliseconds.
    #[arg(long, default_value_t = 100, conflicts_with = "swaps")]
    budget_ms: u64,
    /// Use a swap-count budget instead of the time limit.
    #[arg(long)]
    swaps: Option<u64>,
    /// Idle sessions are dropped after this many seconds.
    #[arg(long, default_value_t = 1800)]
    session_ttl_secs: u64,
    /// Allowed CORS origin; repeatable, `*` for any.
    #[arg(long = "cors-origin")]
    cors_origins: Vec<String>,
    /// Seeded session ids and logical timestamps for replayable responses.
    #[arg(long)]
    replay_seed: Option<u64>,
}

fn open_dataset(path: &Path) -> Result<Dataset> {
    if path.is_dir() {
        let open = |name: &str| -> Result<BufReader<File>> {
            let p = path.join(name);
            Ok(BufReader::new(File::open(&p).with_context(|| format!("opening {}", p.display()))?))
        };
        let (ds, report) = load_dataset(
            open("pois.jsonl")?,
            open("visitors.jsonl")?,
            open("checkins.jsonl")?,
            &LoadConfig::default(),
        )?;
        if report.skipped_checkins > 0 {
            tracing::warn!(skipped = report.skipped_checkins, "skipped dangling check-ins");
        }
        Ok(ds)
    } else {
        Dataset::open_snapshot(path).with_context(|| format!("reading snapshot {}", path.display()))
    }
}

fn write_snapshot(ds: &Dataset, out: &Path) -> Result<()> {
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut writer = io::BufWriter::new(file);
    ds.write_snapshot(&mut writer)?;
    writer.flush()?;
    Ok(())
}

fn summary(ds: &Dataset) -> String {
    format!(
        "{} POIs, {} visitors, {} check-ins, {} categories",
        ds.pois().len(),
        ds.visitors().len(),
        ds.checkins().len(),
        ds.category_names().len()
    )
}

fn ingest(args: IngestArgs) -> Result<()> {
    let open = |p: &Path| -> Result<BufReader<File>> {
        Ok(BufReader::new(File::open(p).with_context(|| format!("opening {}", p.display()))?))
    };
    let config = LoadConfig {
        strict: args.strict,
        utc_offset_minutes: args.utc_offset_minutes,
        refit_buckets: args.refit_buckets,
    };
    let (ds, report) = load_dataset(open(&args.pois)?, open(&args.visitors)?, open(&args.checkins)?, &config)?;
    write_snapshot(&ds, &args.out)?;
    eprintln!("loaded {}; skipped {} check-ins", summary(&ds), report.skipped_checkins);
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let cfg = if args.small {
        SynthConfig::small(args.seed)
    } else {
        SynthConfig {
            seed: args.seed,
            ..SynthConfig::default()
        }
    };
    let city = SynthCity::generate(&cfg);
    city.write_dir(&args.out)?;
    if let Some(path) = &args.snapshot {
        write_snapshot(&city.load(&LoadConfig::default())?, path)?;
    }
    eprintln!("wrote synthetic city to {}", args.out.display());
    Ok(())
}

fn run_simulation(args: SimulateArgs) -> Result<()> {
    let ds = args.source.load()?;
    let engine = Engine::new(Arc::new(ds));
    let defaults = SimulationConfig::default();
    let config = SimulationConfig {
        sessions: args.sessions,
        iterations: args.iterations,
        group_strategy: args.group_strategy,
        mindset_strategy: args.mindset_strategy,
        theta: args.theta,
        seed: args.seed,
        engine: EngineParams {
            budget: Budget::Swaps { max: args.swaps },
            hide_bookmarked: !args.show_bookmarked,
            ..args.tuning.apply(defaults.engine)
        },
    };
    let traces = simulate(&engine, &config)?;
    let hits: Vec<Vec<bool>> = traces.iter().map(|t| t.hits()).collect();
    let mut rows = hr_rows(&hits, &config, "likemind");
    for kind in &args.baseline {
        let hits = simulate_baseline(&engine, &config, *kind)?;
        rows.extend(hr_rows(&hits, &config, kind.name()));
    }

    let out: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut csv = csv::Writer::from_writer(out);
    for row in &rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    if let Some(last) = rows.iter().filter(|r| r.method == "likemind").last() {
        eprintln!("HR_I@{n} = {:.3}, HR_S@{n} = {:.3}", last.hr_i, last.hr_s, n = last.n);
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<()> {
    let ds = args.source.load()?;
    eprintln!("loaded {}", summary(&ds));
    let budget = match args.swaps {
        Some(max) => Budget::Swaps { max },
        None => Budget::WallClock { millis: args.budget_ms },
    };
    let engine_params = EngineParams {
        budget,
        ..args.tuning.apply(EngineParams::default())
    };
    engine_params.validate()?;
    let config = ServerConfig {
        bind: args.bind,
        engine: engine_params,
        session_ttl: Duration::from_secs(args.session_ttl_secs),
        cors_origins: args.cors_origins,
        replay_seed: args.replay_seed,
    };
    let engine = Arc::new(Engine::new(Arc::new(ds)));
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(likemind_server::serve(engine, config))?;
    Ok(())
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(io::stderr)
        .init();
    match Cli::parse().command {
        Command::Ingest(a) => ingest(a),
        Command::Synth(a) => synth(a),
        Command::Simulate(a) => run_simulation(a),
        Command::Serve(a) => serve(a),
    }
}
