use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use prefixwatch_core::config::{KPolicy, PipelineConfig, SegmentInput};
use prefixwatch_core::fixture::{generate_fixture, EventKind, FixtureSpec, InjectedEvent};
use prefixwatch_core::ingest::SnapshotFormat;
use prefixwatch_core::pipeline::{self, MEASURE_FILE, UNIQUE_FILE};
use prefixwatch_core::reachability::{normalize, smooth};
use prefixwatch_core::{ErrorClass, EventReport, MeasureSeries};

#[derive(Parser)]
#[command(
    name = "prefixwatch",
    version,
    about = "Control-plane event detection from daily routing-table snapshots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse snapshots and write the daily measures, histograms and UBC tables.
    Ingest(ConfigArgs),
    /// Smooth and normalize a previously written measure series.
    Measure(ConfigArgs),
    /// Segment the measure and classify long-term events.
    Segment(ConfigArgs),
    /// Scan each segment for stochastic events.
    Detect(ConfigArgs),
    /// Rank upstreams of the target AS on every snapshot.
    Ubc(ConfigArgs),
    /// Merge segments and stochastic events into the event report.
    Report(ConfigArgs),
    /// Run every stage.
    Run(ConfigArgs),
    /// Write a seeded synthetic snapshot set.
    Fixture(FixtureArgs),
}

/// A TOML config file plus per-field overrides.
#[derive(Args, Clone, Default)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "snapshot_dir", alias = "snapshot-dir")]
    snapshot_dir: Option<PathBuf>,
    #[arg(long = "snapshot_pattern", alias = "snapshot-pattern")]
    snapshot_pattern: Option<String>,
    #[arg(long = "date_format", alias = "date-format")]
    date_format: Option<String>,
    #[arg(long = "snapshot_format", alias = "snapshot-format", value_parser = parse_with::<SnapshotFormat>)]
    snapshot_format: Option<SnapshotFormat>,
    #[arg(long = "delegation_file", alias = "delegation-file")]
    delegation_file: Option<PathBuf>,
    #[arg(long = "country_code", alias = "country-code")]
    country_code: Option<String>,
    #[arg(long = "x_threshold", alias = "x-threshold")]
    x_threshold: Option<f64>,
    #[arg(long = "smoothing_window", alias = "smoothing-window")]
    smoothing_window: Option<usize>,
    #[arg(long = "max_segments", alias = "max-segments")]
    max_segments: Option<usize>,
    #[arg(long = "k_policy", alias = "k-policy", value_parser = parse_with::<KPolicy>)]
    k_policy: Option<KPolicy>,
    #[arg(long = "min_gain", alias = "min-gain")]
    min_gain: Option<f64>,
    #[arg(long = "long_term_threshold", alias = "long-term-threshold")]
    long_term_threshold: Option<f64>,
    #[arg(long = "aberration_warmup", alias = "aberration-warmup")]
    aberration_warmup: Option<usize>,
    #[arg(long = "max_lag", alias = "max-lag")]
    max_lag: Option<usize>,
    #[arg(long = "segment_input", alias = "segment-input", value_parser = parse_with::<SegmentInput>)]
    segment_input: Option<SegmentInput>,
    #[arg(long = "diff_on_smoothed", alias = "diff-on-smoothed")]
    diff_on_smoothed: Option<bool>,
    /// `p,d,q`
    #[arg(long = "arima_order", alias = "arima-order", value_parser = parse_order)]
    arima_order: Option<[usize; 3]>,
    #[arg(long = "ubc_target_as", alias = "ubc-target-as")]
    ubc_target_as: Option<u32>,
    #[arg(long = "ubc_origin_only", alias = "ubc-origin-only")]
    ubc_origin_only: Option<bool>,
    #[arg(long = "ubc_top_n", alias = "ubc-top-n")]
    ubc_top_n: Option<usize>,
    #[arg(long = "output_dir", alias = "output-dir")]
    output_dir: Option<PathBuf>,
}

fn parse_with<T>(s: &str) -> std::result::Result<T, String>
where
    T: std::str::FromStr<Err = prefixwatch_core::Error>,
{
    s.parse()
        .map_err(|e: prefixwatch_core::Error| e.to_string())
}

fn parse_order(s: &str) -> std::result::Result<[usize; 3], String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| e.to_string())?;
    parts
        .try_into()
        .map_err(|_| format!("expected p,d,q, got `{s}`"))
}

macro_rules! apply {
    ($cfg:ident, $args:ident, $($field:ident),+) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })+
    };
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        let a = self;
        apply!(
            cfg,
            a,
            snapshot_dir,
            snapshot_pattern,
            date_format,
            snapshot_format,
            delegation_file,
            country_code,
            x_threshold,
            smoothing_window,
            max_segments,
            k_policy,
            min_gain,
            long_term_threshold,
            aberration_warmup,
            max_lag,
            segment_input,
            diff_on_smoothed,
            ubc_target_as,
            ubc_origin_only,
            ubc_top_n,
            output_dir
        );
        if let Some(o) = self.arima_order {
            cfg.arima_order = Some(o);
        }
        Ok(cfg)
    }

    /// Config for stages that read snapshots.
    fn for_snapshots(&self) -> Result<PipelineConfig> {
        let cfg = self.resolve()?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Config for stages that only read earlier outputs.
    fn for_outputs(&self) -> Result<PipelineConfig> {
        let cfg = self.resolve()?;
        cfg.validate_ranges()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct FixtureArgs {
    /// TOML fixture spec; flags below override its fields.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long)]
    peers: Option<usize>,
    #[arg(long)]
    base: Option<f64>,
    #[arg(long)]
    trend: Option<f64>,
    #[arg(long = "noise_sigma", alias = "noise-sigma")]
    noise_sigma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "foreign_prefixes", alias = "foreign-prefixes")]
    foreign_prefixes: Option<usize>,
    /// `start:duration:magnitude:kind`, kind `step` or `spike`; repeatable.
    #[arg(long = "event", value_parser = parse_event)]
    events: Vec<InjectedEvent>,
    #[arg(long)]
    out: PathBuf,
}

fn parse_event(s: &str) -> std::result::Result<InjectedEvent, String> {
    let f: Vec<&str> = s.split(':').collect();
    let [start, duration, magnitude, kind] = f[..] else {
        return Err(format!("expected start:duration:magnitude:kind, got `{s}`"));
    };
    let num = |v: &str| v.parse::<usize>().map_err(|e| format!("`{v}`: {e}"));
    Ok(InjectedEvent {
        start: num(start)?,
        duration: num(duration)?,
        magnitude: magnitude
            .parse()
            .map_err(|e| format!("`{magnitude}`: {e}"))?,
        kind: match kind {
            "step" => EventKind::Step,
            "spike" => EventKind::Spike,
            other => return Err(format!("unknown event kind `{other}`")),
        },
    })
}

fn fixture(args: FixtureArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => FixtureSpec::load(path)?,
        None => {
            let (Some(days), Some(peers), Some(base)) = (args.days, args.peers, args.base) else {
                return Err(prefixwatch_core::Error::Config(
                    "--days, --peers and --base are required without --spec".into(),
                )
                .into());
            };
            FixtureSpec::new(days, peers, base)
        }
    };
    let a = &args;
    macro_rules! set {
        ($($f:ident),+) => { $(if let Some(v) = a.$f { spec.$f = v; })+ };
    }
    set!(
        days,
        peers,
        base,
        trend,
        noise_sigma,
        seed,
        foreign_prefixes
    );
    spec.events.extend(args.events.iter().cloned());
    spec.validate()
        .map_err(|e| prefixwatch_core::Error::Config(e.to_string()))?;
    let files = generate_fixture(&spec, &args.out)?;
    println!(
        "wrote {} snapshots and {} to {}",
        files.snapshots.len(),
        files.delegation.file_name().unwrap().to_string_lossy(),
        args.out.display()
    );
    Ok(())
}

fn print_report(r: &EventReport, dir: &Path) {
    println!(
        "{} segments, {} long-term, {} stochastic events ({} to {})",
        r.segments.len(),
        r.long_term.len(),
        r.stochastic.len(),
        r.metadata.start,
        r.metadata.end
    );
    for s in &r.segments {
        println!(
            "  {:>2}  {} .. {}  mean {:>10.1}  diff {:>3}%  long-term {:<3}  stochastic {}",
            s.k,
            s.start_date,
            s.end_date,
            s.mean,
            s.diff_percent,
            if s.long_term { "yes" } else { "no" },
            s.stochastic_count
        );
    }
    for d in &r.diagnostics {
        println!("  note: {d}");
    }
    println!("outputs in {}", dir.display());
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => {
            let cfg = a.for_snapshots()?;
            let days = pipeline::ingest(&cfg)?;
            pipeline::write_ingest_outputs(&cfg.output_dir, &days, &cfg)?;
            println!(
                "ingested {} snapshots into {}",
                days.len(),
                cfg.output_dir.display()
            );
        }
        Command::Measure(a) => {
            let cfg = a.for_outputs()?;
            let dir = &cfg.output_dir;
            let m = pipeline::read_series(dir, MEASURE_FILE, Some(cfg.x_threshold))?;
            let s = smooth(&m, cfg.smoothing_window)?;
            s.write_csv(std::fs::File::create(dir.join(pipeline::SMOOTHED_FILE))?)?;
            let n = MeasureSeries::new(m.dates().to_vec(), normalize(&m)?, None)?;
            n.write_csv(std::fs::File::create(dir.join(pipeline::NORMALIZED_FILE))?)?;
            println!("wrote smoothed and normalized series to {}", dir.display());
        }
        Command::Segment(a) => {
            let cfg = a.for_outputs()?;
            let dir = &cfg.output_dir;
            let m = pipeline::read_series(dir, MEASURE_FILE, Some(cfg.x_threshold))?;
            let u = pipeline::read_series(dir, UNIQUE_FILE, None)?;
            let s = pipeline::segment(&m, &u, &cfg)?;
            pipeline::write_segment_outputs(dir, &m, &s)?;
            let events = s.classes.iter().filter(|c| c.is_event).count();
            println!("k = {}, {events} long-term events", s.k);
        }
        Command::Detect(a) => {
            let cfg = a.for_outputs()?;
            let dir = &cfg.output_dir;
            let m = pipeline::read_series(dir, MEASURE_FILE, Some(cfg.x_threshold))?;
            let u = pipeline::read_series(dir, UNIQUE_FILE, None)?;
            let classes = pipeline::read_classes(dir, &m, &u, &cfg)?;
            let d = pipeline::detect(&m, &classes, &cfg)?;
            pipeline::write_detect_outputs(dir, &d)?;
            pipeline::write_correlograms(dir, &m, &classes, cfg.max_lag)?;
            println!("{} stochastic events", d.events.len());
        }
        Command::Report(a) => {
            let cfg = a.for_outputs()?;
            let dir = &cfg.output_dir;
            let m = pipeline::read_series(dir, MEASURE_FILE, Some(cfg.x_threshold))?;
            let u = pipeline::read_series(dir, UNIQUE_FILE, None)?;
            let classes = pipeline::read_classes(dir, &m, &u, &cfg)?;
            let d = pipeline::read_detect_outputs(dir)?;
            let r = pipeline::report(&m, &classes, &d, &cfg, Vec::new())?;
            pipeline::write_report_outputs(dir, &r)?;
            print_report(&r, dir);
        }
        Command::Ubc(a) => {
            let cfg = a.for_snapshots()?;
            let stats = pipeline::ubc_stats(&cfg)?;
            std::fs::create_dir_all(&cfg.output_dir)?;
            pipeline::write_ubc_outputs(&cfg.output_dir, stats, cfg.ubc_top_n)?;
            println!("wrote upstream rankings to {}", cfg.output_dir.display());
        }
        Command::Run(a) => {
            let cfg = a.for_snapshots()?;
            let r = pipeline::run_pipeline(&cfg)?;
            print_report(&r, &cfg.output_dir);
        }
        Command::Fixture(a) => fixture(a)?,
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err
        .chain()
        .find_map(|e| e.downcast_ref::<prefixwatch_core::Error>())
        .map(prefixwatch_core::Error::class)
    {
        Some(ErrorClass::Config) => 1,
        Some(ErrorClass::Numerical) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
