//! End-to-end batch pipeline and its per-stage pieces.
//!
//! Stages: ingest (parallel over snapshot files) → measures → segmentation →
//! long-term classification → per-segment aberration detection → report.
//! Each stage reads and writes the CSV/JSON files named by the `*_FILE`
//! constants so it can be re-run on its own.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aberration::{
    assemble_report, detect_stochastic, write_forecasts_csv, AberrationEvent, EventReport,
    ForecastRow, ReportMetadata,
};
use crate::arima::{acf, pacf, select_order, ArimaOrder};
use crate::changepoint::{
    choose_k, classify_long_term, cusum, median_filter3, segneigh_mean, LongTermClass, Segmentation,
};
use crate::config::{KPolicy, PipelineConfig, SegmentInput, ALL_COUNTRIES};
use crate::error::{Error, Result};
use crate::ingest::{extract_country_asns, parse_delegation, parse_snapshot, ParseSummary};
use crate::reachability::{
    build_peer_set, normalize, peer_bin_histogram, smooth, x_percent_count, BinConfig,
    CountryFilter, PeerId,
};
use crate::series::MeasureSeries;
use crate::ubc::{
    compute_ubc, rank_upstreams, write_rank_changes_csv, write_ubc_csv, UpstreamStat,
};

pub const MIN_SNAPSHOTS: usize = 30;

pub const INGEST_SUMMARY_FILE: &str = "ingest_summary.csv";
pub const PEER_COUNTS_FILE: &str = "peer_counts.csv";
pub const UNIQUE_FILE: &str = "unique_prefixes.csv";
pub const MEASURE_FILE: &str = "measure.csv";
pub const SMOOTHED_FILE: &str = "measure_smoothed.csv";
pub const NORMALIZED_FILE: &str = "measure_normalized.csv";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const PER_PEER_FILE: &str = "per_peer.csv";
pub const CUSUM_FILE: &str = "cusum.csv";
pub const SEGMENTS_FILE: &str = "segments.csv";
pub const FORECASTS_FILE: &str = "forecasts.csv";
pub const DETECTION_FILE: &str = "stochastic.json";
pub const CORRELOGRAM_FILE: &str = "correlograms.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const REPORT_FILE: &str = "report.json";
pub const UBC_FILE: &str = "ubc.csv";
pub const RANK_CHANGES_FILE: &str = "rank_changes.csv";
pub const PLOT_FILE: &str = "plot.csv";

/// Everything the later stages need from one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct DaySummary {
    pub date: NaiveDate,
    pub parse: ParseSummary,
    pub contiguous: bool,
    /// Announced-prefix count per present feed (0 when nothing passed the
    /// country filter).
    pub per_peer: BTreeMap<PeerId, usize>,
    pub n_t: usize,
    pub unique: usize,
    pub x_count: usize,
    pub histogram: Vec<usize>,
    pub ubc: UpstreamStat,
}

/// Snapshot files in `cfg.snapshot_dir` matching the pattern, by date.
pub fn discover_snapshots(cfg: &PipelineConfig) -> Result<Vec<(NaiveDate, PathBuf)>> {
    let (head, tail) = cfg
        .snapshot_pattern
        .split_once("{date}")
        .ok_or_else(|| Error::Config("snapshot_pattern lacks {date}".into()))?;
    let mut found = Vec::new();
    for entry in fs::read_dir(&cfg.snapshot_dir)? {
        let entry = entry?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        let Some(mid) = name.strip_prefix(head).and_then(|r| r.strip_suffix(tail)) else {
            continue;
        };
        if let Ok(date) = NaiveDate::parse_from_str(mid, &cfg.date_format) {
            found.push((date, entry.path()));
        }
    }
    found.sort();
    Ok(found)
}

/// Origin-AS filter for the configured country.
pub fn country_filter(cfg: &PipelineConfig) -> Result<CountryFilter> {
    if cfg.country_code == ALL_COUNTRIES {
        return Ok(CountryFilter::All);
    }
    let file = File::open(&cfg.delegation_file)
        .map_err(|e| Error::Config(format!("{}: {e}", cfg.delegation_file.display())))?;
    let parsed =
        parse_delegation(BufReader::new(file)).map_err(|e| e.in_stage("delegation", None))?;
    let asns = extract_country_asns(&parsed.records, &cfg.country_code);
    if asns.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no allocated ASNs for country {} in {}",
            cfg.country_code,
            cfg.delegation_file.display()
        ))
        .in_stage("delegation", None));
    }
    Ok(CountryFilter::Origins(asns))
}

fn ingest_one(
    cfg: &PipelineConfig,
    filter: &CountryFilter,
    bins: &BinConfig,
    date: NaiveDate,
    path: &Path,
) -> Result<DaySummary> {
    let file = File::open(path)?;
    let snap = parse_snapshot(BufReader::new(file), cfg.snapshot_format, date)?;
    let peers = build_peer_set(&snap, filter)?;
    let per_peer = peers
        .present()
        .iter()
        .map(|p| (*p, peers.announced_count(p).unwrap_or(0)))
        .collect();
    let ubc = compute_ubc(&snap, cfg.ubc_target_as, cfg.ubc_origin_only)?;
    Ok(DaySummary {
        date,
        parse: snap.summary,
        contiguous: snap.contiguous,
        per_peer,
        n_t: peers.n_t(),
        unique: peers.unique_prefixes(),
        x_count: x_percent_count(&peers, cfg.x_threshold),
        histogram: peer_bin_histogram(&peers, bins),
        ubc,
    })
}

/// Parses every snapshot in parallel and reduces each to a [`DaySummary`].
pub fn ingest(cfg: &PipelineConfig) -> Result<Vec<DaySummary>> {
    let filter = country_filter(cfg)?;
    let files = discover_snapshots(cfg).map_err(|e| e.in_stage("ingest", None))?;
    if files.len() < MIN_SNAPSHOTS {
        return Err(Error::InvalidInput(format!(
            "found {} snapshots in {}, need at least {MIN_SNAPSHOTS}",
            files.len(),
            cfg.snapshot_dir.display()
        ))
        .in_stage("ingest", None));
    }
    let bins = BinConfig::default();
    files
        .par_iter()
        .map(|(date, path)| {
            ingest_one(cfg, &filter, &bins, *date, path)
                .map_err(|e| e.in_stage("ingest", Some(*date)))
        })
        .collect()
}

/// Upstream statistics of every snapshot, without the country measures.
pub fn ubc_stats(cfg: &PipelineConfig) -> Result<Vec<UpstreamStat>> {
    let files = discover_snapshots(cfg).map_err(|e| e.in_stage("ubc", None))?;
    if files.is_empty() {
        return Err(
            Error::InvalidInput(format!("no snapshots in {}", cfg.snapshot_dir.display()))
                .in_stage("ubc", None),
        );
    }
    files
        .par_iter()
        .map(|(date, path)| {
            let snap = parse_snapshot(
                BufReader::new(File::open(path)?),
                cfg.snapshot_format,
                *date,
            )?;
            compute_ubc(&snap, cfg.ubc_target_as, cfg.ubc_origin_only)
        })
        .collect::<Result<Vec<_>>>()
}

/// Daily series derived from the ingest summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Measures {
    pub peer_counts: MeasureSeries,
    pub unique: MeasureSeries,
    pub measure: MeasureSeries,
}

pub fn measures(days: &[DaySummary], x: f64) -> Result<Measures> {
    let dates: Vec<NaiveDate> = days.iter().map(|d| d.date).collect();
    let series = |f: &dyn Fn(&DaySummary) -> usize, x: Option<f64>| {
        MeasureSeries::new(dates.clone(), days.iter().map(|d| f(d) as f64).collect(), x)
    };
    Ok(Measures {
        peer_counts: series(&|d| d.n_t, None)?,
        unique: series(&|d| d.unique, None)?,
        measure: series(&|d| d.x_count, Some(x))?,
    })
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn open(dir: &Path, name: &str) -> Result<BufReader<File>> {
    let path = dir.join(name);
    File::open(&path)
        .map(BufReader::new)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// Writes the ingest-stage files.
pub fn write_ingest_outputs(
    dir: &Path,
    days: &[DaySummary],
    cfg: &PipelineConfig,
) -> Result<Measures> {
    fs::create_dir_all(dir)?;
    let m = measures(days, cfg.x_threshold)?;
    m.peer_counts.write_csv(create(dir, PEER_COUNTS_FILE)?)?;
    m.unique.write_csv(create(dir, UNIQUE_FILE)?)?;
    m.measure.write_csv(create(dir, MEASURE_FILE)?)?;

    let mut out = csv::Writer::from_writer(create(dir, INGEST_SUMMARY_FILE)?);
    out.write_record(["date", "route_lines", "valid", "skipped", "contiguous"])?;
    for d in days {
        out.write_record([
            d.date.to_string(),
            d.parse.route_lines.to_string(),
            d.parse.valid.to_string(),
            d.parse.skipped.to_string(),
            d.contiguous.to_string(),
        ])?;
    }
    out.flush()?;

    let bins = BinConfig::default();
    let rows: Vec<_> = days
        .iter()
        .map(|d| (d.date, d.unique, d.histogram.clone()))
        .collect();
    crate::reachability::write_histogram_csv(create(dir, HISTOGRAM_FILE)?, &bins, &rows)?;

    let all_peers: std::collections::BTreeSet<PeerId> = days
        .iter()
        .flat_map(|d| d.per_peer.keys().copied())
        .collect();
    let per_peer: BTreeMap<PeerId, Vec<Option<usize>>> = all_peers
        .into_iter()
        .map(|p| {
            (
                p,
                days.iter().map(|d| d.per_peer.get(&p).copied()).collect(),
            )
        })
        .collect();
    let dates: Vec<NaiveDate> = days.iter().map(|d| d.date).collect();
    crate::reachability::write_per_peer_csv(create(dir, PER_PEER_FILE)?, &dates, &per_peer)?;

    write_ubc_outputs(
        dir,
        days.iter().map(|d| d.ubc.clone()).collect(),
        cfg.ubc_top_n,
    )?;
    Ok(m)
}

pub fn write_ubc_outputs(dir: &Path, stats: Vec<UpstreamStat>, top_n: usize) -> Result<()> {
    let ranked = rank_upstreams(&stats, top_n).map_err(|e| e.in_stage("ubc", None))?;
    write_ubc_csv(create(dir, UBC_FILE)?, &ranked)?;
    write_rank_changes_csv(create(dir, RANK_CHANGES_FILE)?, &ranked)?;
    Ok(())
}

/// Result of the segmentation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentStage {
    pub smoothed: MeasureSeries,
    /// The series the change points were searched on.
    pub input: Vec<f64>,
    pub k: usize,
    pub costs: Vec<f64>,
    pub classes: Vec<LongTermClass>,
}

/// Change-point segmentation and long-term classification.
pub fn segment(
    measure: &MeasureSeries,
    unique: &MeasureSeries,
    cfg: &PipelineConfig,
) -> Result<SegmentStage> {
    let stage = |e: Error| e.in_stage("segment", None);
    if measure.dates() != unique.dates() {
        return Err(stage(Error::InvalidInput(
            "measure and unique-prefix series cover different dates".into(),
        )));
    }
    let smoothed = smooth(measure, cfg.smoothing_window).map_err(stage)?;
    let input = match cfg.segment_input {
        SegmentInput::Median3 => median_filter3(measure.values()),
        SegmentInput::Raw => measure.values().to_vec(),
        SegmentInput::Smoothed => smoothed.values().to_vec(),
    };
    let max_k = cfg.max_segments.min(input.len());
    let segs = segneigh_mean(&input, max_k).map_err(stage)?;
    let k = match cfg.k_policy {
        KPolicy::Auto => choose_k(&segs, cfg.min_gain),
        KPolicy::Fixed => max_k,
    };
    let bounds = segs[k - 1].bounds();
    let classes = classify(measure, unique, &bounds, cfg).map_err(stage)?;
    Ok(SegmentStage {
        smoothed,
        input,
        k,
        costs: segs.iter().map(|s| s.total_cost).collect(),
        classes,
    })
}

/// Long-term classification of fixed segment bounds.
pub fn classify(
    measure: &MeasureSeries,
    unique: &MeasureSeries,
    bounds: &[(usize, usize)],
    cfg: &PipelineConfig,
) -> Result<Vec<LongTermClass>> {
    let (m, u) = if cfg.diff_on_smoothed {
        (
            smooth(measure, cfg.smoothing_window)?.values().to_vec(),
            smooth(unique, cfg.smoothing_window)?.values().to_vec(),
        )
    } else {
        (measure.values().to_vec(), unique.values().to_vec())
    };
    let seg = Segmentation::from_bounds(&m, bounds)?;
    let reference = Segmentation::from_bounds(&u, bounds)?;
    let means: Vec<f64> = reference.segments.iter().map(|s| s.mean).collect();
    classify_long_term(&seg, &means, cfg.long_term_threshold)
}

pub fn write_segment_outputs(dir: &Path, measure: &MeasureSeries, s: &SegmentStage) -> Result<()> {
    fs::create_dir_all(dir)?;
    s.smoothed.write_csv(create(dir, SMOOTHED_FILE)?)?;
    measure
        .with_values(cusum(&s.input))
        .write_csv(create(dir, CUSUM_FILE)?)?;
    crate::changepoint::write_segments_csv(create(dir, SEGMENTS_FILE)?, measure.dates(), &s.classes)
}

/// Stochastic events of every segment plus the rolling forecasts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectStage {
    pub events: Vec<AberrationEvent>,
    pub forecasts: Vec<ForecastRow>,
    pub orders: Vec<Option<ArimaOrder>>,
    pub diagnostics: Vec<String>,
}

fn segment_order(values: &[f64], cfg: &PipelineConfig) -> (ArimaOrder, Option<String>) {
    if let Some(o) = cfg.arima_order() {
        return (o, None);
    }
    let warm = &values[..cfg.aberration_warmup.min(values.len())];
    let lag = cfg.max_lag.min(warm.len() / 2);
    if lag == 0 {
        return (ArimaOrder::new(0, 0, 0), None);
    }
    match select_order(warm, lag) {
        Ok(mut o) => {
            // keep the order fittable on the warm-up window
            while o.min_observations() > warm.len() && o.p + o.q > 0 {
                if o.q >= o.p {
                    o.q -= 1;
                } else {
                    o.p -= 1;
                }
            }
            (o, None)
        }
        Err(Error::ZeroVariance) => (ArimaOrder::new(0, 0, 0), None),
        Err(e) => (
            ArimaOrder::new(0, 0, 0),
            Some(format!("order selection failed ({e}); using ARIMA(0,0,0)")),
        ),
    }
}

/// Runs aberration detection inside each segment on the raw measure.
pub fn detect(
    measure: &MeasureSeries,
    classes: &[LongTermClass],
    cfg: &PipelineConfig,
) -> Result<DetectStage> {
    let dates = measure.dates();
    let values = measure.values();
    let warmup = cfg.aberration_warmup;
    let per_segment: Vec<_> = classes
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let (s, e) = (c.segment.start, c.segment.end);
            let mut diags = Vec::new();
            if e >= values.len() {
                return Err(Error::InvalidInput(format!(
                    "segment {} beyond series end",
                    i + 1
                )));
            }
            if e + 1 - s <= warmup {
                diags.push(format!(
                    "segment {} ({}..{}) not longer than the {warmup}-day warm-up; not scanned",
                    i + 1,
                    dates[s],
                    dates[e]
                ));
                return Ok((Vec::new(), Vec::new(), None, diags));
            }
            let (order, note) = segment_order(&values[s..=e], cfg);
            if let Some(n) = note {
                diags.push(format!("segment {}: {n}", i + 1));
            }
            let det = detect_stochastic(&dates[s..=e], &values[s..=e], order, warmup)
                .map_err(|err| err.in_stage("detect", Some(dates[s])))?;
            if let Some(d) = det.diagnostic {
                diags.push(format!("segment {}: {d}", i + 1));
            }
            let events = det
                .events
                .into_iter()
                .map(|mut ev| {
                    ev.index += s;
                    ev
                })
                .collect::<Vec<_>>();
            let forecasts = det
                .forecasts
                .into_iter()
                .map(|mut f| {
                    f.index += s;
                    f
                })
                .collect::<Vec<_>>();
            Ok((events, forecasts, Some(order), diags))
        })
        .collect::<Result<_>>()?;

    let mut out = DetectStage {
        events: Vec::new(),
        forecasts: Vec::new(),
        orders: Vec::new(),
        diagnostics: Vec::new(),
    };
    for (ev, fc, order, diags) in per_segment {
        out.events.extend(ev);
        out.forecasts.extend(fc);
        out.orders.push(order);
        out.diagnostics.extend(diags);
    }
    Ok(out)
}

pub fn write_detect_outputs(dir: &Path, d: &DetectStage) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_forecasts_csv(create(dir, FORECASTS_FILE)?, &d.forecasts)?;
    let mut w = create(dir, DETECTION_FILE)?;
    serde_json::to_writer_pretty(&mut w, d)?;
    w.flush()?;
    Ok(())
}

/// `segment,lag,acf,pacf,band` over each whole segment, up to
/// `min(max_lag, len / 2)`. Constant segments are left out.
pub fn write_correlograms(
    dir: &Path,
    measure: &MeasureSeries,
    classes: &[LongTermClass],
    max_lag: usize,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(create(dir, CORRELOGRAM_FILE)?);
    out.write_record(["segment", "lag", "acf", "pacf", "band"])?;
    for (i, c) in classes.iter().enumerate() {
        let values = &measure.values()[c.segment.start..=c.segment.end];
        let lag = max_lag.min(values.len() / 2);
        if lag == 0 {
            continue;
        }
        let (r, phi) = match (acf(values, lag), pacf(values, lag)) {
            (Ok(r), Ok(phi)) => (r, phi),
            (Err(Error::ZeroVariance), _) | (_, Err(Error::ZeroVariance)) => continue,
            (Err(e), _) | (_, Err(e)) => return Err(e.in_stage("detect", None)),
        };
        for k in 1..=lag {
            out.write_record([
                (i + 1).to_string(),
                k.to_string(),
                r.coefficients[k].to_string(),
                phi.coefficients[k].to_string(),
                r.significance_band.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_detect_outputs(dir: &Path) -> Result<DetectStage> {
    Ok(serde_json::from_reader(open(dir, DETECTION_FILE)?)?)
}

pub fn read_series(dir: &Path, name: &str, x: Option<f64>) -> Result<MeasureSeries> {
    MeasureSeries::read_csv(open(dir, name)?, x)
}

/// Re-derives the classification from a previously written `segments.csv`.
pub fn read_classes(
    dir: &Path,
    measure: &MeasureSeries,
    unique: &MeasureSeries,
    cfg: &PipelineConfig,
) -> Result<Vec<LongTermClass>> {
    let bounds =
        crate::changepoint::read_segment_bounds(open(dir, SEGMENTS_FILE)?, measure.dates())?;
    classify(measure, unique, &bounds, cfg)
}

pub fn report(
    measure: &MeasureSeries,
    classes: &[LongTermClass],
    detection: &DetectStage,
    cfg: &PipelineConfig,
    mut diagnostics: Vec<String>,
) -> Result<EventReport> {
    let dates = measure.dates();
    let metadata = ReportMetadata {
        country: cfg.country_code.clone(),
        x_threshold: cfg.x_threshold,
        start: dates[0],
        end: dates[dates.len() - 1],
    };
    diagnostics.extend(detection.diagnostics.iter().cloned());
    assemble_report(
        dates,
        classes,
        detection.events.clone(),
        metadata,
        diagnostics,
    )
    .map_err(|e| e.in_stage("report", None))
}

pub fn write_report_outputs(dir: &Path, r: &EventReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    r.write_events_csv(create(dir, EVENTS_FILE)?)?;
    let mut w = create(dir, REPORT_FILE)?;
    r.write_json(&mut w)?;
    w.flush()?;
    Ok(())
}

/// Tidy `date,series,value` rows for external plotting.
pub fn write_plot_csv<W: Write>(
    w: W,
    m: &Measures,
    s: &SegmentStage,
    normalized: Option<&[f64]>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["date", "series", "value"])?;
    let seg_means: Vec<f64> = s
        .classes
        .iter()
        .flat_map(|c| std::iter::repeat(c.segment.mean).take(c.segment.len()))
        .collect();
    let cs = cusum(&s.input);
    let mut series: Vec<(&str, &[f64])> = vec![
        ("peers", m.peer_counts.values()),
        ("unique", m.unique.values()),
        ("measure", m.measure.values()),
        ("smoothed", s.smoothed.values()),
        ("segment_mean", &seg_means),
        ("cusum", &cs),
    ];
    if let Some(n) = normalized {
        series.push(("normalized", n));
    }
    for (name, values) in series {
        for (d, v) in m.measure.dates().iter().zip(values) {
            out.write_record([d.to_string(), name.to_string(), v.to_string()])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Runs every stage and writes all outputs into `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<EventReport> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    let days = ingest(cfg)?;
    let m = write_ingest_outputs(dir, &days, cfg).map_err(|e| e.in_stage("ingest", None))?;
    drop(days);

    let mut diagnostics = Vec::new();
    let normalized = match normalize(&m.measure) {
        Ok(n) => {
            m.measure
                .with_values(n.clone())
                .write_csv(create(dir, NORMALIZED_FILE)?)?;
            Some(n)
        }
        Err(Error::DegenerateRange) => {
            diagnostics.push("measure is constant; normalized series omitted".to_string());
            None
        }
        Err(e) => return Err(e.in_stage("measure", None)),
    };

    let seg = segment(&m.measure, &m.unique, cfg)?;
    write_segment_outputs(dir, &m.measure, &seg)?;
    let det = detect(&m.measure, &seg.classes, cfg)?;
    write_detect_outputs(dir, &det)?;
    write_correlograms(dir, &m.measure, &seg.classes, cfg.max_lag)?;
    let r = report(&m.measure, &seg.classes, &det, cfg, diagnostics)?;
    write_report_outputs(dir, &r)?;
    write_plot_csv(create(dir, PLOT_FILE)?, &m, &seg, normalized.as_deref())?;
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::{generate_fixture, EventKind, FixtureSpec, InjectedEvent};

    fn config_for(dir: &Path) -> PipelineConfig {
        PipelineConfig {
            snapshot_dir: dir.join("snap"),
            delegation_file: dir.join("snap").join(crate::fixture::DELEGATION_FILE_NAME),
            output_dir: dir.join("out"),
            ..Default::default()
        }
    }

    #[test]
    fn too_few_snapshots() {
        let tmp = tempfile::tempdir().unwrap();
        generate_fixture(&FixtureSpec::new(5, 3, 20.0), &tmp.path().join("snap")).unwrap();
        let err = run_pipeline(&config_for(tmp.path())).unwrap_err();
        assert_eq!(err.class(), crate::error::ErrorClass::Data);
        assert!(err.to_string().contains("ingest"));
    }

    #[test]
    fn step_and_spike_fixture() {
        let tmp = tempfile::tempdir().unwrap();
        let mut spec = FixtureSpec::new(120, 6, 400.0);
        spec.foreign_prefixes = 10;
        spec.events = vec![
            InjectedEvent {
                start: 50,
                duration: 30,
                magnitude: 0.4,
                kind: EventKind::Step,
            },
            InjectedEvent {
                start: 110,
                duration: 1,
                magnitude: 0.2,
                kind: EventKind::Spike,
            },
        ];
        generate_fixture(&spec, &tmp.path().join("snap")).unwrap();
        let cfg = config_for(tmp.path());
        let r = run_pipeline(&cfg).unwrap();
        assert_eq!(r.long_term.len(), 1);
        assert_eq!(r.long_term[0].start_date, spec.date(50));
        assert_eq!(r.long_term[0].end_date, spec.date(79));
        assert_eq!(r.stochastic.len(), 1);
        assert_eq!(r.stochastic[0].date, spec.date(110));
        for f in [
            MEASURE_FILE,
            SEGMENTS_FILE,
            EVENTS_FILE,
            REPORT_FILE,
            UBC_FILE,
            PLOT_FILE,
        ] {
            assert!(cfg.output_dir.join(f).is_file(), "{f}");
        }
    }
}
