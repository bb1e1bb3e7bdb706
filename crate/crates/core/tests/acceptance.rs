//! Acceptance gate. Each test prints one `criterion N: PASS|FAIL` line.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::{Mutex, MutexGuard};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use ipnet::Ipv4Net;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use prefixwatch_core::arima::{acf, forecast, pacf, ArimaModel, Z95};
use prefixwatch_core::changepoint::{
    classify_long_term, segneigh_mean, sse_from_sums, Segment, Segmentation,
};
use prefixwatch_core::config::PipelineConfig;
use prefixwatch_core::fixture::{generate_fixture, EventKind, FixtureSpec, InjectedEvent};
use prefixwatch_core::ingest::{RouteEntry, Snapshot};
use prefixwatch_core::pipeline::run_pipeline;
use prefixwatch_core::reachability::{
    build_peer_set, peer_bin_histogram, BinConfig, CountryFilter,
};

/// Timed criteria run one at a time so each budget measures its own work.
static TIMED: Mutex<()> = Mutex::new(());

fn exclusive() -> MutexGuard<'static, ()> {
    TIMED.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, what: &str, ok: bool, detail: String, elapsed: Duration, budget: Duration) {
    let within = elapsed < budget;
    let pass = ok && within;
    println!(
        "criterion {n}: {} {what}: {detail}; {:.3} s (budget {} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    assert!(ok, "criterion {n} failed: {detail}");
    assert!(within, "criterion {n} over budget: {elapsed:?}");
}

// Published 1..5-step forecasts: (80 low, 80 high, 95 low, 95 high).
const FORECAST_TABLE: [[f64; 4]; 5] = [
    [14114.64, 14289.36, 14068.39, 14335.61],
    [14078.45, 14325.55, 14013.04, 14390.96],
    [14050.68, 14353.32, 13970.58, 14433.42],
    [14027.27, 14376.73, 13934.78, 14469.22],
    [14006.65, 14397.35, 13903.23, 14500.77],
];

#[test]
fn criterion_1_random_walk_interval_bounds() {
    let _guard = exclusive();
    let start = Instant::now();
    let model = ArimaModel::random_walk(14202.0, 68.18);
    let f = forecast(&model, 5);
    let mut max_err: f64 = 0.0;
    for (row, want) in f.iter().zip(FORECAST_TABLE) {
        let got = [row.pi80.0, row.pi80.1, row.pi95.0, row.pi95.1];
        for (g, w) in got.iter().zip(want) {
            max_err = max_err.max((g - w).abs());
        }
    }
    let hw = |i: usize| f[i].pi95.1 - f[i].point;
    let mut max_ratio_err: f64 = 0.0;
    for h in 1..=5 {
        let want = (h as f64).sqrt();
        max_ratio_err = max_ratio_err.max((hw(h - 1) / hw(0) - want).abs() / want);
        let published = (FORECAST_TABLE[h - 1][3] - 14202.0) / (FORECAST_TABLE[0][3] - 14202.0);
        max_ratio_err = max_ratio_err.max((published - want).abs() / want);
    }
    let ok = max_err <= 0.5 && max_ratio_err <= 1e-3 && f.iter().all(|r| r.point == 14202.0);
    verdict(
        1,
        "forecast interval bounds",
        ok,
        format!("max |bound error| {max_err:.3} (tol 0.5), max sqrt(h) ratio error {max_ratio_err:.2e} (tol 1e-3)"),
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_2_long_term_classification() {
    let _guard = exclusive();
    let start = Instant::now();
    // (reference mean, measure mean, published long-term flag)
    let rows = [
        (17407.0, 16867.0, false),
        (17699.0, 13983.0, true),
        (17645.0, 12597.0, true),
        (17648.0, 13932.0, true),
        (17864.0, 17425.0, false),
        (18136.0, 10333.0, true),
        (18374.0, 17571.0, false),
        (18972.0, 18540.0, false),
    ];
    let seg = Segmentation {
        segments: rows
            .iter()
            .enumerate()
            .map(|(i, r)| Segment {
                start: 10 * i,
                end: 10 * i + 9,
                mean: r.1,
                cost: 0.0,
            })
            .collect(),
        total_cost: 0.0,
    };
    let refs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let classes = classify_long_term(&seg, &refs, 0.15).unwrap();
    let got: Vec<bool> = classes.iter().map(|c| c.is_event).collect();
    let want: Vec<bool> = rows.iter().map(|r| r.2).collect();
    let diffs: Vec<i64> = classes.iter().map(|c| c.diff_percent_rounded()).collect();
    verdict(
        2,
        "long-term classification",
        got == want,
        format!("flags {got:?}, rounded ratios {diffs:?}"),
        start.elapsed(),
        Duration::from_secs(1),
    );
}

fn random_snapshot(rng: &mut ChaCha8Rng, date: NaiveDate) -> Snapshot {
    let peers = rng.gen_range(1..=38);
    let prefixes = rng.gen_range(1..=400u32);
    let mut entries = Vec::new();
    for i in 0..prefixes {
        let prefix = Ipv4Net::new((0x0A00_0000 + (i << 8)).into(), 24).unwrap();
        let reach = rng.gen_range(1..=peers);
        for p in 0..reach {
            let peer = (p * 7 + i as usize) % peers;
            entries.push(
                RouteEntry::new(
                    prefix,
                    std::net::Ipv4Addr::new(192, 0, 2, peer as u8 + 1),
                    vec![64512 + peer as u32, 9498, 45528],
                )
                .unwrap(),
            );
        }
    }
    Snapshot::from_entries(date, entries)
}

#[test]
fn criterion_3_histogram_conservation() {
    let _guard = exclusive();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let bins = BinConfig::default();
    let date = NaiveDate::from_ymd_opt(2012, 1, 1).unwrap();
    let mut mismatches = 0;
    for _ in 0..50 {
        let snap = random_snapshot(&mut rng, date);
        let ps = build_peer_set(&snap, &CountryFilter::All).unwrap();
        let total: usize = peer_bin_histogram(&ps, &bins).iter().sum();
        if total != ps.unique_prefixes() {
            mismatches += 1;
        }
    }
    let published: [(usize, [usize; 7]); 2] = [
        (17502, [13286, 3813, 33, 13, 47, 23, 287]),
        (17225, [13256, 3847, 16, 14, 46, 28, 18]),
    ];
    let rows_ok = published
        .iter()
        .all(|(unique, bins)| bins.iter().sum::<usize>() == *unique);
    verdict(
        3,
        "peer-bin histogram conservation",
        mismatches == 0 && rows_ok,
        format!("{mismatches}/50 synthetic snapshots off; published rows sum correctly: {rows_ok}"),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

/// Exhaustive search over all boundary sets in lexicographic order, keeping
/// the first strict minimum.
fn brute_force(values: &[f64], k: usize) -> (f64, Vec<(usize, usize)>) {
    fn cost(v: &[f64]) -> f64 {
        let s: f64 = v.iter().sum();
        let s2: f64 = v.iter().map(|x| x * x).sum();
        sse_from_sums(s, s2, v.len())
    }
    fn walk(
        values: &[f64],
        from: usize,
        left: usize,
        cuts: &mut Vec<usize>,
        best: &mut (f64, Vec<usize>),
    ) {
        let n = values.len();
        if left == 0 {
            let mut bounds = vec![0];
            bounds.extend(cuts.iter().copied());
            bounds.push(n);
            let total = bounds
                .windows(2)
                .rev()
                .fold(None, |acc: Option<f64>, w| {
                    let c = cost(&values[w[0]..w[1]]);
                    Some(match acc {
                        None => c,
                        Some(rest) => c + rest,
                    })
                })
                .unwrap();
            if total < best.0 {
                *best = (total, cuts.clone());
            }
            return;
        }
        for c in from..=n - left {
            cuts.push(c);
            walk(values, c + 1, left - 1, cuts, best);
            cuts.pop();
        }
    }
    let mut best = (f64::INFINITY, Vec::new());
    walk(values, 1, k - 1, &mut Vec::new(), &mut best);
    let mut edges = vec![0];
    edges.extend(best.1);
    edges.push(values.len());
    (best.0, edges.windows(2).map(|w| (w[0], w[1] - 1)).collect())
}

#[test]
fn criterion_4_segneigh_matches_exhaustive_search() {
    let _guard = exclusive();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    for case in 0..200 {
        let n = rng.gen_range(4..=20);
        let kmax = rng.gen_range(1..=4);
        let levels = rng.gen_range(1..=4);
        // integer data keeps every sum exact
        let values: Vec<f64> = (0..n)
            .map(|i| (10 * (i * levels / n) as i64 + rng.gen_range(-3..=3)) as f64)
            .collect();
        let dp = segneigh_mean(&values, kmax).unwrap();
        for k in 1..=kmax {
            let (cost, bounds) = brute_force(&values, k);
            let got = &dp[k - 1];
            if got.total_cost != cost || got.bounds() != bounds {
                failures.push(format!("case {case} k={k}"));
            }
        }
    }
    verdict(
        4,
        "segmentation equals exhaustive search",
        failures.is_empty(),
        format!(
            "200 series, {} mismatches {:?}",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>()
        ),
        start.elapsed(),
        Duration::from_secs(30),
    );
}

fn acf_by_definition(v: &[f64], k: usize) -> f64 {
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    for t in 0..n - k {
        num += (v[t] - mean) * (v[t + k] - mean);
    }
    let mut den = 0.0;
    for x in v {
        den += (x - mean) * (x - mean);
    }
    num / den
}

/// Last coefficient of the order-`k` autoregression fitted to the sample
/// autocorrelations (Yule-Walker), by Gaussian elimination.
fn pacf_by_regression(r: &[f64], k: usize) -> f64 {
    let mut a: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let mut row: Vec<f64> = (0..k).map(|j| r[i.abs_diff(j)]).collect();
            row.push(r[i + 1]);
            row
        })
        .collect();
    for c in 0..k {
        let p = (c..k)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(c, p);
        for rr in c + 1..k {
            let f = a[rr][c] / a[c][c];
            for cc in c..=k {
                a[rr][cc] -= f * a[c][cc];
            }
        }
    }
    let mut x = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|j| a[i][j] * x[j]).sum();
        x[i] = (a[i][k] - s) / a[i][i];
    }
    x[k - 1]
}

#[test]
fn criterion_5_correlograms_match_oracles() {
    let _guard = exclusive();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut acf_err, mut pacf_err): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let n = rng.gen_range(30..=300);
        let phi: f64 = rng.gen_range(-0.8..0.8);
        let mut v = Vec::with_capacity(n);
        let mut prev = 0.0;
        for _ in 0..n {
            let e: f64 = StandardNormal.sample(&mut rng);
            prev = phi * prev + e;
            v.push(100.0 + prev);
        }
        let max_lag = rng.gen_range(1..=12);
        let a = acf(&v, max_lag).unwrap();
        let p = pacf(&v, max_lag).unwrap();
        let r: Vec<f64> = (0..=max_lag).map(|k| acf_by_definition(&v, k)).collect();
        for k in 1..=max_lag {
            acf_err = acf_err.max((a.coefficients[k] - r[k]).abs());
            pacf_err = pacf_err.max((p.coefficients[k] - pacf_by_regression(&r, k)).abs());
        }
        assert_eq!(a.significance_band, Z95 / (n as f64).sqrt());
    }
    verdict(
        5,
        "ACF/PACF oracles",
        acf_err <= 1e-8 && pacf_err <= 1e-6,
        format!("max acf error {acf_err:.2e} (tol 1e-8), max pacf error {pacf_err:.2e} (tol 1e-6)"),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

fn pipeline_config(root: &Path, out: &str) -> PipelineConfig {
    PipelineConfig {
        snapshot_dir: root.join("snapshots"),
        delegation_file: root.join("snapshots").join("delegated.txt"),
        output_dir: root.join(out),
        ..Default::default()
    }
}

#[test]
fn criterion_6_injected_long_term_event() {
    let _guard = exclusive();
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut spec = FixtureSpec::new(120, 10, 17400.0);
    spec.noise_sigma = 50.0;
    spec.seed = 6;
    spec.foreign_prefixes = 50;
    spec.events.push(InjectedEvent {
        start: 40,
        duration: 20,
        magnitude: 1.0 - 13900.0 / 17400.0,
        kind: EventKind::Step,
    });
    generate_fixture(&spec, &tmp.path().join("snapshots")).unwrap();
    let report = run_pipeline(&pipeline_config(tmp.path(), "out")).unwrap();
    let lt = &report.long_term;
    let (s, e) = (spec.date(40), spec.date(59));
    let ok = lt.len() == 1
        && (lt[0].start_date - s).num_days().abs() <= 1
        && (lt[0].end_date - e).num_days().abs() <= 1
        && (lt[0].diff_percent - 80.0).abs() <= 2.0;
    let detail = match lt.first() {
        Some(ev) => format!(
            "{} long-term event(s); first {}..{} (want {s}..{e} +-1 day), ratio {:.2} % (want 80 +-2)",
            lt.len(),
            ev.start_date,
            ev.end_date,
            ev.diff_percent
        ),
        None => "no long-term event".to_string(),
    };
    verdict(
        6,
        "injected long-term event",
        ok,
        detail,
        start.elapsed(),
        Duration::from_secs(20),
    );
}

#[test]
fn criterion_7_injected_stochastic_events() {
    let _guard = exclusive();
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut spec = FixtureSpec::new(120, 10, 17400.0);
    spec.seed = 7;
    spec.foreign_prefixes = 50;
    for day in [70, 73] {
        spec.events.push(InjectedEvent {
            start: day,
            duration: 1,
            magnitude: 0.3,
            kind: EventKind::Spike,
        });
    }
    generate_fixture(&spec, &tmp.path().join("snapshots")).unwrap();
    let report = run_pipeline(&pipeline_config(tmp.path(), "out")).unwrap();
    let got: BTreeMap<NaiveDate, f64> = report
        .stochastic
        .iter()
        .map(|e| (e.date, e.impact_percent))
        .collect();
    let want = [spec.date(70), spec.date(73)];
    let ok = got.len() == 2
        && want
            .iter()
            .all(|d| got.get(d).is_some_and(|imp| (imp - 30.0).abs() <= 0.5))
        && report.long_term.is_empty();
    verdict(
        7,
        "injected stochastic events",
        ok,
        format!("flagged {got:?} (want {want:?} at 30 +-0.5 %)"),
        start.elapsed(),
        Duration::from_secs(20),
    );
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn criterion_8_pipeline_scale_and_determinism() {
    let _guard = exclusive();
    let tmp = tempfile::tempdir().unwrap();
    let mut spec = FixtureSpec::new(365, 10, 1000.0);
    spec.seed = 8;
    spec.events = vec![
        InjectedEvent {
            start: 150,
            duration: 50,
            magnitude: 0.3,
            kind: EventKind::Step,
        },
        InjectedEvent {
            start: 300,
            duration: 1,
            magnitude: 0.25,
            kind: EventKind::Spike,
        },
    ];
    generate_fixture(&spec, &tmp.path().join("snapshots")).unwrap();

    let start = Instant::now();
    let first = run_pipeline(&pipeline_config(tmp.path(), "out_a")).unwrap();
    let elapsed = start.elapsed();
    let second = run_pipeline(&pipeline_config(tmp.path(), "out_b")).unwrap();

    let a = dir_contents(&tmp.path().join("out_a"));
    let b = dir_contents(&tmp.path().join("out_b"));
    let identical = a == b && first == second;
    let ok = identical && first.long_term.len() == 1 && first.stochastic.len() == 1;
    verdict(
        8,
        "365-day pipeline run",
        ok,
        format!(
            "{} output files byte-identical across runs: {identical}; {} long-term, {} stochastic",
            a.len(),
            first.long_term.len(),
            first.stochastic.len()
        ),
        elapsed,
        Duration::from_secs(30),
    );
}
