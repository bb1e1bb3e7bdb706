use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use prefixwatch_bench::{noisy_steps, snapshot_text};
use prefixwatch_core::arima::{acf, pacf};
use prefixwatch_core::changepoint::segneigh_mean;
use prefixwatch_core::ingest::{parse_snapshot, SnapshotFormat};
use prefixwatch_core::reachability::{build_peer_set, x_percent_count, CountryFilter};

fn segmentation(c: &mut Criterion) {
    let mut group = c.benchmark_group("segneigh_mean");
    for n in [120usize, 365] {
        let v = noisy_steps(n, &[17400.0, 13900.0, 17600.0, 10300.0, 17800.0], 50.0, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &v, |b, v| {
            b.iter(|| segneigh_mean(black_box(v), 8).unwrap())
        });
    }
    group.finish();
}

fn ingest(c: &mut Criterion) {
    let (date, text) = snapshot_text(10, 1000);
    c.bench_function("parse_snapshot/10x1000", |b| {
        b.iter(|| {
            parse_snapshot(
                black_box(text.as_bytes()),
                SnapshotFormat::CanonicalTsv,
                date,
            )
            .unwrap()
        })
    });
    let snap = parse_snapshot(text.as_bytes(), SnapshotFormat::CanonicalTsv, date).unwrap();
    c.bench_function("peer_set+x_percent/10x1000", |b| {
        b.iter(|| {
            let p = build_peer_set(black_box(&snap), &CountryFilter::All).unwrap();
            x_percent_count(&p, 0.88)
        })
    });
}

fn correlogram(c: &mut Criterion) {
    let v = noisy_steps(365, &[0.0], 1.0, 2);
    c.bench_function("acf/365x20", |b| b.iter(|| acf(black_box(&v), 20).unwrap()));
    c.bench_function("pacf/365x20", |b| {
        b.iter(|| pacf(black_box(&v), 20).unwrap())
    });
}

criterion_group!(benches, segmentation, ingest, correlogram);
criterion_main!(benches);
