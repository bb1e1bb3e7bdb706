//! Peer identification and prefix-reachability measures.
//!
//! A peer is a BGP feed into the collector, identified by its next-hop
//! address; two routers of one AS count as two peers. For every prefix the
//! number of peers announcing it is the prefix's reachability at that date.
//! The x%-peer measure counts prefixes announced by more than a fraction `x`
//! of the day's peers.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::Write;
use std::net::Ipv4Addr;

use chrono::NaiveDate;
use ipnet::Ipv4Net;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Snapshot;
use crate::series::{check_increasing, MeasureSeries};

/// Default peer fraction for the x%-peer measure.
pub const DEFAULT_X: f64 = 0.88;
/// Default trailing smoothing window: seven prior values plus the current one.
pub const DEFAULT_SMOOTHING_WINDOW: usize = 8;

/// A feed into the route collector. Equality, ordering and hashing use the
/// next-hop address only.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PeerId {
    pub next_hop: Ipv4Addr,
    pub peer_as: u32,
}

impl PartialEq for PeerId {
    fn eq(&self, other: &Self) -> bool {
        self.next_hop == other.next_hop
    }
}

impl Eq for PeerId {}

impl Hash for PeerId {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.next_hop.hash(state);
    }
}

impl PartialOrd for PeerId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PeerId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.next_hop.cmp(&other.next_hop)
    }
}

impl fmt::Display for PeerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/AS{}", self.next_hop, self.peer_as)
    }
}

/// Which routes count towards the measures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CountryFilter {
    All,
    /// Keep routes whose origin AS is in the set.
    Origins(BTreeSet<u32>),
}

impl CountryFilter {
    fn accepts(&self, origin: u32) -> bool {
        match self {
            CountryFilter::All => true,
            CountryFilter::Origins(set) => set.contains(&origin),
        }
    }
}

/// The announcing peers of one snapshot and what each of them announces.
#[derive(Debug, Clone, PartialEq)]
pub struct PeerSet {
    pub date: NaiveDate,
    /// Every feed seen in the snapshot, whether or not it announced a
    /// filtered route.
    present: BTreeSet<PeerId>,
    announced: BTreeMap<PeerId, BTreeSet<Ipv4Net>>,
    /// Number of announcing peers per prefix; the keys are the union of all
    /// announced sets.
    reach: BTreeMap<Ipv4Net, usize>,
}

impl PeerSet {
    /// Number of announcing peers.
    pub fn n_t(&self) -> usize {
        self.announced.len()
    }

    pub fn peers(&self) -> impl Iterator<Item = &PeerId> {
        self.announced.keys()
    }

    pub fn present(&self) -> &BTreeSet<PeerId> {
        &self.present
    }

    pub fn announced(&self) -> &BTreeMap<PeerId, BTreeSet<Ipv4Net>> {
        &self.announced
    }

    /// Union of all announced prefixes.
    pub fn y_max(&self) -> impl Iterator<Item = &Ipv4Net> {
        self.reach.keys()
    }

    pub fn unique_prefixes(&self) -> usize {
        self.reach.len()
    }

    /// Number of peers announcing each prefix.
    pub fn reach(&self) -> &BTreeMap<Ipv4Net, usize> {
        &self.reach
    }

    /// Announced-prefix count of a peer: `None` when the feed is absent from
    /// the snapshot, `Some(0)` when it is present but announces nothing that
    /// passes the filter.
    pub fn announced_count(&self, peer: &PeerId) -> Option<usize> {
        if !self.present.contains(peer) {
            return None;
        }
        Some(self.announced.get(peer).map_or(0, BTreeSet::len))
    }
}

pub fn build_peer_set(snapshot: &Snapshot, filter: &CountryFilter) -> Result<PeerSet> {
    let mut present = BTreeSet::new();
    // (next hop, network, mask length) as integers for cheap sorting
    let mut pairs: Vec<(u32, u32, u8)> = Vec::with_capacity(snapshot.entries.len());
    for e in &snapshot.entries {
        present.insert(PeerId {
            next_hop: e.next_hop,
            peer_as: e.peer_as(),
        });
        if filter.accepts(e.origin_as()) {
            pairs.push((
                u32::from(e.next_hop),
                u32::from(e.prefix.addr()),
                e.prefix.prefix_len(),
            ));
        }
    }
    if pairs.is_empty() {
        return Err(Error::EmptyPeerSet);
    }
    pairs.sort_unstable();
    pairs.dedup();
    let net =
        |p: &(u32, u32, u8)| Ipv4Net::new(Ipv4Addr::from(p.1), p.2).expect("mask length was valid");

    let mut announced = BTreeMap::new();
    let mut rest = &pairs[..];
    while let Some(&(hop, _, _)) = rest.first() {
        let len = rest.iter().take_while(|p| p.0 == hop).count();
        let key = PeerId {
            next_hop: Ipv4Addr::from(hop),
            peer_as: 0,
        };
        // the first path seen from this next hop names the peer AS
        let peer = *present.get(&key).expect("announcing peer is present");
        announced.insert(peer, rest[..len].iter().map(net).collect::<BTreeSet<_>>());
        rest = &rest[len..];
    }

    let mut prefixes: Vec<(u32, u8)> = pairs.iter().map(|p| (p.1, p.2)).collect();
    prefixes.sort_unstable();
    let mut reach: Vec<(Ipv4Net, usize)> = Vec::new();
    let mut i = 0;
    while i < prefixes.len() {
        let run = prefixes[i..]
            .iter()
            .take_while(|p| **p == prefixes[i])
            .count();
        reach.push((net(&(0, prefixes[i].0, prefixes[i].1)), run));
        i += run;
    }
    Ok(PeerSet {
        date: snapshot.date,
        present,
        announced,
        reach: reach.into_iter().collect(),
    })
}

fn check_dated(peer_sets: &[PeerSet]) -> Result<Vec<NaiveDate>> {
    let dates: Vec<NaiveDate> = peer_sets.iter().map(|p| p.date).collect();
    check_increasing(&dates)?;
    Ok(dates)
}

/// Number of announcing peers per date.
pub fn peer_counts(peer_sets: &[PeerSet]) -> Result<MeasureSeries> {
    let dates = check_dated(peer_sets)?;
    let values = peer_sets.iter().map(|p| p.n_t() as f64).collect();
    MeasureSeries::new(dates, values, None)
}

/// |y_max| per date.
pub fn unique_prefix_series(peer_sets: &[PeerSet]) -> Result<MeasureSeries> {
    let dates = check_dated(peer_sets)?;
    let values = peer_sets
        .iter()
        .map(|p| p.unique_prefixes() as f64)
        .collect();
    MeasureSeries::new(dates, values, None)
}

/// One peer-percentage range `(lower, upper]`, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeerBin {
    pub label: String,
    pub lower: f64,
    pub upper: f64,
}

impl PeerBin {
    pub fn new(label: impl Into<String>, lower: f64, upper: f64) -> Self {
        PeerBin {
            label: label.into(),
            lower,
            upper,
        }
    }

    fn contains(&self, pct: f64) -> bool {
        pct > self.lower && pct <= self.upper
    }
}

/// Disjoint half-open ranges covering (0, 100], listed from the top down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinConfig {
    bins: Vec<PeerBin>,
}

impl BinConfig {
    pub fn new(bins: Vec<PeerBin>) -> Result<Self> {
        let bad = |msg: &str| Err(Error::InvalidInput(format!("bin config: {msg}")));
        let (Some(first), Some(last)) = (bins.first(), bins.last()) else {
            return bad("no bins");
        };
        if first.upper != 100.0 || last.lower != 0.0 {
            return bad("ranges must cover (0, 100]");
        }
        if bins.iter().any(|b| !(b.lower < b.upper)) {
            return bad("empty range");
        }
        if bins.windows(2).any(|w| w[0].lower != w[1].upper) {
            return bad("ranges must be contiguous and decreasing");
        }
        Ok(BinConfig { bins })
    }

    /// The seven initial ranges: >90, 81-90, 51-80, 28-50, 14-27, 6-13, <5,
    /// read as (90,100], (80,90], (50,80], (27,50], (13,27], (5,13], (0,5].
    pub fn seven_ranges() -> Self {
        BinConfig::new(vec![
            PeerBin::new(">90%", 90.0, 100.0),
            PeerBin::new("81-90%", 80.0, 90.0),
            PeerBin::new("51-80%", 50.0, 80.0),
            PeerBin::new("28-50%", 27.0, 50.0),
            PeerBin::new("14-27%", 13.0, 27.0),
            PeerBin::new("6-13%", 5.0, 13.0),
            PeerBin::new("<5%", 0.0, 5.0),
        ])
        .expect("static config is valid")
    }

    pub fn bins(&self) -> &[PeerBin] {
        &self.bins
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.bins.iter().map(|b| b.label.as_str())
    }
}

impl Default for BinConfig {
    fn default() -> Self {
        BinConfig::seven_ranges()
    }
}

/// Prefix counts per peer-percentage range, in [`BinConfig`] order.
/// The counts always sum to the number of unique prefixes.
pub fn peer_bin_histogram(peer_set: &PeerSet, bins: &BinConfig) -> Vec<usize> {
    let n = peer_set.n_t() as f64;
    let mut counts = vec![0usize; bins.bins.len()];
    for &c in peer_set.reach.values() {
        let pct = 100.0 * c as f64 / n;
        let idx = bins
            .bins
            .iter()
            .position(|b| b.contains(pct))
            .expect("bins cover (0, 100]");
        counts[idx] += 1;
    }
    counts
}

/// Number of prefixes announced by strictly more than a fraction `x` of the
/// peers.
pub fn x_percent_count(peer_set: &PeerSet, x: f64) -> usize {
    let n = peer_set.n_t() as f64;
    peer_set
        .reach
        .values()
        .filter(|&&c| c as f64 / n > x)
        .count()
}

pub fn x_percent_measure(peer_sets: &[PeerSet], x: f64) -> Result<MeasureSeries> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::InvalidInput(format!("x = {x} outside (0, 1]")));
    }
    let dates = check_dated(peer_sets)?;
    let values = peer_sets
        .iter()
        .map(|p| x_percent_count(p, x) as f64)
        .collect();
    MeasureSeries::new(dates, values, Some(x))
}

/// Trailing mean over the current value and up to `window - 1` prior ones.
pub fn smooth(series: &MeasureSeries, window: usize) -> Result<MeasureSeries> {
    if series.is_empty() {
        return Err(Error::InvalidInput("cannot smooth an empty series".into()));
    }
    if window == 0 {
        return Err(Error::InvalidInput("smoothing window must be >= 1".into()));
    }
    Ok(series.with_values(trailing_mean(series.values(), window)))
}

pub(crate) fn trailing_mean(values: &[f64], window: usize) -> Vec<f64> {
    (0..values.len())
        .map(|t| {
            let lo = (t + 1).saturating_sub(window);
            let w = &values[lo..=t];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

/// Min-max scaling onto [0, 1].
pub fn normalize(series: &MeasureSeries) -> Result<Vec<f64>> {
    let v = series.values();
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if v.is_empty() || !(max > min) {
        return Err(Error::DegenerateRange);
    }
    Ok(v.iter().map(|x| (x - min) / (max - min)).collect())
}

/// Announced-prefix count per peer and date; `None` marks dates on which the
/// feed was absent from the snapshot.
pub fn per_peer_series(peer_sets: &[PeerSet]) -> Result<BTreeMap<PeerId, Vec<Option<usize>>>> {
    check_dated(peer_sets)?;
    let all: BTreeSet<PeerId> = peer_sets
        .iter()
        .flat_map(|p| p.present.iter().copied())
        .collect();
    Ok(all
        .into_iter()
        .map(|peer| {
            let series = peer_sets.iter().map(|p| p.announced_count(&peer)).collect();
            (peer, series)
        })
        .collect())
}

/// `date,unique,<bin label>...`
pub fn write_histogram_csv<W: Write>(
    w: W,
    bins: &BinConfig,
    rows: &[(NaiveDate, usize, Vec<usize>)],
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["date".to_string(), "unique".to_string()];
    header.extend(bins.labels().map(str::to_string));
    out.write_record(&header)?;
    for (date, unique, counts) in rows {
        let mut rec = vec![date.to_string(), unique.to_string()];
        rec.extend(counts.iter().map(usize::to_string));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// `date,<peer>...` with empty cells for gaps.
pub fn write_per_peer_csv<W: Write>(
    w: W,
    dates: &[NaiveDate],
    series: &BTreeMap<PeerId, Vec<Option<usize>>>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["date".to_string()];
    header.extend(series.keys().map(PeerId::to_string));
    out.write_record(&header)?;
    for (i, d) in dates.iter().enumerate() {
        let mut rec = vec![d.to_string()];
        rec.extend(
            series
                .values()
                .map(|s| s[i].map(|c| c.to_string()).unwrap_or_default()),
        );
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
