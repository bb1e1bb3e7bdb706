//! Upstream betweenness centrality of a target AS.

use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Snapshot;

/// Per-upstream path counts towards `target_as` on one date.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpstreamStat {
    pub date: NaiveDate,
    pub target_as: u32,
    pub per_upstream: BTreeMap<u32, u64>,
    /// Paths on which the target is the first AS.
    pub direct: u64,
    /// Paths credited to some upstream.
    pub total_paths: u64,
}

/// The AS crediting `target` on `path`, `Some(None)` for a direct path and
/// `None` if the path does not reach `target`.
fn upstream_of(path: &[u32], target: u32) -> Option<Option<u32>> {
    let mut prev: Option<u32> = None;
    for &asn in path {
        if prev == Some(asn) {
            continue;
        }
        if asn == target {
            return Some(prev);
        }
        prev = Some(asn);
    }
    None
}

/// Counts, per neighbour on the collector side of the first occurrence of
/// `target_as`, the routes that traverse it. With `origin_only` only routes
/// originated by `target_as` qualify.
pub fn compute_ubc(snapshot: &Snapshot, target_as: u32, origin_only: bool) -> Result<UpstreamStat> {
    if target_as == 0 {
        return Err(Error::InvalidInput("target AS must be positive".into()));
    }
    let mut stat = UpstreamStat {
        date: snapshot.date,
        target_as,
        per_upstream: BTreeMap::new(),
        direct: 0,
        total_paths: 0,
    };
    for e in &snapshot.entries {
        if origin_only && e.origin_as() != target_as {
            continue;
        }
        match upstream_of(&e.as_path, target_as) {
            Some(Some(up)) => {
                *stat.per_upstream.entry(up).or_insert(0) += 1;
                stat.total_paths += 1;
            }
            Some(None) => stat.direct += 1,
            None => {}
        }
    }
    Ok(stat)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedDay {
    pub date: NaiveDate,
    /// `(upstream, ubc)` in rank order, at most `top_n` long.
    pub ranking: Vec<(u32, u64)>,
    /// The top-n order differs from the previous date's.
    pub rank_change: bool,
}

/// Ranks upstreams per date by descending count, ties by ascending AS number.
pub fn rank_upstreams(stats: &[UpstreamStat], top_n: usize) -> Result<Vec<RankedDay>> {
    if stats.is_empty() {
        return Err(Error::InvalidInput("no upstream statistics to rank".into()));
    }
    let mut out: Vec<RankedDay> = Vec::with_capacity(stats.len());
    for s in stats {
        let mut ranking: Vec<(u32, u64)> = s.per_upstream.iter().map(|(&a, &c)| (a, c)).collect();
        ranking.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        ranking.truncate(top_n);
        let rank_change = out.last().is_some_and(|prev| {
            prev.ranking
                .iter()
                .map(|r| r.0)
                .ne(ranking.iter().map(|r| r.0))
        });
        out.push(RankedDay {
            date: s.date,
            ranking,
            rank_change,
        });
    }
    Ok(out)
}

/// `date,upstream_as,ubc,rank` with 1-based ranks.
pub fn write_ubc_csv<W: Write>(w: W, days: &[RankedDay]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["date", "upstream_as", "ubc", "rank"])?;
    for d in days {
        for (i, (asn, ubc)) in d.ranking.iter().enumerate() {
            out.write_record([
                d.date.to_string(),
                asn.to_string(),
                ubc.to_string(),
                (i + 1).to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `date,order` for every date carrying a rank-change marker; `order` lists
/// the new top-n upstreams separated by spaces.
pub fn write_rank_changes_csv<W: Write>(w: W, days: &[RankedDay]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["date", "order"])?;
    for d in days.iter().filter(|d| d.rank_change) {
        let order: Vec<String> = d.ranking.iter().map(|r| r.0.to_string()).collect();
        out.write_record([d.date.to_string(), order.join(" ")])?;
    }
    out.flush()?;
    Ok(())
}
