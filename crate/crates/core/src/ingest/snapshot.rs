use std::collections::HashSet;
use std::io::BufRead;
use std::net::Ipv4Addr;
use std::str::FromStr;

use chrono::NaiveDate;
use ipnet::Ipv4Net;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::show_ip_bgp;

/// One routing-table row.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RouteEntry {
    pub prefix: Ipv4Net,
    pub next_hop: Ipv4Addr,
    /// Peer AS first, origin AS last. Prepending repeats are kept.
    pub as_path: Vec<u32>,
    /// Set when an `{a,b}` AS_SET segment was flattened into `as_path`.
    pub contains_as_set: bool,
}

impl RouteEntry {
    pub fn new(prefix: Ipv4Net, next_hop: Ipv4Addr, as_path: Vec<u32>) -> Result<Self> {
        if as_path.is_empty() {
            return Err(Error::InvalidInput("empty AS path".into()));
        }
        if as_path.contains(&0) {
            return Err(Error::InvalidInput("AS number 0 in path".into()));
        }
        Ok(RouteEntry {
            prefix,
            next_hop,
            as_path,
            contains_as_set: false,
        })
    }

    /// The AS that originates the prefix.
    pub fn origin_as(&self) -> u32 {
        *self.as_path.last().expect("AS path is never empty")
    }

    /// The AS of the feeding peer.
    pub fn peer_as(&self) -> u32 {
        self.as_path[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotFormat {
    CanonicalTsv,
    ShowIpBgp,
}

impl FromStr for SnapshotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canonical_tsv" | "tsv" => Ok(SnapshotFormat::CanonicalTsv),
            "show_ip_bgp" => Ok(SnapshotFormat::ShowIpBgp),
            other => Err(Error::Config(format!("unknown snapshot format `{other}`"))),
        }
    }
}

/// Line accounting for one parse. `valid + skipped == route_lines` always.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseSummary {
    pub route_lines: usize,
    pub valid: usize,
    pub skipped: usize,
}

impl ParseSummary {
    pub(crate) fn accept(&mut self) {
        self.route_lines += 1;
        self.valid += 1;
    }

    pub(crate) fn reject(&mut self) {
        self.route_lines += 1;
        self.skipped += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub date: NaiveDate,
    pub entries: Vec<RouteEntry>,
    /// False when some prefix's entries are split across the file.
    pub contiguous: bool,
    pub summary: ParseSummary,
}

impl Snapshot {
    /// Builds a snapshot from already-validated entries.
    pub fn from_entries(date: NaiveDate, entries: Vec<RouteEntry>) -> Self {
        let contiguous = is_contiguous(&entries);
        let n = entries.len();
        Snapshot {
            date,
            entries,
            contiguous,
            summary: ParseSummary {
                route_lines: n,
                valid: n,
                skipped: 0,
            },
        }
    }
}

fn is_contiguous(entries: &[RouteEntry]) -> bool {
    let mut seen = HashSet::new();
    let mut current: Option<Ipv4Net> = None;
    for e in entries {
        if current != Some(e.prefix) {
            if !seen.insert(e.prefix) {
                return false;
            }
            current = Some(e.prefix);
        }
    }
    true
}

/// Parses one daily snapshot.
///
/// Malformed route lines are skipped and show up in [`Snapshot::summary`].
/// Fails when nothing valid remains, or (for `show ip bgp` tables) when the
/// column-title line is missing.
pub fn parse_snapshot<R: BufRead>(
    input: R,
    format: SnapshotFormat,
    date: NaiveDate,
) -> Result<Snapshot> {
    let (entries, summary) = match format {
        SnapshotFormat::CanonicalTsv => parse_canonical(input)?,
        SnapshotFormat::ShowIpBgp => show_ip_bgp::parse(input)?,
    };
    if entries.is_empty() {
        return Err(Error::EmptySnapshot {
            route_lines: summary.route_lines,
            skipped: summary.skipped,
        });
    }
    let contiguous = is_contiguous(&entries);
    Ok(Snapshot {
        date,
        entries,
        contiguous,
        summary,
    })
}

fn parse_canonical<R: BufRead>(mut input: R) -> Result<(Vec<RouteEntry>, ParseSummary)> {
    let mut entries = Vec::new();
    let mut summary = ParseSummary::default();
    let mut buf = String::new();
    loop {
        buf.clear();
        if input.read_line(&mut buf)? == 0 {
            break;
        }
        let line = buf.trim_end_matches(['\n', '\r']);
        if line.trim_ascii().is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_canonical_line(line) {
            Some(e) => {
                entries.push(e);
                summary.accept();
            }
            None => summary.reject(),
        }
    }
    Ok((entries, summary))
}

fn parse_canonical_line(line: &str) -> Option<RouteEntry> {
    let mut cols = line.split('\t');
    let prefix = parse_prefix(cols.next()?.trim_ascii())?;
    let next_hop = cols.next()?.trim_ascii().parse::<Ipv4Addr>().ok()?;
    let path = cols.next()?;
    if cols.next().is_some() {
        return None;
    }
    let (as_path, contains_as_set) = parse_as_path(path)?;
    Some(RouteEntry {
        prefix,
        next_hop,
        as_path,
        contains_as_set,
    })
}

/// Strict `a.b.c.d/len` parse; rejects masks outside 0..=32.
pub(crate) fn parse_prefix(s: &str) -> Option<Ipv4Net> {
    let (addr, len) = s.split_once('/')?;
    let addr = addr.parse::<Ipv4Addr>().ok()?;
    let len = len.parse::<u8>().ok()?;
    Ipv4Net::new(addr, len).ok()
}

/// Parses a textual AS path: whitespace-separated ASNs, optional `{a,b}`
/// AS_SET groups (flattened in listed order) and an optional trailing origin
/// code (`i`, `e` or `?`). Returns the path and whether a set was flattened.
pub fn parse_as_path(s: &str) -> Option<(Vec<u32>, bool)> {
    let mut path = Vec::with_capacity(8);
    let mut has_set = false;
    let mut tokens = s
        .split(|c: char| c.is_ascii_whitespace())
        .filter(|t| !t.is_empty())
        .peekable();
    while let Some(tok) = tokens.next() {
        if let Some(inner) = tok.strip_prefix('{') {
            let inner = inner.strip_suffix('}')?;
            has_set = true;
            for asn in inner.split(',') {
                path.push(parse_asn(asn)?);
            }
        } else if tokens.peek().is_none() && matches!(tok, "i" | "e" | "?") {
            break;
        } else {
            path.push(parse_asn(tok)?);
        }
    }
    if path.is_empty() {
        return None;
    }
    Some((path, has_set))
}

fn parse_asn(s: &str) -> Option<u32> {
    match s.trim_ascii().parse::<u32>() {
        Ok(0) | Err(_) => None,
        Ok(v) => Some(v),
    }
}
