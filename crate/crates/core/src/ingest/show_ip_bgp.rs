//! Best-effort reader for the `show ip bgp` table text dumps published by
//! route collectors.
//!
//! ```text
//!    Network          Next Hop            Metric LocPrf Weight Path
//! *  1.0.0.0/24       208.51.134.254                         0 3549 3356 13335 i
//! *>                  202.232.0.2                            0 2497 13335 i
//! *  203.119.104.0/21
//!                     64.71.137.241                          0 6939 4637 i
//! ```
//!
//! Column offsets come from the title line. A blank network column repeats the
//! previous network; a line starting with whitespace continues the previous
//! route.

use std::io::BufRead;
use std::net::Ipv4Addr;

use ipnet::Ipv4Net;

use crate::error::{Error, Result};

use super::snapshot::{parse_as_path, parse_prefix, ParseSummary, RouteEntry};

const STATUS_CHARS: &str = "*>sdhrSimbxacfR=";

struct Columns {
    network: usize,
    path: usize,
}

fn title_columns(line: &str) -> Option<Columns> {
    let network = line.find("Network")?;
    line.find("Next Hop")?;
    let path = line.rfind("Path")?;
    (path > network).then_some(Columns { network, path })
}

pub(crate) fn parse<R: BufRead>(input: R) -> Result<(Vec<RouteEntry>, ParseSummary)> {
    let mut lines = input.lines();
    let cols = loop {
        match lines.next() {
            None => {
                return Err(Error::Format(
                    "no `Network ... Path` column-title line found".into(),
                ))
            }
            Some(line) => {
                if let Some(c) = title_columns(&line?) {
                    break c;
                }
            }
        }
    };

    let mut entries = Vec::new();
    let mut summary = ParseSummary::default();
    let mut record: Vec<String> = Vec::new();
    let mut last_network: Option<Ipv4Net> = None;

    let mut flush = |record: &mut Vec<String>, last_network: &mut Option<Ipv4Net>| {
        if record.is_empty() {
            return;
        }
        match parse_record(record, &cols, *last_network) {
            Some(e) => {
                *last_network = Some(e.prefix);
                entries.push(e);
                summary.accept();
            }
            None => summary.reject(),
        }
        record.clear();
    };

    for line in lines {
        let line = line?;
        let line = line.trim_end_matches('\r').to_string();
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with(char::is_whitespace) {
            if !record.is_empty() {
                record.push(line);
            }
            continue;
        }
        if is_route_start(&line, &cols) {
            flush(&mut record, &mut last_network);
            record.push(line);
        } else {
            // trailer such as "Displayed 5 routes"
            flush(&mut record, &mut last_network);
        }
    }
    flush(&mut record, &mut last_network);
    Ok((entries, summary))
}

fn is_route_start(line: &str, cols: &Columns) -> bool {
    let status = slice_to(line, cols.network);
    status.starts_with(|c| STATUS_CHARS.contains(c))
        && status.chars().all(|c| c == ' ' || STATUS_CHARS.contains(c))
}

/// Splits at a byte column, tolerating short lines and non-ASCII input.
fn slice_to(line: &str, col: usize) -> &str {
    match line.get(..col) {
        Some(s) => s,
        None if line.len() < col => line,
        None => "",
    }
}

fn slice_from(line: &str, col: usize) -> &str {
    line.get(col..).unwrap_or("")
}

fn parse_record(
    lines: &[String],
    cols: &Columns,
    inherited: Option<Ipv4Net>,
) -> Option<RouteEntry> {
    let mut left: Vec<&str> = Vec::new();
    let mut path_text = String::new();
    for (i, line) in lines.iter().enumerate() {
        let start = if i == 0 { cols.network } else { 0 };
        let l = slice_to(line, cols.path);
        left.extend(slice_from(l, start.min(l.len())).split_whitespace());
        path_text.push(' ');
        path_text.push_str(slice_from(line, cols.path));
    }

    let mut it = left.into_iter().peekable();
    let first = *it.peek()?;
    let prefix = if let Some(p) = parse_prefix(first) {
        it.next();
        p
    } else {
        let mut ahead = it.clone();
        ahead.next();
        match (
            first.parse::<Ipv4Addr>(),
            ahead.next().map(str::parse::<Ipv4Addr>),
        ) {
            (Ok(addr), Some(Ok(_))) => {
                it.next();
                classful(addr)?
            }
            _ => inherited?,
        }
    };
    let next_hop = it.next()?.parse::<Ipv4Addr>().ok()?;
    // metric / locprf / weight
    if !it.all(|t| t.parse::<u64>().is_ok()) {
        return None;
    }
    let (as_path, contains_as_set) = parse_as_path(&path_text)?;
    Some(RouteEntry {
        prefix,
        next_hop,
        as_path,
        contains_as_set,
    })
}

/// Networks printed without a mask carry their classful length.
fn classful(addr: Ipv4Addr) -> Option<Ipv4Net> {
    let len = match addr.octets()[0] {
        0..=127 => 8,
        128..=191 => 16,
        192..=223 => 24,
        _ => return None,
    };
    Ipv4Net::new(addr, len).ok()
}
