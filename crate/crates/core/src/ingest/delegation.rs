//! RIR delegated-stats files (`registry|cc|type|start|value|date|status[|...]`).

use std::collections::BTreeSet;
use std::io::BufRead;
use std::net::{Ipv4Addr, Ipv6Addr};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Country code used for records not bound to a country.
pub const WILDCARD_COUNTRY: &str = "*";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceType {
    Asn,
    Ipv4,
    Ipv6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResourceStatus {
    Allocated,
    Assigned,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ResourceStart {
    Asn(u32),
    Ipv4(Ipv4Addr),
    Ipv6(Ipv6Addr),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelegationRecord {
    pub registry: String,
    pub country_code: String,
    pub resource_type: ResourceType,
    pub start: ResourceStart,
    pub count: u64,
    pub status: ResourceStatus,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DelegationSummary {
    pub records: usize,
    pub malformed: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedDelegation {
    pub records: Vec<DelegationRecord>,
    pub summary: DelegationSummary,
}

pub fn parse_delegation<R: BufRead>(input: R) -> Result<ParsedDelegation> {
    let mut out = ParsedDelegation::default();
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        if is_version_line(&fields) || fields.contains(&"summary") {
            continue;
        }
        match parse_record(&fields) {
            Some(r) => {
                out.records.push(r);
                out.summary.records += 1;
            }
            None => out.summary.malformed += 1,
        }
    }
    Ok(out)
}

/// `2|apnic|20120101|...`: the leading version field is numeric.
fn is_version_line(fields: &[&str]) -> bool {
    fields
        .first()
        .is_some_and(|v| !v.is_empty() && v.chars().all(|c| c.is_ascii_digit() || c == '.'))
}

fn parse_record(fields: &[&str]) -> Option<DelegationRecord> {
    if fields.len() < 7 {
        return None;
    }
    let country_code = match fields[1] {
        "" | WILDCARD_COUNTRY => WILDCARD_COUNTRY.to_string(),
        cc if cc.len() == 2 && cc.chars().all(|c| c.is_ascii_uppercase()) => cc.to_string(),
        _ => return None,
    };
    let (resource_type, start) = match fields[2] {
        "asn" => (
            ResourceType::Asn,
            ResourceStart::Asn(fields[3].parse().ok()?),
        ),
        "ipv4" => (
            ResourceType::Ipv4,
            ResourceStart::Ipv4(fields[3].parse().ok()?),
        ),
        "ipv6" => (
            ResourceType::Ipv6,
            ResourceStart::Ipv6(fields[3].parse().ok()?),
        ),
        _ => return None,
    };
    let count: u64 = fields[4].parse().ok()?;
    if count == 0 {
        return None;
    }
    let status = match fields[6] {
        "allocated" => ResourceStatus::Allocated,
        "assigned" => ResourceStatus::Assigned,
        _ => ResourceStatus::Other,
    };
    Some(DelegationRecord {
        registry: fields[0].to_string(),
        country_code,
        resource_type,
        start,
        count,
        status,
    })
}

/// All AS numbers delegated to `country` with an allocated or assigned status.
pub fn extract_country_asns(records: &[DelegationRecord], country: &str) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    for r in records {
        let ResourceStart::Asn(start) = r.start else {
            continue;
        };
        if r.country_code != country
            || !matches!(
                r.status,
                ResourceStatus::Allocated | ResourceStatus::Assigned
            )
        {
            continue;
        }
        let end = (u64::from(start) + r.count).min(u64::from(u32::MAX) + 1);
        out.extend((u64::from(start)..end).map(|a| a as u32));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const FILE: &str = "\
2|apnic|20120101|5|19830613|20120101|+1000
#comment line
apnic|*|asn|*|3|summary
apnic|IN|asn|9498|1|19950101|allocated
apnic|IN|asn|132000|4|20090101|allocated
apnic|JP|asn|2497|1|19930101|allocated
apnic|IN|ipv4|1.22.8.0|256|20100101|allocated
apnic|IN|asn|64512|2|20100101|reserved
apnic|IN|asn|abc|1|20100101|allocated
apnic|IN|asn
";

    #[test]
    fn parses_records_and_counts_malformed() {
        let parsed = parse_delegation(FILE.as_bytes()).unwrap();
        assert_eq!(parsed.records.len(), 5);
        assert_eq!(parsed.summary.malformed, 2);
        let r = &parsed.records[0];
        assert_eq!(r.country_code, "IN");
        assert_eq!(r.resource_type, ResourceType::Asn);
        assert_eq!(r.start, ResourceStart::Asn(9498));
        assert_eq!(r.count, 1);
        assert_eq!(r.status, ResourceStatus::Allocated);
        assert_eq!(parsed.records[4].status, ResourceStatus::Other);
    }

    #[test]
    fn country_asns_expand_counts() {
        let parsed = parse_delegation(FILE.as_bytes()).unwrap();
        let asns = extract_country_asns(&parsed.records, "IN");
        assert_eq!(
            asns.into_iter().collect::<Vec<_>>(),
            vec![9498, 132000, 132001, 132002, 132003]
        );
        assert!(extract_country_asns(&parsed.records, "US").is_empty());
    }

    fn asn_rec(cc: &str, start: u32, count: u64) -> DelegationRecord {
        DelegationRecord {
            registry: "apnic".into(),
            country_code: cc.into(),
            resource_type: ResourceType::Asn,
            start: ResourceStart::Asn(start),
            count,
            status: ResourceStatus::Assigned,
        }
    }

    #[test]
    fn overlapping_ranges_merge() {
        let recs = [asn_rec("IN", 100, 2), asn_rec("IN", 101, 3)];
        let got: Vec<u32> = extract_country_asns(&recs, "IN").into_iter().collect();
        assert_eq!(got, vec![100, 101, 102, 103]);
    }

    #[test]
    fn other_country_does_not_match() {
        assert!(extract_country_asns(&[asn_rec("JP", 2497, 1)], "IN").is_empty());
    }

    #[test]
    fn range_at_top_of_asn_space_is_clamped() {
        let got = extract_country_asns(&[asn_rec("IN", u32::MAX - 1, 10)], "IN");
        assert_eq!(got.len(), 2);
    }
}
