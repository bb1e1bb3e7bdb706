//! Routing-table snapshot and RIR delegation parsing.
//!
//! Two snapshot layouts are understood: the canonical tab-separated format
//! (`prefix<TAB>next_hop<TAB>as_path`) and the text table printed by
//! `show ip bgp` on a route collector. Damaged lines are skipped and counted,
//! never fatal.

mod delegation;
mod show_ip_bgp;
mod snapshot;

pub use delegation::{
    extract_country_asns, parse_delegation, DelegationRecord, DelegationSummary, ParsedDelegation,
    ResourceStart, ResourceStatus, ResourceType, WILDCARD_COUNTRY,
};
pub use snapshot::{
    parse_as_path, parse_snapshot, ParseSummary, RouteEntry, Snapshot, SnapshotFormat,
};
