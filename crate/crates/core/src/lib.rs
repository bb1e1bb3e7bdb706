//! Prefix-reachability measures over daily BGP routing-table snapshots, with
//! mean change-point segmentation and ARIMA-based aberration detection.

pub mod aberration;
pub mod arima;
pub mod changepoint;
pub mod config;
pub mod error;
pub mod fixture;
pub mod ingest;
pub mod pipeline;
pub mod reachability;
pub mod series;
pub mod ubc;

pub use aberration::{AberrationEvent, Direction, EventReport};
pub use arima::{ArimaModel, ArimaOrder, Correlogram, Forecast};
pub use changepoint::{LongTermClass, Segment, Segmentation};
pub use config::PipelineConfig;
pub use error::{Error, ErrorClass, Result};
pub use fixture::FixtureSpec;
pub use ingest::{DelegationRecord, RouteEntry, Snapshot, SnapshotFormat};
pub use reachability::{BinConfig, PeerId, PeerSet};
pub use series::MeasureSeries;
pub use ubc::UpstreamStat;
