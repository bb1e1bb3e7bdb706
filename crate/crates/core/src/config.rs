//! Pipeline configuration.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aberration::DEFAULT_WARMUP;
use crate::arima::ArimaOrder;
use crate::changepoint::{DEFAULT_LONG_TERM_THRESHOLD, DEFAULT_MAX_SEGMENTS, DEFAULT_MIN_GAIN};
use crate::error::{Error, Result};
use crate::ingest::SnapshotFormat;
use crate::reachability::{DEFAULT_SMOOTHING_WINDOW, DEFAULT_X};

/// How many segments the change-point stage keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KPolicy {
    /// Elbow rule over `1..=max_segments`.
    Auto,
    /// Always `max_segments`.
    Fixed,
}

/// The series the change-point stage runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentInput {
    /// Three-point running median of the raw measure.
    Median3,
    Raw,
    /// Trailing mean over `smoothing_window`.
    Smoothed,
}

macro_rules! parse_enum {
    ($t:ty, $($s:literal => $v:expr),+) => {
        impl std::str::FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($v),)+
                    other => Err(Error::Config(format!(
                        concat!("unknown ", stringify!($t), " `{}`"), other
                    ))),
                }
            }
        }
    };
}

parse_enum!(KPolicy, "auto" => KPolicy::Auto, "fixed" => KPolicy::Fixed);
parse_enum!(SegmentInput,
    "median3" => SegmentInput::Median3,
    "raw" => SegmentInput::Raw,
    "smoothed" => SegmentInput::Smoothed);

/// `country_code` value that keeps every route.
pub const ALL_COUNTRIES: &str = "*";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub snapshot_dir: PathBuf,
    /// File name template; `{date}` is replaced by the date in `date_format`.
    pub snapshot_pattern: String,
    pub date_format: String,
    pub snapshot_format: SnapshotFormat,
    pub delegation_file: PathBuf,
    pub country_code: String,
    pub x_threshold: f64,
    pub smoothing_window: usize,
    pub max_segments: usize,
    pub k_policy: KPolicy,
    pub min_gain: f64,
    pub long_term_threshold: f64,
    pub aberration_warmup: usize,
    pub max_lag: usize,
    pub segment_input: SegmentInput,
    /// Take segment means for the long-term ratio from the smoothed series
    /// rather than the raw one.
    pub diff_on_smoothed: bool,
    /// `[p, d, q]`; chosen per segment from the correlogram when unset.
    pub arima_order: Option<[usize; 3]>,
    pub ubc_target_as: u32,
    pub ubc_origin_only: bool,
    pub ubc_top_n: usize,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            snapshot_dir: PathBuf::from("snapshots"),
            snapshot_pattern: "{date}.tsv".into(),
            date_format: "%Y-%m-%d".into(),
            snapshot_format: SnapshotFormat::CanonicalTsv,
            delegation_file: PathBuf::from("delegated.txt"),
            country_code: "IN".into(),
            x_threshold: DEFAULT_X,
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
            max_segments: DEFAULT_MAX_SEGMENTS,
            k_policy: KPolicy::Auto,
            min_gain: DEFAULT_MIN_GAIN,
            long_term_threshold: DEFAULT_LONG_TERM_THRESHOLD,
            aberration_warmup: DEFAULT_WARMUP,
            max_lag: 10,
            segment_input: SegmentInput::Median3,
            diff_on_smoothed: false,
            arima_order: None,
            ubc_target_as: 9498,
            ubc_origin_only: false,
            ubc_top_n: 4,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML file. Relative paths inside it are taken relative to the
    /// file's directory. Nothing is validated yet; call [`Self::validate`]
    /// after applying overrides.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(base) = path.parent() {
            for p in [
                &mut cfg.snapshot_dir,
                &mut cfg.delegation_file,
                &mut cfg.output_dir,
            ] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn arima_order(&self) -> Option<ArimaOrder> {
        self.arima_order.map(|[p, d, q]| ArimaOrder::new(p, d, q))
    }

    /// Checks ranges and that the input paths exist. The delegation file is
    /// not needed with [`ALL_COUNTRIES`].
    pub fn validate(&self) -> Result<()> {
        self.validate_ranges()?;
        let fail = |m: String| Err(Error::Config(m));
        if !self.snapshot_dir.is_dir() {
            return fail(format!(
                "snapshot_dir {} is not a directory",
                self.snapshot_dir.display()
            ));
        }
        if self.country_code != ALL_COUNTRIES && !self.delegation_file.is_file() {
            return fail(format!(
                "delegation_file {} does not exist",
                self.delegation_file.display()
            ));
        }
        Ok(())
    }

    /// Checks thresholds and names without touching the file system.
    pub fn validate_ranges(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.x_threshold > 0.0 && self.x_threshold <= 1.0) {
            return fail(format!("x_threshold {} outside (0, 1]", self.x_threshold));
        }
        if self.smoothing_window == 0 {
            return fail("smoothing_window must be at least 1".into());
        }
        if self.max_segments == 0 {
            return fail("max_segments must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.min_gain) {
            return fail(format!("min_gain {} outside [0, 1)", self.min_gain));
        }
        if !(self.long_term_threshold > 0.0 && self.long_term_threshold < 1.0) {
            return fail(format!(
                "long_term_threshold {} outside (0, 1)",
                self.long_term_threshold
            ));
        }
        if self.max_lag == 0 {
            return fail("max_lag must be at least 1".into());
        }
        if let Some(order) = self.arima_order() {
            if order.d > 2 {
                return fail(format!("arima_order d = {} exceeds 2", order.d));
            }
            if self.aberration_warmup < order.min_observations() {
                return fail(format!(
                    "aberration_warmup {} too short for {order}",
                    self.aberration_warmup
                ));
            }
        }
        if self.aberration_warmup < 2 {
            return fail("aberration_warmup must be at least 2".into());
        }
        if self.ubc_target_as == 0 || self.ubc_top_n == 0 {
            return fail("ubc_target_as and ubc_top_n must be positive".into());
        }
        let code = &self.country_code;
        if code != ALL_COUNTRIES
            && (code.len() != 2 || !code.bytes().all(|b| b.is_ascii_uppercase()))
        {
            return fail(format!(
                "country_code {code:?} is neither two uppercase letters nor \"*\""
            ));
        }
        if !self.snapshot_pattern.contains("{date}") {
            return fail(format!(
                "snapshot_pattern {:?} lacks {{date}}",
                self.snapshot_pattern
            ));
        }
        Ok(())
    }
}
