use chrono::NaiveDate;
use std::fmt;

/// Coarse failure classes, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("snapshot has no valid route lines ({route_lines} route lines, {skipped} skipped)")]
    EmptySnapshot { route_lines: usize, skipped: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("no routes left after country filtering")]
    EmptyPeerSet,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("series is constant, min-max range is zero")]
    DegenerateRange,

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("partial autocorrelation recursion diverged at lag {lag} (|phi| = {value})")]
    Divergence { lag: usize, value: f64 },

    #[error(
        "model fit did not converge after {iterations} iterations (best css {css}, params {params:?})"
    )]
    NotConverged {
        iterations: usize,
        css: f64,
        params: Vec<f64>,
    },

    #[error("reference mean of segment {segment} is zero, ratio undefined")]
    UndefinedRatio { segment: usize },

    #[error("stage `{stage}` failed{}: {source}", DateSuffix(*.date))]
    Stage {
        stage: &'static str,
        date: Option<NaiveDate>,
        source: Box<Error>,
    },
}

struct DateSuffix(Option<NaiveDate>);

impl fmt::Display for DateSuffix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(d) => write!(f, " on {d}"),
            None => Ok(()),
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) => ErrorClass::Config,
            Error::DegenerateRange
            | Error::ZeroVariance
            | Error::Divergence { .. }
            | Error::NotConverged { .. }
            | Error::UndefinedRatio { .. } => ErrorClass::Numerical,
            Error::Stage { source, .. } => source.class(),
            _ => ErrorClass::Data,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str, date: Option<NaiveDate>) -> Error {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                date,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
