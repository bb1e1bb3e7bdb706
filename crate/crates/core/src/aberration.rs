//! One-step-ahead aberration detection and the merged event report.

use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::arima::{fit, forecast, ArimaModel, ArimaOrder};
use crate::changepoint::LongTermClass;
use crate::error::{Error, Result};
use crate::series::check_increasing;

pub const DEFAULT_WARMUP: usize = 21;
/// Trailing window of the impact baseline.
pub const IMPACT_BASELINE_WINDOW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Drop,
    Raise,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Drop => "drop",
            Direction::Raise => "raise",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AberrationEvent {
    pub date: NaiveDate,
    /// Position in the series passed to [`detect_stochastic`].
    pub index: usize,
    pub observed: f64,
    pub expected: f64,
    pub lo95: f64,
    pub hi95: f64,
    pub direction: Direction,
    pub impact_percent: f64,
    /// The model the flagging forecast came from.
    pub model: ArimaModel,
}

impl AberrationEvent {
    /// The 95 % bound the observation crossed.
    pub fn violated_bound(&self) -> f64 {
        match self.direction {
            Direction::Drop => self.lo95,
            Direction::Raise => self.hi95,
        }
    }
}

/// One row of the rolling forecast table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub date: NaiveDate,
    pub index: usize,
    pub actual: f64,
    pub point: f64,
    pub lo80: f64,
    pub hi80: f64,
    pub lo95: f64,
    pub hi95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub events: Vec<AberrationEvent>,
    pub forecasts: Vec<ForecastRow>,
    /// Set when a refit failed and detection stopped early.
    pub diagnostic: Option<String>,
}

/// `100 * |observed - baseline| / baseline`.
pub fn quantify_impact(observed: f64, baseline: f64) -> Result<f64> {
    if !(baseline > 0.0) {
        return Err(Error::InvalidInput(format!(
            "impact baseline {baseline} is not positive"
        )));
    }
    Ok(100.0 * (observed - baseline).abs() / baseline)
}

/// Rolling one-step-ahead detection over `values`.
///
/// From index `warmup` on, the model is refit on everything before `t` and
/// `t` is flagged when it falls strictly outside the 95 % interval. Flagged
/// observations are replaced by their point forecast in later fits and in
/// the impact baseline.
pub fn detect_stochastic(
    dates: &[NaiveDate],
    values: &[f64],
    order: ArimaOrder,
    warmup: usize,
) -> Result<Detection> {
    if dates.len() != values.len() {
        return Err(Error::InvalidInput(format!(
            "{} dates but {} values",
            dates.len(),
            values.len()
        )));
    }
    check_increasing(dates)?;
    if warmup < order.min_observations() {
        return Err(Error::InvalidInput(format!(
            "warmup {warmup} below the {} observations {order} needs",
            order.min_observations()
        )));
    }
    if values.len() <= warmup {
        return Err(Error::InvalidInput(format!(
            "series of length {} not longer than warmup {warmup}",
            values.len()
        )));
    }

    let mut cleaned: Vec<f64> = values[..warmup].to_vec();
    let mut events = Vec::new();
    let mut forecasts = Vec::new();
    for t in warmup..values.len() {
        let model = match fit(&cleaned, order) {
            Ok(m) => m,
            Err(e) => {
                return Ok(Detection {
                    events,
                    forecasts,
                    diagnostic: Some(format!("fit of {order} failed at {}: {e}", dates[t])),
                })
            }
        };
        let f = forecast(&model, 1)[0];
        let observed = values[t];
        forecasts.push(ForecastRow {
            date: dates[t],
            index: t,
            actual: observed,
            point: f.point,
            lo80: f.pi80.0,
            hi80: f.pi80.1,
            lo95: f.pi95.0,
            hi95: f.pi95.1,
        });
        let direction = if observed < f.pi95.0 {
            Some(Direction::Drop)
        } else if observed > f.pi95.1 {
            Some(Direction::Raise)
        } else {
            None
        };
        match direction {
            Some(direction) => {
                let from = cleaned.len().saturating_sub(IMPACT_BASELINE_WINDOW);
                let window = &cleaned[from..];
                let baseline = window.iter().sum::<f64>() / window.len() as f64;
                events.push(AberrationEvent {
                    date: dates[t],
                    index: t,
                    observed,
                    expected: f.point,
                    lo95: f.pi95.0,
                    hi95: f.pi95.1,
                    direction,
                    impact_percent: quantify_impact(observed, baseline)?,
                    model,
                });
                cleaned.push(f.point);
            }
            None => cleaned.push(observed),
        }
    }
    Ok(Detection {
        events,
        forecasts,
        diagnostic: None,
    })
}

/// `t,actual,point,lo80,hi80,lo95,hi95`; `t` is the date.
pub fn write_forecasts_csv<W: Write>(w: W, rows: &[ForecastRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "actual", "point", "lo80", "hi80", "lo95", "hi95"])?;
    for r in rows {
        out.write_record([
            r.date.to_string(),
            r.actual.to_string(),
            r.point.to_string(),
            r.lo80.to_string(),
            r.hi80.to_string(),
            r.lo95.to_string(),
            r.hi95.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub country: String,
    pub x_threshold: f64,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    /// 1-based ordinal.
    pub k: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub mean: f64,
    pub reference_mean: f64,
    pub diff_percent: i64,
    pub long_term: bool,
    pub stochastic_count: usize,
    pub peak_impact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongTermEvent {
    pub k: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub diff_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub metadata: ReportMetadata,
    pub segments: Vec<SegmentRow>,
    pub long_term: Vec<LongTermEvent>,
    pub stochastic: Vec<AberrationEvent>,
    pub diagnostics: Vec<String>,
}

/// Merges classified segments and stochastic events over `dates`.
///
/// The segments must tile `dates` exactly and every event must sit on one of
/// them.
pub fn assemble_report(
    dates: &[NaiveDate],
    classes: &[LongTermClass],
    mut stochastic: Vec<AberrationEvent>,
    metadata: ReportMetadata,
    diagnostics: Vec<String>,
) -> Result<EventReport> {
    if dates.is_empty() || classes.is_empty() {
        return Err(Error::InvalidInput("empty series or segmentation".into()));
    }
    if metadata.start != dates[0] || metadata.end != dates[dates.len() - 1] {
        return Err(Error::InvalidInput(format!(
            "metadata span {}..{} does not match series span {}..{}",
            metadata.start,
            metadata.end,
            dates[0],
            dates[dates.len() - 1]
        )));
    }
    let mut expected_start = 0;
    for c in classes {
        if c.segment.start != expected_start || c.segment.end < c.segment.start {
            return Err(Error::InvalidInput(format!(
                "segments do not tile the series at index {expected_start}"
            )));
        }
        expected_start = c.segment.end + 1;
    }
    if expected_start != dates.len() {
        return Err(Error::InvalidInput(format!(
            "segments cover {expected_start} of {} dates",
            dates.len()
        )));
    }

    stochastic.sort_by_key(|e| (e.date, e.index));
    let mut rows: Vec<SegmentRow> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| SegmentRow {
            k: i + 1,
            start_date: dates[c.segment.start],
            end_date: dates[c.segment.end],
            mean: c.segment.mean,
            reference_mean: c.reference_mean,
            diff_percent: c.diff_percent_rounded(),
            long_term: c.is_event,
            stochastic_count: 0,
            peak_impact: None,
        })
        .collect();
    for e in &stochastic {
        if dates.get(e.index) != Some(&e.date) {
            return Err(Error::InvalidInput(format!(
                "event on {} does not match series index {}",
                e.date, e.index
            )));
        }
        let row = classes
            .iter()
            .position(|c| c.segment.contains(e.index))
            .map(|i| &mut rows[i])
            .ok_or_else(|| {
                Error::InvalidInput(format!("event on {} outside all segments", e.date))
            })?;
        row.stochastic_count += 1;
        row.peak_impact = Some(
            row.peak_impact
                .map_or(e.impact_percent, |p| p.max(e.impact_percent)),
        );
    }
    let long_term = classes
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_event)
        .map(|(i, c)| LongTermEvent {
            k: i + 1,
            start_date: dates[c.segment.start],
            end_date: dates[c.segment.end],
            diff_percent: c.diff_percent,
        })
        .collect();
    Ok(EventReport {
        metadata,
        segments: rows,
        long_term,
        stochastic,
        diagnostics,
    })
}

impl EventReport {
    /// `date,type,observed,expected,lo95,hi95,direction,impact_percent`.
    ///
    /// Long-term rows carry the segment and reference means as observed and
    /// expected, the segment start as date and leave the bounds empty.
    pub fn write_events_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut rows: Vec<(NaiveDate, u8, [String; 8])> = Vec::new();
        for (seg, lt) in self
            .segments
            .iter()
            .filter(|s| s.long_term)
            .zip(&self.long_term)
        {
            rows.push((
                lt.start_date,
                0,
                [
                    lt.start_date.to_string(),
                    "long_term".into(),
                    seg.mean.to_string(),
                    seg.reference_mean.to_string(),
                    String::new(),
                    String::new(),
                    Direction::Drop.as_str().into(),
                    (100.0 - lt.diff_percent).to_string(),
                ],
            ));
        }
        for e in &self.stochastic {
            rows.push((
                e.date,
                1,
                [
                    e.date.to_string(),
                    "stochastic".into(),
                    e.observed.to_string(),
                    e.expected.to_string(),
                    e.lo95.to_string(),
                    e.hi95.to_string(),
                    e.direction.as_str().into(),
                    e.impact_percent.to_string(),
                ],
            ));
        }
        rows.sort_by_key(|a| (a.0, a.1));
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "date",
            "type",
            "observed",
            "expected",
            "lo95",
            "hi95",
            "direction",
            "impact_percent",
        ])?;
        for (_, _, r) in rows {
            out.write_record(&r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }
}
