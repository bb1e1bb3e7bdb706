//! Dated measure series and their `date,value` CSV form.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A daily series of prefix counts (or means of them, after smoothing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    /// The peer fraction the counts were taken at; `None` for series that are
    /// not x%-peer measures (unique prefixes, peer counts).
    threshold_x: Option<f64>,
}

impl MeasureSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>, threshold_x: Option<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} dates but {} values",
                dates.len(),
                values.len()
            )));
        }
        check_increasing(&dates)?;
        if let Some(x) = threshold_x {
            if !(x > 0.0 && x <= 1.0) {
                return Err(Error::InvalidInput(format!("threshold {x} outside (0, 1]")));
            }
        }
        Ok(MeasureSeries {
            dates,
            values,
            threshold_x,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn threshold_x(&self) -> Option<f64> {
        self.threshold_x
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.dates.len());
        MeasureSeries {
            dates: self.dates.clone(),
            values,
            threshold_x: self.threshold_x,
        }
    }

    pub fn index_of(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["date", "value"])?;
        for (d, v) in self.dates.iter().zip(&self.values) {
            out.write_record([d.to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R, threshold_x: Option<f64>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            date: NaiveDate,
            value: f64,
        }
        let mut dates = Vec::new();
        let mut values = Vec::new();
        for row in csv::Reader::from_reader(r).deserialize() {
            let row: Row = row?;
            dates.push(row.date);
            values.push(row.value);
        }
        MeasureSeries::new(dates, values, threshold_x)
    }
}

pub(crate) fn check_increasing(dates: &[NaiveDate]) -> Result<()> {
    match dates.windows(2).find(|w| w[0] >= w[1]) {
        Some(w) => Err(Error::InvalidInput(format!(
            "dates not strictly increasing at {} -> {}",
            w[0], w[1]
        ))),
        None => Ok(()),
    }
}
