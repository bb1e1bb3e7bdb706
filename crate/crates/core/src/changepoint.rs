//! Exact mean change-point segmentation (segment neighbourhood search) and
//! long-term event classification.
//!
//! The cost of a segment is its within-segment sum of squared deviations from
//! the segment mean. For every k up to the requested maximum the partition of
//! the series into k contiguous segments with minimum total cost is found by
//! dynamic programming over suffixes, which makes the earliest-boundaries tie
//! rule fall out of a left-to-right reconstruction.

use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative gain below which adding a segment is not worth it.
pub const DEFAULT_MIN_GAIN: f64 = 0.05;
/// Default long-term threshold: a segment whose measure mean falls below 85 %
/// of the reference mean is an event.
pub const DEFAULT_LONG_TERM_THRESHOLD: f64 = 0.15;
/// Segment count of the reproduction profile.
pub const DEFAULT_MAX_SEGMENTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Inclusive, 0-based.
    pub start: usize,
    /// Inclusive, 0-based.
    pub end: usize,
    pub mean: f64,
    pub cost: f64,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start..=self.end).contains(&index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    pub total_cost: f64,
}

impl Segmentation {
    pub fn k(&self) -> usize {
        self.segments.len()
    }

    /// Re-evaluates fixed boundaries on another series of the same length.
    pub fn from_bounds(values: &[f64], bounds: &[(usize, usize)]) -> Result<Self> {
        let mut expected = 0;
        for &(s, e) in bounds {
            if s != expected || e < s || e >= values.len() {
                return Err(Error::InvalidInput(format!(
                    "segment bounds ({s}, {e}) do not tile a series of length {}",
                    values.len()
                )));
            }
            expected = e + 1;
        }
        if expected != values.len() {
            return Err(Error::InvalidInput(
                "segment bounds do not cover the series".into(),
            ));
        }
        let sums = PrefixSums::new(values);
        let segments: Vec<Segment> = bounds
            .iter()
            .map(|&(s, e)| sums.segment(s, e + 1))
            .collect();
        let total_cost = segments.iter().rev().fold(0.0, |acc, s| s.cost + acc);
        Ok(Segmentation {
            segments,
            total_cost,
        })
    }

    pub fn bounds(&self) -> Vec<(usize, usize)> {
        self.segments.iter().map(|s| (s.start, s.end)).collect()
    }

    /// Index of the segment containing `index`.
    pub fn segment_of(&self, index: usize) -> Option<usize> {
        self.segments.iter().position(|s| s.contains(index))
    }
}

/// Cumulative sum of deviations from the global mean.
pub fn cusum(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v - mean;
            Some(*acc)
        })
        .collect()
}

/// Sum of squared deviations from the mean, from first and second moments.
pub fn sse_from_sums(sum: f64, sum_sq: f64, len: usize) -> f64 {
    (sum_sq - sum * sum / len as f64).max(0.0)
}

struct PrefixSums {
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl PrefixSums {
    fn new(values: &[f64]) -> Self {
        let mut s1 = Vec::with_capacity(values.len() + 1);
        let mut s2 = Vec::with_capacity(values.len() + 1);
        s1.push(0.0);
        s2.push(0.0);
        for v in values {
            s1.push(s1.last().unwrap() + v);
            s2.push(s2.last().unwrap() + v * v);
        }
        PrefixSums { s1, s2 }
    }

    /// Cost of the half-open range `[i, j)`.
    fn cost(&self, i: usize, j: usize) -> f64 {
        sse_from_sums(self.s1[j] - self.s1[i], self.s2[j] - self.s2[i], j - i)
    }

    fn segment(&self, i: usize, j: usize) -> Segment {
        Segment {
            start: i,
            end: j - 1,
            mean: (self.s1[j] - self.s1[i]) / (j - i) as f64,
            cost: self.cost(i, j),
        }
    }
}

/// Optimal segmentations for every k in `1..=max_segments`.
pub fn segneigh_mean(values: &[f64], max_segments: usize) -> Result<Vec<Segmentation>> {
    let n = values.len();
    if max_segments == 0 {
        return Err(Error::InvalidInput("max_segments must be >= 1".into()));
    }
    if max_segments > n {
        return Err(Error::InvalidInput(format!(
            "max_segments {max_segments} exceeds series length {n}"
        )));
    }
    let sums = PrefixSums::new(values);

    // best[k-1][i]: minimum cost of values[i..] split into k segments.
    // split[k-1][i]: end (exclusive) of the first of those segments.
    let mut best = vec![vec![f64::INFINITY; n]; max_segments];
    let mut split = vec![vec![n; n]; max_segments];
    for i in 0..n {
        best[0][i] = sums.cost(i, n);
    }
    for k in 2..=max_segments {
        let (done, rest) = best.split_at_mut(k - 1);
        let prev = &done[k - 2];
        let cur = &mut rest[0];
        for i in 0..=n - k {
            let mut min = f64::INFINITY;
            let mut arg = n;
            for s in i + 1..=n - k + 1 {
                let c = sums.cost(i, s) + prev[s];
                if c < min {
                    min = c;
                    arg = s;
                }
            }
            cur[i] = min;
            split[k - 1][i] = arg;
        }
    }

    Ok((1..=max_segments)
        .map(|k| {
            let mut segments = Vec::with_capacity(k);
            let mut i = 0;
            for remaining in (1..=k).rev() {
                let j = if remaining == 1 {
                    n
                } else {
                    split[remaining - 1][i]
                };
                segments.push(sums.segment(i, j));
                i = j;
            }
            Segmentation {
                segments,
                total_cost: best[k - 1][0],
            }
        })
        .collect())
}

/// Elbow rule: the smallest k for which going to k + 1 segments removes less
/// than `min_gain` of the one-segment cost.
pub fn choose_k(segmentations: &[Segmentation], min_gain: f64) -> usize {
    let Some(first) = segmentations.first() else {
        return 0;
    };
    let base = first.total_cost;
    if base <= 0.0 {
        return 1;
    }
    for w in segmentations.windows(2) {
        let gain = (w[0].total_cost - w[1].total_cost) / base;
        if gain < min_gain {
            return w[0].k();
        }
    }
    segmentations.last().unwrap().k()
}

/// Three-point running median; endpoints are kept. Removes single-day
/// excursions while leaving level shifts of two or more days in place.
pub fn median_filter3(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 == n {
                values[i]
            } else {
                let mut w = [values[i - 1], values[i], values[i + 1]];
                w.sort_by(f64::total_cmp);
                w[1]
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongTermClass {
    pub segment: Segment,
    pub reference_mean: f64,
    /// 100 * segment mean / reference mean, unrounded.
    pub diff_percent: f64,
    pub is_event: bool,
}

impl LongTermClass {
    pub fn diff_percent_rounded(&self) -> i64 {
        self.diff_percent.round() as i64
    }
}

/// Flags segments whose mean falls below `(1 - threshold)` of the reference
/// mean over the same span.
pub fn classify_long_term(
    segmentation: &Segmentation,
    reference_means: &[f64],
    threshold: f64,
) -> Result<Vec<LongTermClass>> {
    if reference_means.len() != segmentation.k() {
        return Err(Error::InvalidInput(format!(
            "{} reference means for {} segments",
            reference_means.len(),
            segmentation.k()
        )));
    }
    if !(0.0..1.0).contains(&threshold) {
        return Err(Error::InvalidInput(format!(
            "threshold {threshold} outside [0, 1)"
        )));
    }
    let cutoff = 100.0 * (1.0 - threshold);
    segmentation
        .segments
        .iter()
        .zip(reference_means)
        .enumerate()
        .map(|(i, (seg, &reference_mean))| {
            if reference_mean == 0.0 {
                return Err(Error::UndefinedRatio { segment: i });
            }
            let diff_percent = 100.0 * seg.mean / reference_mean;
            Ok(LongTermClass {
                segment: *seg,
                reference_mean,
                diff_percent,
                is_event: diff_percent < cutoff,
            })
        })
        .collect()
}

/// `k,start_date,end_date,mean,cost,diff_percent,is_event`; `k` is the
/// 1-based segment ordinal.
pub fn write_segments_csv<W: Write>(
    w: W,
    dates: &[NaiveDate],
    classes: &[LongTermClass],
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "k",
        "start_date",
        "end_date",
        "mean",
        "cost",
        "diff_percent",
        "is_event",
    ])?;
    for (i, c) in classes.iter().enumerate() {
        out.write_record([
            (i + 1).to_string(),
            dates[c.segment.start].to_string(),
            dates[c.segment.end].to_string(),
            c.segment.mean.to_string(),
            c.segment.cost.to_string(),
            c.diff_percent_rounded().to_string(),
            c.is_event.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads back the segment date spans written by [`write_segments_csv`] and
/// maps them onto indices of `dates`.
pub fn read_segment_bounds<R: Read>(r: R, dates: &[NaiveDate]) -> Result<Vec<(usize, usize)>> {
    #[derive(Deserialize)]
    struct Row {
        start_date: NaiveDate,
        end_date: NaiveDate,
    }
    let find = |d: NaiveDate| {
        dates
            .binary_search(&d)
            .map_err(|_| Error::InvalidInput(format!("segment date {d} not in series")))
    };
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|row| {
            let row: Row = row?;
            Ok((find(row.start_date)?, find(row.end_date)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cusum_examples() {
        assert_eq!(cusum(&[1.0, 2.0, 3.0]), vec![-1.0, -1.0, 0.0]);
        assert_eq!(cusum(&[4.0; 5]), vec![0.0; 5]);
        let c = cusum(&[-2.0, 1.0, 3.0, -2.0]);
        assert!(c.last().unwrap().abs() < 1e-12);
        assert!(cusum(&[]).is_empty());
    }

    #[test]
    fn exact_step_two_segments() {
        let segs = segneigh_mean(&[0.0, 0.0, 0.0, 10.0, 10.0, 10.0], 2).unwrap();
        assert_eq!(segs[1].bounds(), vec![(0, 2), (3, 5)]);
        assert_eq!(segs[1].total_cost, 0.0);
        assert_eq!(segs[1].segments[1].mean, 10.0);
    }

    #[test]
    fn three_levels_three_segments() {
        let segs = segneigh_mean(&[1.0, 1.0, 2.0, 2.0, 9.0], 3).unwrap();
        assert_eq!(segs[2].bounds(), vec![(0, 1), (2, 3), (4, 4)]);
        assert_eq!(segs[2].total_cost, 0.0);
    }

    #[test]
    fn ties_take_earliest_boundaries() {
        // [0,1,0]: cutting after index 0 or after index 1 both leave cost 0.5
        let segs = segneigh_mean(&[0.0, 1.0, 0.0], 2).unwrap();
        assert_eq!(segs[1].bounds(), vec![(0, 0), (1, 2)]);
    }

    #[test]
    fn segneigh_rejects_bad_k() {
        assert!(segneigh_mean(&[1.0, 2.0], 3).is_err());
        assert!(segneigh_mean(&[1.0, 2.0], 0).is_err());
        let all = segneigh_mean(&[1.0, 5.0], 2).unwrap();
        assert_eq!(all[1].bounds(), vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn from_bounds_validates_tiling() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert!(Segmentation::from_bounds(&v, &[(0, 1), (2, 3)]).is_ok());
        assert!(Segmentation::from_bounds(&v, &[(0, 1), (3, 3)]).is_err());
        assert!(Segmentation::from_bounds(&v, &[(0, 1)]).is_err());
        let s = Segmentation::from_bounds(&v, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(s.segments[0].mean, 1.5);
        assert_eq!(s.total_cost, 1.0);
        assert_eq!(s.segment_of(2), Some(1));
    }

    #[test]
    fn choose_k_on_step_is_two() {
        let mut v = vec![5.0; 30];
        v.extend([50.0; 30]);
        let segs = segneigh_mean(&v, 6).unwrap();
        assert_eq!(choose_k(&segs, DEFAULT_MIN_GAIN), 2);
    }

    #[test]
    fn choose_k_on_constant_is_one() {
        let segs = segneigh_mean(&[3.0; 10], 4).unwrap();
        assert_eq!(choose_k(&segs, DEFAULT_MIN_GAIN), 1);
    }

    #[test]
    fn median_filter_removes_single_day_spikes_only() {
        let v = [5.0, 5.0, 1.0, 5.0, 5.0, 1.0, 1.0, 5.0, 9.0];
        assert_eq!(
            median_filter3(&v),
            vec![5.0, 5.0, 5.0, 5.0, 5.0, 1.0, 1.0, 5.0, 9.0]
        );
    }

    fn seg_with_mean(mean: f64) -> Segment {
        Segment {
            start: 0,
            end: 0,
            mean,
            cost: 0.0,
        }
    }

    #[test]
    fn classification_examples() {
        let seg = Segmentation {
            segments: vec![
                seg_with_mean(16867.0),
                seg_with_mean(13983.0),
                seg_with_mean(10333.0),
            ],
            total_cost: 0.0,
        };
        let c = classify_long_term(
            &seg,
            &[17407.0, 17699.0, 18136.0],
            DEFAULT_LONG_TERM_THRESHOLD,
        )
        .unwrap();
        assert_eq!(c[0].diff_percent_rounded(), 97);
        assert!(!c[0].is_event);
        assert_eq!(c[1].diff_percent_rounded(), 79);
        assert!(c[1].is_event);
        assert_eq!(c[2].diff_percent_rounded(), 57);
        assert!(c[2].is_event);
    }

    #[test]
    fn classification_errors() {
        let seg = Segmentation {
            segments: vec![seg_with_mean(1.0)],
            total_cost: 0.0,
        };
        assert!(matches!(
            classify_long_term(&seg, &[0.0], 0.15),
            Err(Error::UndefinedRatio { segment: 0 })
        ));
        assert!(classify_long_term(&seg, &[1.0, 2.0], 0.15).is_err());
    }

    #[test]
    fn segments_csv_round_trip() {
        let dates: Vec<NaiveDate> = (1..=6)
            .map(|d| NaiveDate::from_ymd_opt(2012, 3, d).unwrap())
            .collect();
        let v = [10.0, 10.0, 10.0, 8.0, 8.0, 8.0];
        let seg = Segmentation::from_bounds(&v, &[(0, 2), (3, 5)]).unwrap();
        let classes = classify_long_term(&seg, &[10.0, 10.0], 0.15).unwrap();
        let mut buf = Vec::new();
        write_segments_csv(&mut buf, &dates, &classes).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(
            text.contains("2,2012-03-04,2012-03-06,8,0,80,true"),
            "{text}"
        );
        assert_eq!(
            read_segment_bounds(buf.as_slice(), &dates).unwrap(),
            vec![(0, 2), (3, 5)]
        );
    }
}
