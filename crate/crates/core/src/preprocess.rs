//! Wind-range cut and interquartile filtering of the power/wind ratio.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SampleRecord;

pub const DEFAULT_WIND_MIN: f64 = 4.5;
pub const DEFAULT_WIND_MAX: f64 = 9.0;

/// Records that survived both cleaning filters, in original order.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanSeries {
    pub records: Vec<SampleRecord>,
    pub report: CleaningReport,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input: usize,
    pub removed_wind_range: usize,
    pub removed_iqr: usize,
    /// Ratio thresholds used by the IQR filter.
    pub q1: Option<f64>,
    pub q3: Option<f64>,
}

impl CleaningReport {
    pub fn kept(&self) -> usize {
        self.input - self.removed_wind_range - self.removed_iqr
    }
}

/// Power over wind speed.
pub fn power_wind_ratio(power: f64, wind: f64) -> Result<f64> {
    if wind <= 0.0 {
        return Err(Error::Domain(format!("wind speed {wind} must be positive")));
    }
    Ok(power / wind)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindFiltered {
    pub records: Vec<SampleRecord>,
    pub removed: usize,
}

impl WindFiltered {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Keeps records with `w_min <= wind < w_max`.
pub fn filter_wind_range(records: &[SampleRecord], w_min: f64, w_max: f64) -> Result<WindFiltered> {
    if !(w_min < w_max) {
        return Err(Error::InvalidParameter(format!(
            "wind range [{w_min}, {w_max}) is empty"
        )));
    }
    let kept: Vec<SampleRecord> = records
        .iter()
        .filter(|r| r.wind_speed >= w_min && r.wind_speed < w_max)
        .cloned()
        .collect();
    Ok(WindFiltered {
        removed: records.len() - kept.len(),
        records: kept,
    })
}

/// Quantile by linear interpolation between order statistics (R type 7).
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// First and third quartile of `values`.
pub fn quartiles(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    (
        quantile_sorted(&sorted, 0.25),
        quantile_sorted(&sorted, 0.75),
    )
}

/// Keeps records whose power/wind ratio lies in `[Q1, Q3]`, preserving order.
pub fn iqr_ratio_filter(records: &[SampleRecord]) -> Result<(Vec<SampleRecord>, f64, f64)> {
    if records.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: records.len(),
        });
    }
    let ratios = records
        .iter()
        .map(|r| power_wind_ratio(r.power, r.wind_speed))
        .collect::<Result<Vec<_>>>()?;
    let (q1, q3) = quartiles(&ratios);
    let kept = records
        .iter()
        .zip(&ratios)
        .filter(|(_, &pw)| pw >= q1 && pw <= q3)
        .map(|(r, _)| r.clone())
        .collect();
    Ok((kept, q1, q3))
}

/// Wind-range cut followed by the IQR ratio filter.
pub fn clean(records: &[SampleRecord], w_min: f64, w_max: f64) -> Result<CleanSeries> {
    let cut = filter_wind_range(records, w_min, w_max)?;
    let mut report = CleaningReport {
        input: records.len(),
        removed_wind_range: cut.removed,
        ..Default::default()
    };
    let (kept, q1, q3) = iqr_ratio_filter(&cut.records)?;
    report.removed_iqr = cut.records.len() - kept.len();
    report.q1 = Some(q1);
    report.q3 = Some(q3);
    Ok(CleanSeries {
        records: kept,
        report,
    })
}
