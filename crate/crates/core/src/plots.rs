//! Plot-ready data: power-curve scatter at each cleaning stage and a
//! temperature histogram. No rendering happens here.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SampleRecord;
use crate::preprocess::{filter_wind_range, iqr_ratio_filter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveStage {
    Raw,
    WindCut,
    Cleaned,
}

impl CurveStage {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveStage::Raw => "raw",
            CurveStage::WindCut => "wind_cut",
            CurveStage::Cleaned => "cleaned",
        }
    }
}

/// Records surviving each cleaning stage.
pub fn power_curve_stages(
    records: &[SampleRecord],
    w_min: f64,
    w_max: f64,
) -> Result<Vec<(CurveStage, Vec<SampleRecord>)>> {
    let cut = filter_wind_range(records, w_min, w_max)?;
    let (cleaned, _, _) = iqr_ratio_filter(&cut.records)?;
    Ok(vec![
        (CurveStage::Raw, records.to_vec()),
        (CurveStage::WindCut, cut.records),
        (CurveStage::Cleaned, cleaned),
    ])
}

/// Rows `wind_speed,power`.
pub fn write_power_curve<W: Write>(records: &[SampleRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["wind_speed", "power"])?;
    for r in records {
        w.write_record([r.wind_speed.to_string(), r.power.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<power curve>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Equal-width histogram over `[min, max]` of the data; the last bin is
/// closed on the right.
pub fn histogram(values: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::InvalidParameter(
            "histogram needs at least one bin".into(),
        ));
    }
    if values.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            lower: lo + i as f64 * width,
            upper: if i + 1 == bins {
                lo + bins as f64 * width
            } else {
                lo + (i + 1) as f64 * width
            },
            count,
        })
        .collect())
}

/// Rows `lower,upper,count`.
pub fn write_histogram<W: Write>(bins: &[HistogramBin], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["lower", "upper", "count"])?;
    for b in bins {
        w.write_record([
            b.lower.to_string(),
            b.upper.to_string(),
            b.count.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<histogram>", e))?;
    Ok(())
}
