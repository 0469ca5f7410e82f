//! Regression-based health index: the least-squares slope of the
//! concatenated memberships to the high (or low) power concept against
//! observation order.
//!
//! A falling high-concept membership, or a rising low-concept membership,
//! indicates aging.

use serde::{Deserialize, Serialize};

use crate::concepts::{RankLabel, WindowConcepts};
use crate::error::{Error, Result};
use crate::table::HealthTable;

/// Scale applied to slopes in the reported tables.
pub const DEFAULT_SLOPE_SCALE: f64 = 1e5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipSequence {
    pub label: RankLabel,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionIndex {
    pub label: RankLabel,
    /// Per observation step.
    pub slope: f64,
    pub intercept: f64,
    pub n: usize,
}

impl RegressionIndex {
    /// Whether the slope's sign points to degradation for this concept.
    pub fn indicates_aging(&self) -> bool {
        match self.label {
            RankLabel::High => self.slope < 0.0,
            RankLabel::Low => self.slope > 0.0,
            RankLabel::Moderate => false,
        }
    }
}

/// Column index of `label` among `clusters` ranked concepts.
fn column_for(label: RankLabel, clusters: usize) -> usize {
    match label {
        RankLabel::High => 0,
        RankLabel::Low => clusters - 1,
        RankLabel::Moderate => clusters / 2,
    }
}

/// Concatenates, in window order, the memberships to the concept of `label`.
pub fn concat_memberships(
    windows: &[WindowConcepts],
    label: RankLabel,
) -> Result<MembershipSequence> {
    if windows.is_empty() {
        return Err(Error::InvalidParameter("no windows to concatenate".into()));
    }
    let mut values = Vec::with_capacity(windows.iter().map(|w| w.memberships.rows()).sum());
    for w in windows {
        let col = column_for(label, w.memberships.cols());
        values.extend(w.memberships.column(col));
    }
    Ok(MembershipSequence { label, values })
}

/// Ordinary least squares of `values` on `x = 1..N`.
pub fn ols_slope(seq: &MembershipSequence) -> Result<RegressionIndex> {
    let y = &seq.values;
    let n = y.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let x_mean = (n as f64 + 1.0) / 2.0;
    // sum (x - x_mean)^2 = n (n^2 - 1) / 12
    let sxx = (n as u128 * (n as u128 * n as u128 - 1)) as f64 / 12.0;
    // Pair x_i with x_{n+1-i}: their deviations are opposite, so
    // sum (x - x_mean) y = sum_{i <= n/2} (x_i - x_mean) (y_i - y_{n+1-i}).
    let sxy: f64 = (0..n / 2)
        .map(|i| ((i + 1) as f64 - x_mean) * (y[i] - y[n - 1 - i]))
        .sum();
    let slope = sxy / sxx;
    let y_mean = y.iter().sum::<f64>() / n as f64;
    Ok(RegressionIndex {
        label: seq.label,
        slope,
        intercept: y_mean - slope * x_mean,
        n,
    })
}

/// Membership-slope index of one sub-bin's windows for `label`.
pub fn regression_index(windows: &[WindowConcepts], label: RankLabel) -> Result<RegressionIndex> {
    ols_slope(&concat_memberships(windows, label)?)
}

/// Grid of `slope * scale` per sub-bin. `cells[t][w]` is `None` for skipped
/// sub-bins.
pub fn regression_table(
    title: impl Into<String>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    cells: &[Vec<Option<RegressionIndex>>],
    scale: f64,
) -> Result<HealthTable> {
    let scaled = cells
        .iter()
        .map(|row| row.iter().map(|c| c.map(|r| r.slope * scale)).collect())
        .collect();
    HealthTable::new(title, row_labels, col_labels, scaled)
}
