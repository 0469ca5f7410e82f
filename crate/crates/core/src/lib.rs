//! Health indexes for wind turbines from SCADA time series.
//!
//! Records are cleaned, split into wind-speed x temperature sub-bins, and
//! each sub-bin's power series is cut into time windows. Fuzzy c-means on
//! (power, change of power) gives ranked concepts per window. Two indexes
//! summarise how the concepts move over time: the slope of concept
//! memberships, and the Distance Index between early and late centroids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binning;
pub mod cli;
pub mod concepts;
pub mod distance;
pub mod error;
pub mod fcm;
pub mod ingest;
pub mod pipeline;
pub mod plots;
pub mod preprocess;
pub mod regression;
pub mod report;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
