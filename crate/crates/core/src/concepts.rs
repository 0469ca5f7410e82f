//! Windowed concept extraction.
//!
//! A sub-bin's power series is split into time-ordered windows. Each window is
//! mapped to (value, increment) pairs and clustered with fuzzy c-means; the
//! resulting centroids are the window's concepts, ranked by power value from
//! high to low.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fcm::{fcm_fit, FcmParams, MembershipMatrix};

/// Fewest delta points a window may hold before clustering.
pub const MIN_DELTA_POINTS: usize = 8;
pub const DEFAULT_WINDOWS: usize = 20;

/// Power value and its increment over the previous sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaPoint {
    pub z: f64,
    pub dz: f64,
}

impl DeltaPoint {
    pub fn as_array(&self) -> [f64; 2] {
        [self.z, self.dz]
    }
}

impl From<[f64; 2]> for DeltaPoint {
    fn from(v: [f64; 2]) -> Self {
        DeltaPoint { z: v[0], dz: v[1] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankLabel {
    High,
    Moderate,
    Low,
}

impl RankLabel {
    /// Label of 1-based rank `rank` among `clusters` concepts.
    pub fn for_rank(rank: usize, clusters: usize) -> Self {
        if rank == 1 {
            RankLabel::High
        } else if rank == clusters {
            RankLabel::Low
        } else {
            RankLabel::Moderate
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RankLabel::High => "high",
            RankLabel::Moderate => "moderate",
            RankLabel::Low => "low",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "high" => Some(RankLabel::High),
            "moderate" => Some(RankLabel::Moderate),
            "low" => Some(RankLabel::Low),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Concept {
    /// 1 = highest power value.
    pub rank: usize,
    pub label: RankLabel,
    pub centroid: DeltaPoint,
    /// 1-based window number.
    pub window_index: usize,
}

/// Concepts of one window, sorted by decreasing power value. Column `j` of
/// `memberships` is the membership to `concepts[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConcepts {
    pub window_index: usize,
    pub concepts: Vec<Concept>,
    pub memberships: MembershipMatrix,
    pub converged: bool,
}

/// How a sub-bin is cut into windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowMode {
    /// A fixed number of windows.
    Count(usize),
    /// Windows of at least this many samples; the count is `n / length`.
    Length(usize),
}

impl Default for WindowMode {
    fn default() -> Self {
        WindowMode::Count(DEFAULT_WINDOWS)
    }
}

impl WindowMode {
    pub fn window_count(&self, n: usize) -> Result<usize> {
        match *self {
            WindowMode::Count(0) | WindowMode::Length(0) => Err(Error::InvalidParameter(
                "window count/length must be positive".into(),
            )),
            WindowMode::Count(r) => Ok(r),
            WindowMode::Length(len) => Ok(n / len),
        }
    }
}

/// Splits `samples` into `r` contiguous windows whose sizes differ by at most
/// one, the larger ones first. Every window must hold at least `min_len`
/// samples.
pub fn split_windows<T>(samples: &[T], r: usize, min_len: usize) -> Result<Vec<&[T]>> {
    let min_len = min_len.max(2);
    if r == 0 {
        return Err(Error::InvalidParameter("need at least one window".into()));
    }
    let needed = r * min_len;
    if samples.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: samples.len(),
        });
    }
    let base = samples.len() / r;
    let extra = samples.len() % r;
    let mut out = Vec::with_capacity(r);
    let mut start = 0;
    for w in 0..r {
        let len = base + usize::from(w < extra);
        out.push(&samples[start..start + len]);
        start += len;
    }
    Ok(out)
}

/// `(z_i, z_i - z_{i-1})` for `i = 2..P`.
pub fn delta_transform(values: &[f64]) -> Result<Vec<DeltaPoint>> {
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    Ok(values
        .windows(2)
        .map(|w| DeltaPoint {
            z: w[1],
            dz: w[1] - w[0],
        })
        .collect())
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic seed for one (sub-bin, stream) pair.
pub fn derive_seed(base: u64, subbin: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ subbin) ^ stream)
}

/// Column order that sorts centroids by decreasing z, then decreasing dz,
/// then original index.
pub fn rank_order(centroids: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..centroids.len()).collect();
    order.sort_by(|&a, &b| {
        centroids[b][0]
            .total_cmp(&centroids[a][0])
            .then(centroids[b][1].total_cmp(&centroids[a][1]))
            .then(a.cmp(&b))
    });
    order
}

/// Clusters one window's delta points and ranks the concepts.
pub fn window_concepts(
    window_index: usize,
    points: &[DeltaPoint],
    params: &FcmParams,
) -> Result<WindowConcepts> {
    let data: Vec<[f64; 2]> = points.iter().map(DeltaPoint::as_array).collect();
    let fit = fcm_fit(&data, params)?;
    let order = rank_order(&fit.centroids);
    let concepts = order
        .iter()
        .enumerate()
        .map(|(pos, &j)| Concept {
            rank: pos + 1,
            label: RankLabel::for_rank(pos + 1, params.clusters),
            centroid: DeltaPoint {
                z: fit.centroids[j][0],
                dz: fit.centroids[j][1],
            },
            window_index,
        })
        .collect();
    Ok(WindowConcepts {
        window_index,
        concepts,
        memberships: fit.memberships.permute_columns(&order),
        converged: fit.converged,
    })
}

/// Windows the power series of one sub-bin and extracts `params.clusters`
/// concepts per window. Window `k` is clustered with a seed derived from
/// `(params.seed, subbin_id, k)`.
pub fn extract_concepts(
    power: &[f64],
    mode: WindowMode,
    params: &FcmParams,
    subbin_id: u64,
) -> Result<Vec<WindowConcepts>> {
    let r = mode.window_count(power.len())?;
    let min_len = (MIN_DELTA_POINTS.max(params.clusters) + 1).max(2);
    let windows = split_windows(power, r, min_len)?;
    windows
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let pts = delta_transform(w)?;
            let p = FcmParams {
                seed: derive_seed(params.seed, subbin_id, k as u64),
                ..*params
            };
            window_concepts(k + 1, &pts, &p)
        })
        .collect()
}

/// Writes `window_index,rank,label,z,dz` rows.
pub fn write_concept_scatter<W: Write>(windows: &[WindowConcepts], writer: W) -> Result<()> {
    if windows.is_empty() {
        return Err(Error::InvalidParameter("no concepts to write".into()));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["window_index", "rank", "label", "z", "dz"])?;
    for c in windows.iter().flat_map(|wc| &wc.concepts) {
        w.write_record([
            c.window_index.to_string(),
            c.rank.to_string(),
            c.label.as_str().to_string(),
            c.centroid.z.to_string(),
            c.centroid.dz.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<concept scatter>", e))?;
    Ok(())
}

pub fn read_concept_scatter<R: Read>(reader: R) -> Result<Vec<Concept>> {
    #[derive(Deserialize)]
    struct Row {
        window_index: usize,
        rank: usize,
        label: String,
        z: f64,
        dz: f64,
    }
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize::<Row>()
        .map(|row| {
            let row = row?;
            Ok(Concept {
                rank: row.rank,
                label: RankLabel::parse(&row.label).ok_or_else(|| {
                    Error::InvalidParameter(format!("unknown label {}", row.label))
                })?,
                centroid: DeltaPoint {
                    z: row.z,
                    dz: row.dz,
                },
                window_index: row.window_index,
            })
        })
        .collect()
}
