//! Operating-condition binning: fixed-width wind bins crossed with
//! temperature intervals derived from k-means centroids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::SampleRecord;

pub const DEFAULT_WIND_BIN_START: f64 = 5.0;
pub const DEFAULT_WIND_BIN_END: f64 = 7.5;
pub const DEFAULT_WIND_BIN_WIDTH: f64 = 0.5;
pub const DEFAULT_TEMP_CLUSTERS: usize = 4;

/// Half-open wind interval `[lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindBin {
    pub lower: f64,
    pub upper: f64,
    /// Trailing bin narrower than the configured width.
    #[serde(default)]
    pub partial: bool,
}

impl WindBin {
    pub fn contains(&self, wind: f64) -> bool {
        wind >= self.lower && wind < self.upper
    }

    pub fn label(&self) -> String {
        format!("[{}, {})", self.lower, self.upper)
    }
}

pub fn make_wind_bins(start: f64, end: f64, width: f64) -> Result<Vec<WindBin>> {
    if !(start < end) || !(width > 0.0) || !start.is_finite() || !end.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "wind bins need start < end and width > 0 (got {start}, {end}, {width})"
        )));
    }
    let span = (end - start) / width;
    let full = (span + 1e-9).floor() as usize;
    let mut bins: Vec<WindBin> = (0..full)
        .map(|i| WindBin {
            lower: start + i as f64 * width,
            upper: start + (i + 1) as f64 * width,
            partial: false,
        })
        .collect();
    if let Some(last) = bins.last_mut() {
        // absorb accumulated rounding so the bins tile exactly up to `end`
        if (last.upper - end).abs() < 1e-9 * width {
            last.upper = end;
        }
    }
    let covered = bins.last().map_or(start, |b| b.upper);
    if end - covered > 1e-9 * width {
        bins.push(WindBin {
            lower: covered,
            upper: end,
            partial: true,
        });
    }
    Ok(bins)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    /// Sorted lexicographically; cluster `j` of `assignment` is `centroids[j]`.
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Vec<usize>,
    pub objective_history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid, ties going to the lowest index.
pub fn nearest<P: AsRef<[f64]>>(point: &P, centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point.as_ref(), c);
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

fn kmeans_objective<P: AsRef<[f64]>>(
    points: &[P],
    centroids: &[Vec<f64>],
    assignment: &[usize],
) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &a)| sq_dist(p.as_ref(), &centroids[a]))
        .sum()
}

/// k-means++ seeding: each new centre is drawn with probability proportional
/// to its squared distance from the nearest existing centre.
fn seed_centroids<P: AsRef<[f64]>>(points: &[P], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].as_ref().to_vec()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| sq_dist(p.as_ref(), &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = d2.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        let c = points[idx].as_ref().to_vec();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p.as_ref(), &c));
        }
        centroids.push(c);
    }
    centroids
}

pub fn kmeans<P: AsRef<[f64]>>(
    points: &[P],
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    if points.len() < k {
        return Err(Error::InsufficientData {
            needed: k,
            got: points.len(),
        });
    }
    let dim = points[0].as_ref().len();
    if points.iter().any(|p| p.as_ref().len() != dim) {
        return Err(Error::ShapeMismatch("points of different dimension".into()));
    }
    if points
        .iter()
        .any(|p| p.as_ref().iter().any(|v| !v.is_finite()))
    {
        return Err(Error::NonFinite);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let mut history = vec![kmeans_objective(points, &centroids, &assignment)];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p.as_ref()) {
                *s += x;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| s.into_iter().map(|x| x / n.max(1) as f64).collect())
            .collect();
        for j in 0..k {
            if counts[j] == 0 {
                // re-seed with the point farthest from its own centroid
                let far = points
                    .iter()
                    .zip(&assignment)
                    .enumerate()
                    .max_by(|(_, (p, &a)), (_, (q, &b))| {
                        sq_dist(p.as_ref(), &next[a]).total_cmp(&sq_dist(q.as_ref(), &next[b]))
                    })
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                next[j] = points[far].as_ref().to_vec();
            }
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        let next_assignment: Vec<usize> = points.iter().map(|p| nearest(p, &next)).collect();
        history.push(kmeans_objective(points, &next, &next_assignment));
        let stable = next_assignment == assignment;
        centroids = next;
        assignment = next_assignment;
        if stable || shift < tol {
            break;
        }
    }

    // canonical order
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        centroids[a]
            .iter()
            .zip(&centroids[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut rank = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let sorted: Vec<Vec<f64>> = order.iter().map(|&j| centroids[j].clone()).collect();
    let assignment = assignment.into_iter().map(|a| rank[a]).collect();
    Ok(KMeansResult {
        centroids: sorted,
        assignment,
        objective_history: history,
        iterations,
    })
}

/// Temperature interval `(lower, upper]` around one k-means centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TempCluster {
    pub centroid: f64,
    pub lower: f64,
    pub upper: f64,
}

impl TempCluster {
    pub fn contains(&self, t: f64) -> bool {
        t > self.lower && t <= self.upper
    }
}

/// Interval bounds at midpoints between consecutive sorted centroids, so a
/// temperature on a boundary belongs to the lower centroid.
pub fn temperature_boundaries(centroids: &[f64]) -> Result<Vec<TempCluster>> {
    if centroids.is_empty() {
        return Err(Error::InvalidParameter("no temperature centroids".into()));
    }
    if centroids.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter(
            "temperature centroids must be strictly ascending".into(),
        ));
    }
    let n = centroids.len();
    Ok((0..n)
        .map(|i| TempCluster {
            centroid: centroids[i],
            lower: if i == 0 {
                f64::NEG_INFINITY
            } else {
                (centroids[i - 1] + centroids[i]) / 2.0
            },
            upper: if i + 1 == n {
                f64::INFINITY
            } else {
                (centroids[i] + centroids[i + 1]) / 2.0
            },
        })
        .collect())
}

/// Index of the interval containing `t`.
pub fn temperature_index(clusters: &[TempCluster], t: f64) -> usize {
    clusters
        .partition_point(|c| c.upper < t)
        .min(clusters.len() - 1)
}

/// Fits temperature clusters with 1-D k-means.
pub fn fit_temperature_clusters(
    temperatures: &[f64],
    k: usize,
    seed: u64,
) -> Result<Vec<TempCluster>> {
    let pts: Vec<[f64; 1]> = temperatures.iter().map(|&t| [t]).collect();
    let km = kmeans(&pts, k, seed, 300, 0.0)?;
    let mut cents: Vec<f64> = km.centroids.iter().map(|c| c[0]).collect();
    cents.dedup();
    if cents.len() < k {
        return Err(Error::InsufficientData {
            needed: k,
            got: cents.len(),
        });
    }
    temperature_boundaries(&cents)
}

/// Samples of one wind-bin x temperature-cluster cell, in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBin {
    pub wind_index: usize,
    pub temp_index: usize,
    pub wind_bin: WindBin,
    pub temp_cluster: TempCluster,
    pub samples: Vec<SampleRecord>,
}

impl SubBin {
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Stable identifier used to derive per-sub-bin seeds.
    pub fn id(&self) -> u64 {
        ((self.temp_index as u64) << 32) | self.wind_index as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubBinGrid {
    /// Temperature-major: `subbins[t * n_wind + w]`.
    pub subbins: Vec<SubBin>,
    pub n_wind: usize,
    pub n_temp: usize,
    /// Records whose wind falls outside every bin.
    pub discarded: usize,
}

impl SubBinGrid {
    pub fn get(&self, temp_index: usize, wind_index: usize) -> &SubBin {
        &self.subbins[temp_index * self.n_wind + wind_index]
    }
}

pub fn assign_subbins(
    records: &[SampleRecord],
    wind_bins: &[WindBin],
    temp_clusters: &[TempCluster],
) -> SubBinGrid {
    let n_wind = wind_bins.len();
    let mut subbins: Vec<SubBin> = temp_clusters
        .iter()
        .enumerate()
        .flat_map(|(t, tc)| {
            wind_bins.iter().enumerate().map(move |(w, wb)| SubBin {
                wind_index: w,
                temp_index: t,
                wind_bin: *wb,
                temp_cluster: *tc,
                samples: Vec::new(),
            })
        })
        .collect();
    let mut discarded = 0;
    for r in records {
        match wind_bins.iter().position(|b| b.contains(r.wind_speed)) {
            Some(w) if !temp_clusters.is_empty() => {
                let t = temperature_index(temp_clusters, r.temperature);
                subbins[t * n_wind + w].samples.push(r.clone());
            }
            _ => discarded += 1,
        }
    }
    SubBinGrid {
        subbins,
        n_wind,
        n_temp: temp_clusters.len(),
        discarded,
    }
}
