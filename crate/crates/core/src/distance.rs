//! Distance Index: per concept rank, the R window centroids are split into a
//! low and a high group by a second two-cluster fuzzy c-means run; the index
//! sums the distances between the two group centroids over all ranks.
//!
//! Zero means the concepts did not move over time; larger values mean more
//! drift in power production under fixed operating conditions.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::concepts::{DeltaPoint, RankLabel, WindowConcepts};
use crate::error::{Error, Result};
use crate::fcm::{fcm_fit, FcmParams};
use crate::table::HealthTable;

/// Window centroids of one concept rank, in window order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankCentroidSeries {
    pub rank: usize,
    pub label: RankLabel,
    pub centroids: Vec<DeltaPoint>,
}

/// Splits per-window concepts into one series per rank.
pub fn rank_series(windows: &[WindowConcepts]) -> Result<Vec<RankCentroidSeries>> {
    let first = windows
        .first()
        .ok_or_else(|| Error::InvalidParameter("no windows".into()))?;
    let clusters = first.concepts.len();
    (0..clusters)
        .map(|j| {
            let centroids = windows
                .iter()
                .map(|w| {
                    w.concepts.get(j).map(|c| c.centroid).ok_or_else(|| {
                        Error::ShapeMismatch("windows differ in concept count".into())
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(RankCentroidSeries {
                rank: j + 1,
                label: first.concepts[j].label,
                centroids,
            })
        })
        .collect()
}

/// The two secondary centroids of one rank, `low.z <= high.z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentroidPair {
    pub rank: usize,
    pub label: RankLabel,
    pub low: DeltaPoint,
    pub high: DeltaPoint,
}

fn canonical_cmp(a: &DeltaPoint, b: &DeltaPoint) -> std::cmp::Ordering {
    a.z.total_cmp(&b.z).then(a.dz.total_cmp(&b.dz))
}

/// Two-cluster fuzzy c-means over one rank's window centroids.
///
/// The input is put in canonical order first, so any permutation of the
/// window centroids gives the same pair. `params.clusters` is ignored.
pub fn secondary_clustering(
    series: &RankCentroidSeries,
    params: &FcmParams,
) -> Result<CentroidPair> {
    if series.centroids.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: series.centroids.len(),
        });
    }
    let mut pts = series.centroids.clone();
    pts.sort_by(canonical_cmp);
    let data: Vec<[f64; 2]> = pts.iter().map(DeltaPoint::as_array).collect();
    let fit = fcm_fit(
        &data,
        &FcmParams {
            clusters: 2,
            ..*params
        },
    )?;
    let mut out: Vec<DeltaPoint> = fit
        .centroids
        .iter()
        .map(|c| DeltaPoint { z: c[0], dz: c[1] })
        .collect();
    out.sort_by(canonical_cmp);
    Ok(CentroidPair {
        rank: series.rank,
        label: series.label,
        low: out[0],
        high: out[1],
    })
}

/// Per-dimension bounds for min-max normalisation of concept coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBounds {
    pub power_min: f64,
    pub power_max: f64,
    pub dpower_min: f64,
    pub dpower_max: f64,
}

impl Default for NormBounds {
    /// Watt-hour bounds used for the EDP turbines.
    fn default() -> Self {
        NormBounds {
            power_min: 40_000.0,
            power_max: 100_000.0,
            dpower_min: -20_000.0,
            dpower_max: 20_000.0,
        }
    }
}

impl NormBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.power_max > self.power_min) || !(self.dpower_max > self.dpower_min) {
            return Err(Error::InvalidParameter(
                "normalisation bounds need max > min in each dimension".into(),
            ));
        }
        Ok(())
    }

    pub fn power_range(&self) -> f64 {
        self.power_max - self.power_min
    }
}

/// A normalised point and whether any coordinate fell outside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalized {
    pub point: DeltaPoint,
    pub outside: bool,
}

/// `(x - min) / (max - min)` per coordinate, without clamping.
pub fn normalize_coords(v: DeltaPoint, bounds: &NormBounds) -> Result<Normalized> {
    bounds.validate()?;
    let point = DeltaPoint {
        z: (v.z - bounds.power_min) / (bounds.power_max - bounds.power_min),
        dz: (v.dz - bounds.dpower_min) / (bounds.dpower_max - bounds.dpower_min),
    };
    let outside = !(0.0..=1.0).contains(&point.z) || !(0.0..=1.0).contains(&point.dz);
    Ok(Normalized { point, outside })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    #[default]
    Euclidean,
    Manhattan,
}

impl DistanceMetric {
    pub fn distance(self, a: DeltaPoint, b: DeltaPoint) -> f64 {
        let (dx, dy) = (a.z - b.z, a.dz - b.dz);
        match self {
            DistanceMetric::Euclidean => dx.hypot(dy),
            DistanceMetric::Manhattan => dx.abs() + dy.abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceIndex {
    pub value: f64,
    /// Distance per rank, rank 1 first.
    pub components: Vec<f64>,
}

/// Sum over ranks `1..=clusters` of the distance between each pair's low and
/// high centroid.
pub fn distance_index(
    pairs: &[CentroidPair],
    clusters: usize,
    metric: DistanceMetric,
) -> Result<DistanceIndex> {
    let components = (1..=clusters)
        .map(|rank| {
            let mut hits = pairs.iter().filter(|p| p.rank == rank);
            match (hits.next(), hits.next()) {
                (Some(p), None) => Ok(metric.distance(p.low, p.high)),
                (None, _) => Err(Error::InvalidParameter(format!(
                    "missing pair for rank {rank}"
                ))),
                (Some(_), Some(_)) => Err(Error::InvalidParameter(format!(
                    "duplicate pair for rank {rank}"
                ))),
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    if pairs.len() != clusters {
        return Err(Error::InvalidParameter(format!(
            "expected {clusters} pairs, got {}",
            pairs.len()
        )));
    }
    Ok(DistanceIndex {
        value: components.iter().sum(),
        components,
    })
}

/// Where the min-max normalisation is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiNormalization {
    /// Normalise concept coordinates, then cluster and measure distances.
    #[default]
    Coordinates,
    /// Cluster and measure in raw units, then divide the index by the power
    /// range of the bounds.
    Scalar,
}

/// Secondary pairs and Distance Index for one sub-bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubBinDistance {
    pub pairs: Vec<CentroidPair>,
    pub index: DistanceIndex,
    /// Concept coordinates that fell outside the normalisation bounds.
    pub outside_bounds: usize,
}

pub fn subbin_distance(
    windows: &[WindowConcepts],
    params: &FcmParams,
    bounds: &NormBounds,
    mode: DiNormalization,
    metric: DistanceMetric,
    seed_for_rank: impl Fn(usize) -> u64,
) -> Result<SubBinDistance> {
    bounds.validate()?;
    let mut series = rank_series(windows)?;
    let mut outside = 0;
    if mode == DiNormalization::Coordinates {
        for s in &mut series {
            for c in &mut s.centroids {
                let n = normalize_coords(*c, bounds)?;
                outside += usize::from(n.outside);
                *c = n.point;
            }
        }
    }
    let pairs = series
        .iter()
        .map(|s| {
            secondary_clustering(
                s,
                &FcmParams {
                    seed: seed_for_rank(s.rank),
                    ..*params
                },
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut index = distance_index(&pairs, series.len(), metric)?;
    if mode == DiNormalization::Scalar {
        let range = bounds.power_range();
        index.components.iter_mut().for_each(|c| *c /= range);
        index.value = index.components.iter().sum();
    }
    Ok(SubBinDistance {
        pairs,
        index,
        outside_bounds: outside,
    })
}

pub fn di_table(
    title: impl Into<String>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    cells: &[Vec<Option<f64>>],
) -> Result<HealthTable> {
    HealthTable::new(title, row_labels, col_labels, cells.to_vec())
}

/// Labels every cell centre of an `n x n` grid over `[0, 1]^2` with the kind
/// (`L` or `H`) and rank of the nearest secondary centroid. Ties go to `L`,
/// then to the lower rank. Rows: `x,y,label,rank`.
pub fn write_region_map<W: Write>(pairs: &[CentroidPair], n: usize, writer: W) -> Result<()> {
    if pairs.is_empty() || n == 0 {
        return Err(Error::InvalidParameter(
            "region map needs pairs and a positive grid size".into(),
        ));
    }
    let mut candidates: Vec<(&str, usize, DeltaPoint)> =
        pairs.iter().map(|p| ("L", p.rank, p.low)).collect();
    candidates.extend(pairs.iter().map(|p| ("H", p.rank, p.high)));
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["x", "y", "label", "rank"])?;
    for iy in 0..n {
        for ix in 0..n {
            let x = (ix as f64 + 0.5) / n as f64;
            let y = (iy as f64 + 0.5) / n as f64;
            let here = DeltaPoint { z: x, dz: y };
            let mut best = (f64::INFINITY, "L", 0);
            for &(label, rank, c) in &candidates {
                let d = DistanceMetric::Euclidean.distance(here, c);
                if d < best.0 {
                    best = (d, label, rank);
                }
            }
            w.write_record([
                x.to_string(),
                y.to_string(),
                best.1.to_string(),
                best.2.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<region map>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn series(points: Vec<(f64, f64)>) -> RankCentroidSeries {
        RankCentroidSeries {
            rank: 1,
            label: RankLabel::High,
            centroids: points
                .into_iter()
                .map(|(z, dz)| DeltaPoint { z, dz })
                .collect(),
        }
    }

    fn pair(rank: usize, low: (f64, f64), high: (f64, f64)) -> CentroidPair {
        CentroidPair {
            rank,
            label: RankLabel::for_rank(rank, 3),
            low: DeltaPoint {
                z: low.0,
                dz: low.1,
            },
            high: DeltaPoint {
                z: high.0,
                dz: high.1,
            },
        }
    }

    #[test]
    fn alternating_masses_split_exactly() {
        let s = series(
            (0..20)
                .map(|i| if i % 2 == 0 { (10.0, 0.0) } else { (20.0, 0.0) })
                .collect(),
        );
        let p = secondary_clustering(&s, &FcmParams::default()).unwrap();
        assert_abs_diff_eq!(p.low.z, 10.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p.high.z, 20.0, epsilon = 1e-6);
        assert_abs_diff_eq!(p.low.dz, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn identical_centroids_give_zero_distance() {
        let s = series(vec![(0.5, 0.5); 10]);
        let p = secondary_clustering(&s, &FcmParams::default()).unwrap();
        assert_eq!(p.low, p.high);
        assert!(secondary_clustering(&series(vec![(0.5, 0.5)]), &FcmParams::default()).is_err());
    }

    #[test]
    fn normalisation_examples() {
        let b = NormBounds::default();
        let at = |z: f64, dz: f64| normalize_coords(DeltaPoint { z, dz }, &b).unwrap();
        assert_eq!(at(40_000.0, 0.0).point.z, 0.0);
        assert_eq!(at(100_000.0, 0.0).point.z, 1.0);
        assert_eq!(at(70_000.0, 0.0).point.z, 0.5);
        assert_eq!(at(70_000.0, 0.0).point.dz, 0.5);
        assert!(!at(70_000.0, 0.0).outside);
        let out = at(20_000.0, 0.0);
        assert!(out.outside);
        assert!(out.point.z < 0.0);
        let bad = NormBounds {
            power_max: 40_000.0,
            ..b
        };
        assert!(normalize_coords(DeltaPoint { z: 1.0, dz: 1.0 }, &bad).is_err());
    }

    #[test]
    fn distance_index_examples() {
        let coincident: Vec<_> = (1..=3).map(|r| pair(r, (0.3, 0.4), (0.3, 0.4))).collect();
        assert_eq!(
            distance_index(&coincident, 3, DistanceMetric::Euclidean)
                .unwrap()
                .value,
            0.0
        );
        let unit: Vec<_> = (1..=3).map(|r| pair(r, (0.0, 0.0), (0.6, 0.8))).collect();
        let di = distance_index(&unit, 3, DistanceMetric::Euclidean).unwrap();
        assert_abs_diff_eq!(di.value, 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(di.value, di.components.iter().sum::<f64>(), epsilon = 0.0);
        let man = distance_index(&unit, 3, DistanceMetric::Manhattan).unwrap();
        assert_abs_diff_eq!(man.value, 4.2, epsilon = 1e-12);
        assert!(distance_index(&unit[..2], 3, DistanceMetric::Euclidean).is_err());
        let dup = vec![unit[0], unit[0], unit[2]];
        assert!(distance_index(&dup, 3, DistanceMetric::Euclidean).is_err());
    }

    #[test]
    fn di_table_single_cell() {
        let t = di_table(
            "di",
            vec!["15".into()],
            vec!["[5, 5.5)".into()],
            &[vec![Some(0.52)]],
        )
        .unwrap();
        assert_eq!(t.total, 0.52);
        assert_eq!(t.row_sums, vec![0.52]);
    }

    fn region_rows(pairs: &[CentroidPair], n: usize) -> Vec<(f64, f64, String)> {
        let mut buf = Vec::new();
        write_region_map(pairs, n, &mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        rdr.records()
            .map(|r| {
                let r = r.unwrap();
                (
                    r[0].parse().unwrap(),
                    r[1].parse().unwrap(),
                    r[2].to_string(),
                )
            })
            .collect()
    }

    #[test]
    fn region_map_bisector_and_ties() {
        let rows = region_rows(&[pair(1, (0.0, 0.0), (1.0, 1.0))], 100);
        assert_eq!(rows.len(), 10_000);
        for (x, y, label) in &rows {
            // cells on the bisector itself are float-rounding ties
            if (x + y - 1.0).abs() > 1e-9 {
                let expect = if x + y < 1.0 { "L" } else { "H" };
                assert_eq!(label, expect, "{x} {y}");
            }
        }
        let tie = region_rows(&[pair(1, (0.5, 0.5), (0.5, 0.5))], 7);
        assert!(tie.iter().all(|(_, _, l)| l == "L"));
        assert!(write_region_map(&[], 3, Vec::new()).is_err());
    }

    fn windows_from_series(high: &[DeltaPoint]) -> Vec<WindowConcepts> {
        use crate::concepts::Concept;
        use crate::fcm::MembershipMatrix;
        high.iter()
            .enumerate()
            .map(|(k, &h)| WindowConcepts {
                window_index: k + 1,
                concepts: (1..=3)
                    .map(|r| Concept {
                        rank: r,
                        label: RankLabel::for_rank(r, 3),
                        centroid: if r == 1 {
                            h
                        } else {
                            DeltaPoint {
                                z: 50_000.0 - 5_000.0 * r as f64,
                                dz: 0.0,
                            }
                        },
                        window_index: k + 1,
                    })
                    .collect(),
                memberships: MembershipMatrix::from_rows(vec![vec![1.0, 0.0, 0.0]]).unwrap(),
                converged: true,
            })
            .collect()
    }

    #[test]
    fn drift_increases_di() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let jitter: Vec<(f64, f64)> = (0..20)
            .map(|_| {
                (
                    rng.random_range(-300.0..300.0),
                    rng.random_range(-300.0..300.0),
                )
            })
            .collect();
        let di_for = |shift: f64| {
            let high: Vec<DeltaPoint> = jitter
                .iter()
                .enumerate()
                .map(|(k, &(a, b))| DeltaPoint {
                    z: 80_000.0 + a - if k >= 10 { shift } else { 0.0 },
                    dz: b,
                })
                .collect();
            let w = windows_from_series(&high);
            subbin_distance(
                &w,
                &FcmParams::default(),
                &NormBounds::default(),
                DiNormalization::Coordinates,
                DistanceMetric::Euclidean,
                |r| r as u64,
            )
            .unwrap()
            .index
            .value
        };
        let (d0, d1, d2) = (di_for(0.0), di_for(3_000.0), di_for(12_000.0));
        assert!(d0 <= d1 && d1 <= d2, "{d0} {d1} {d2}");
        // a 12,000 step is 0.2 of the normalised power range
        assert!((d2 - 0.2).abs() < 0.02, "{d2}");
    }

    #[test]
    fn scalar_mode_divides_by_power_range() {
        let high: Vec<DeltaPoint> = (0..10)
            .map(|k| DeltaPoint {
                z: if k < 5 { 80_000.0 } else { 74_000.0 },
                dz: 0.0,
            })
            .collect();
        let w = windows_from_series(&high);
        let s = subbin_distance(
            &w,
            &FcmParams::default(),
            &NormBounds::default(),
            DiNormalization::Scalar,
            DistanceMetric::Euclidean,
            |_| 1,
        )
        .unwrap();
        assert_abs_diff_eq!(s.index.value, 0.1, epsilon = 1e-6);
    }

    proptest! {
        #[test]
        fn permutation_invariant(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<(f64, f64)> = (0..12).map(|_| (rng.random(), rng.random())).collect();
            let mut shuffled = pts.clone();
            shuffled.shuffle(&mut rng);
            let p = FcmParams { seed, ..Default::default() };
            let a = secondary_clustering(&series(pts), &p).unwrap();
            let b = secondary_clustering(&series(shuffled), &p).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a.low.z <= a.high.z);
            let di = distance_index(&[a, CentroidPair { rank: 2, ..a }, CentroidPair { rank: 3, ..a }], 3, DistanceMetric::Euclidean).unwrap();
            prop_assert!(di.value >= 0.0);
            prop_assert!(di.components.iter().all(|c| *c >= 0.0));
        }
    }
}
