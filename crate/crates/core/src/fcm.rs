//! Fuzzy c-means clustering.
//!
//! Alternates the centroid update (membership-weighted means with weights
//! `mu^m`) and the membership update (inverse relative distances raised to
//! `2 / (m - 1)`) until the largest change in any membership falls below
//! `eps`, or `max_iter` update pairs have run. Distances are Euclidean.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FUZZIFIER: f64 = 2.0;
pub const DEFAULT_EPS: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcmParams {
    pub clusters: usize,
    /// Fuzzification coefficient `m > 1`.
    pub fuzzifier: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for FcmParams {
    fn default() -> Self {
        FcmParams {
            clusters: 3,
            fuzzifier: DEFAULT_FUZZIFIER,
            eps: DEFAULT_EPS,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

/// Row-stochastic membership matrix, rows = points, columns = clusters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl MembershipMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch("ragged membership rows".into()));
        }
        Ok(MembershipMatrix {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |i| self.get(i, j))
    }

    /// New matrix whose column `k` is column `order[k]` of `self`.
    pub fn permute_columns(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.cols);
        let data = (0..self.rows)
            .flat_map(|i| order.iter().map(move |&j| self.get(i, j)))
            .collect();
        MembershipMatrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FcmResult {
    pub centroids: Vec<Vec<f64>>,
    pub memberships: MembershipMatrix,
    /// Objective after each update pair.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn check_finite<P: AsRef<[f64]>>(points: &[P]) -> Result<()> {
    if points
        .iter()
        .all(|p| p.as_ref().iter().all(|v| v.is_finite()))
    {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Membership of one point to each centroid. A point that coincides with one
/// or more centroids belongs to them crisply (shared equally if several).
pub fn fcm_membership(point: &[f64], centroids: &[Vec<f64>], fuzzifier: f64) -> Result<Vec<f64>> {
    if centroids.is_empty() {
        return Err(Error::InvalidParameter("no centroids".into()));
    }
    if !(fuzzifier > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fuzzifier {fuzzifier} must exceed 1"
        )));
    }
    if !point.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite);
    }
    check_finite(centroids)?;
    Ok(membership_unchecked(point, centroids, fuzzifier))
}

const COINCIDENCE_REL2: f64 = (16.0 * f64::EPSILON) * (16.0 * f64::EPSILON);

fn membership_unchecked(point: &[f64], centroids: &[Vec<f64>], fuzzifier: f64) -> Vec<f64> {
    // Distances within a few ulps of the coordinates count as coincidence;
    // a centroid averaged from identical points may be off by rounding.
    let p2: f64 = point.iter().map(|x| x * x).sum();
    let d2: Vec<f64> = centroids
        .iter()
        .map(|c| {
            let d = sq_dist(point, c);
            let c2: f64 = c.iter().map(|x| x * x).sum();
            if d <= COINCIDENCE_REL2 * (p2 + c2) {
                0.0
            } else {
                d
            }
        })
        .collect();
    let zeros = d2.iter().filter(|&&d| d == 0.0).count();
    if zeros > 0 {
        let share = 1.0 / zeros as f64;
        return d2
            .iter()
            .map(|&d| if d == 0.0 { share } else { 0.0 })
            .collect();
    }
    // (d_min / d_k)^(2/(m-1)) stays in (0, 1] so the normalisation cannot overflow.
    let exponent = 1.0 / (fuzzifier - 1.0);
    let d_min = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = d2.iter().map(|&d| (d_min / d).powf(exponent)).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// `J_m = sum_i sum_j mu_ij^m * ||z_i - v_j||^2`.
pub fn objective<P: AsRef<[f64]>>(
    points: &[P],
    centroids: &[Vec<f64>],
    memberships: &MembershipMatrix,
    fuzzifier: f64,
) -> Result<f64> {
    if memberships.rows() != points.len() || memberships.cols() != centroids.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} points x {} centroids vs {}x{} memberships",
            points.len(),
            centroids.len(),
            memberships.rows(),
            memberships.cols()
        )));
    }
    Ok(objective_unchecked(
        points,
        centroids,
        memberships,
        fuzzifier,
    ))
}

fn objective_unchecked<P: AsRef<[f64]>>(
    points: &[P],
    centroids: &[Vec<f64>],
    u: &MembershipMatrix,
    m: f64,
) -> f64 {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            centroids
                .iter()
                .enumerate()
                .map(|(j, c)| u.get(i, j).powf(m) * sq_dist(p.as_ref(), c))
                .sum::<f64>()
        })
        .sum()
}

fn update_centroids<P: AsRef<[f64]>>(
    points: &[P],
    u: &MembershipMatrix,
    m: f64,
    previous: &[Vec<f64>],
) -> Vec<Vec<f64>> {
    let dim = points[0].as_ref().len();
    (0..u.cols())
        .map(|j| {
            let mut num = vec![0.0; dim];
            let mut den = 0.0;
            for (i, p) in points.iter().enumerate() {
                let w = u.get(i, j).powf(m);
                den += w;
                for (acc, x) in num.iter_mut().zip(p.as_ref()) {
                    *acc += w * x;
                }
            }
            if den > 0.0 {
                num.into_iter().map(|x| x / den).collect()
            } else {
                // cluster lost all weight
                previous[j].clone()
            }
        })
        .collect()
}

fn update_memberships<P: AsRef<[f64]>>(
    points: &[P],
    centroids: &[Vec<f64>],
    m: f64,
) -> MembershipMatrix {
    let cols = centroids.len();
    let data = points
        .iter()
        .flat_map(|p| membership_unchecked(p.as_ref(), centroids, m))
        .collect();
    MembershipMatrix {
        rows: points.len(),
        cols,
        data,
    }
}

fn mean_point<P: AsRef<[f64]>>(points: &[P]) -> Vec<f64> {
    let dim = points[0].as_ref().len();
    let mut acc = vec![0.0; dim];
    for p in points {
        for (a, x) in acc.iter_mut().zip(p.as_ref()) {
            *a += x;
        }
    }
    acc.into_iter().map(|a| a / points.len() as f64).collect()
}

/// One centroid update followed by one membership update.
pub fn fcm_step<P: AsRef<[f64]>>(
    points: &[P],
    memberships: &MembershipMatrix,
    fuzzifier: f64,
    previous: &[Vec<f64>],
) -> (Vec<Vec<f64>>, MembershipMatrix) {
    let centroids = update_centroids(points, memberships, fuzzifier, previous);
    let u = update_memberships(points, &centroids, fuzzifier);
    (centroids, u)
}

/// Random row-stochastic initial memberships.
fn initial_memberships(n: usize, c: usize, seed: u64) -> MembershipMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(n * c);
    for _ in 0..n {
        let row: Vec<f64> = (0..c).map(|_| rng.random::<f64>() + f64::EPSILON).collect();
        let total: f64 = row.iter().sum();
        data.extend(row.into_iter().map(|x| x / total));
    }
    MembershipMatrix {
        rows: n,
        cols: c,
        data,
    }
}

pub fn fcm_fit<P: AsRef<[f64]>>(points: &[P], params: &FcmParams) -> Result<FcmResult> {
    let FcmParams {
        clusters,
        fuzzifier,
        eps,
        max_iter,
        seed,
    } = *params;
    if clusters == 0 {
        return Err(Error::InvalidParameter("need at least one cluster".into()));
    }
    if points.len() < clusters {
        return Err(Error::InsufficientData {
            needed: clusters,
            got: points.len(),
        });
    }
    if !(fuzzifier > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "fuzzifier {fuzzifier} must exceed 1"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps {eps} must be positive"
        )));
    }
    let dim = points[0].as_ref().len();
    if dim == 0 || points.iter().any(|p| p.as_ref().len() != dim) {
        return Err(Error::ShapeMismatch(
            "points must share a non-zero dimension".into(),
        ));
    }
    check_finite(points)?;

    let mut u = initial_memberships(points.len(), clusters, seed);
    let mut centroids = vec![mean_point(points); clusters];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let (v, next) = fcm_step(points, &u, fuzzifier, &centroids);
        history.push(objective_unchecked(points, &v, &next, fuzzifier));
        let change = next.max_abs_diff(&u);
        centroids = v;
        u = next;
        if change < eps {
            converged = true;
            break;
        }
    }
    if centroids.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(
            "fuzzy c-means produced non-finite centroids".into(),
        ));
    }
    Ok(FcmResult {
        centroids,
        memberships: u,
        objective_history: history,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn membership_examples() {
        let c = vec![vec![0.0, 0.0], vec![10.0, 0.0]];
        assert_eq!(
            fcm_membership(&[0.0, 0.0], &c, 2.0).unwrap(),
            vec![1.0, 0.0]
        );
        assert_eq!(
            fcm_membership(&[5.0, 0.0], &c, 2.0).unwrap(),
            vec![0.5, 0.5]
        );
        // (2/8)^2 = 1/16 weighting -> 16/17, 1/17
        let mu = fcm_membership(&[2.0, 0.0], &c, 2.0).unwrap();
        assert_abs_diff_eq!(mu[0], 16.0 / 17.0, epsilon = 1e-15);
        assert_abs_diff_eq!(mu[1], 1.0 / 17.0, epsilon = 1e-15);
    }

    #[test]
    fn membership_errors() {
        let c = vec![vec![0.0]];
        assert!(matches!(
            fcm_membership(&[f64::NAN], &c, 2.0),
            Err(Error::NonFinite)
        ));
        assert!(fcm_membership(&[1.0], &[], 2.0).is_err());
        assert!(fcm_membership(&[1.0], &c, 1.0).is_err());
    }

    #[test]
    fn objective_examples() {
        let pts = vec![vec![0.0, 0.0], vec![10.0, 0.0]];
        let crisp = MembershipMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(objective(&pts, &pts, &crisp, 2.0).unwrap(), 0.0);

        let one = MembershipMatrix::from_rows(vec![vec![1.0]]).unwrap();
        assert_eq!(
            objective(&[vec![2.0, 0.0]], &[vec![0.0, 0.0]], &one, 2.0).unwrap(),
            4.0
        );
        assert!(matches!(
            objective(&pts, &pts[..1], &crisp, 2.0),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn objective_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Vec<f64>> = (0..13)
            .map(|_| vec![rng.random(), rng.random(), rng.random()])
            .collect();
        let cents: Vec<Vec<f64>> = (0..4)
            .map(|_| vec![rng.random(), rng.random(), rng.random()])
            .collect();
        let u = initial_memberships(13, 4, 3);
        let m = 2.3;
        let mut oracle = 0.0;
        for i in 0..13 {
            for j in 0..4 {
                let mut d = 0.0;
                for k in 0..3 {
                    d += (pts[i][k] - cents[j][k]).powi(2);
                }
                oracle += u.row(i)[j].powf(m) * d;
            }
        }
        assert_abs_diff_eq!(
            objective(&pts, &cents, &u, m).unwrap(),
            oracle,
            epsilon = 1e-12
        );
    }

    #[test]
    fn separated_masses() {
        let mut pts = vec![vec![0.0, 0.0]; 5];
        pts.extend(vec![vec![10.0, 0.0]; 5]);
        let r = fcm_fit(
            &pts,
            &FcmParams {
                clusters: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(r.converged);
        let mut xs: Vec<f64> = r.centroids.iter().map(|c| c[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(xs[0], 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(xs[1], 10.0, epsilon = 1e-6);
        for i in 0..10 {
            let best = r.memberships.row(i).iter().copied().fold(0.0, f64::max);
            assert!(best >= 0.99);
        }
        // the two masses are a fixed point of both updates
        let u = update_memberships(&pts, &r.centroids, 2.0);
        let v = update_centroids(&pts, &u, 2.0, &r.centroids);
        for (a, b) in v.iter().zip(&r.centroids) {
            assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-9);
        }
    }

    #[test]
    fn identical_points_single_cluster() {
        let pts = vec![vec![3.0, -1.0]; 7];
        let r = fcm_fit(
            &pts,
            &FcmParams {
                clusters: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.centroids, vec![vec![3.0, -1.0]]);
        let r = fcm_fit(
            &pts,
            &FcmParams {
                clusters: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.centroids[0], r.centroids[1]);
    }

    #[test]
    fn fit_errors() {
        let pts = vec![vec![0.0], vec![1.0]];
        let p = FcmParams {
            clusters: 3,
            ..Default::default()
        };
        assert!(matches!(
            fcm_fit(&pts, &p),
            Err(Error::InsufficientData { .. })
        ));
        let p = FcmParams {
            clusters: 2,
            fuzzifier: 1.0,
            ..Default::default()
        };
        assert!(fcm_fit(&pts, &p).is_err());
        let p = FcmParams {
            clusters: 2,
            eps: 0.0,
            ..Default::default()
        };
        assert!(fcm_fit(&pts, &p).is_err());
        let bad = vec![vec![0.0], vec![f64::INFINITY]];
        let p = FcmParams {
            clusters: 2,
            ..Default::default()
        };
        assert!(matches!(fcm_fit(&bad, &p), Err(Error::NonFinite)));
    }

    #[test]
    fn larger_fuzzifier_flattens_memberships() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|i| {
                let base = if i % 2 == 0 { 0.0 } else { 5.0 };
                [base + rng.random::<f64>(), rng.random::<f64>()]
            })
            .collect();
        let max_mu = |m: f64| {
            let r = fcm_fit(
                &pts,
                &FcmParams {
                    clusters: 2,
                    fuzzifier: m,
                    ..Default::default()
                },
            )
            .unwrap();
            (0..pts.len())
                .flat_map(|i| r.memberships.row(i).to_vec())
                .fold(0.0, f64::max)
        };
        assert!(max_mu(10.0) < max_mu(2.0));
    }

    #[test]
    fn seed_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<[f64; 2]> = (0..30).map(|_| [rng.random(), rng.random()]).collect();
        let p = FcmParams {
            clusters: 3,
            seed: 99,
            ..Default::default()
        };
        assert_eq!(fcm_fit(&pts, &p).unwrap(), fcm_fit(&pts, &p).unwrap());
    }

    #[test]
    fn permute_columns_keeps_row_sums() {
        let u = initial_memberships(5, 3, 1);
        let p = u.permute_columns(&[2, 0, 1]);
        for i in 0..5 {
            assert_abs_diff_eq!(p.row(i).iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert_eq!(p.get(i, 0), u.get(i, 2));
        }
    }
}
