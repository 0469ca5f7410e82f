//! Fuzzy c-means on three blobs: centroids, memberships and the objective trace.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use windhealth::fcm::{fcm_fit, FcmParams};

fn main() -> windhealth::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let jitter = Normal::new(0.0, 0.4).unwrap();
    let centres = [[0.0, 0.0], [5.0, 1.0], [2.0, 6.0]];
    let points: Vec<[f64; 2]> = (0..150)
        .map(|i| {
            let c = centres[i % 3];
            [
                c[0] + jitter.sample(&mut rng),
                c[1] + jitter.sample(&mut rng),
            ]
        })
        .collect();

    for m in [1.5, 2.0, 4.0] {
        let fit = fcm_fit(
            &points,
            &FcmParams {
                clusters: 3,
                fuzzifier: m,
                ..Default::default()
            },
        )?;
        let mean_max: f64 = (0..points.len())
            .map(|i| fit.memberships.row(i).iter().copied().fold(0.0, f64::max))
            .sum::<f64>()
            / points.len() as f64;
        println!(
            "m = {m}: {} iterations, converged {}",
            fit.iterations, fit.converged
        );
        for c in &fit.centroids {
            println!("  centroid ({:.3}, {:.3})", c[0], c[1]);
        }
        println!("  mean strongest membership {mean_max:.3}");
        println!(
            "  objective {:.2} -> {:.2}",
            fit.objective_history[0],
            fit.objective_history.last().unwrap()
        );
    }
    Ok(())
}
