//! Concepts of one sub-bin, window by window, and the scatter file.

use windhealth::binning::{assign_subbins, fit_temperature_clusters, make_wind_bins};
use windhealth::concepts::{extract_concepts, write_concept_scatter, WindowMode};
use windhealth::fcm::FcmParams;
use windhealth::preprocess::clean;
use windhealth::synth::{generate_scada, SynthConfig};

fn main() -> windhealth::Result<()> {
    let set = generate_scada(&SynthConfig {
        samples: 100_000,
        noise: 0.02,
        degradation: 5e-7,
        ..Default::default()
    })?;
    let cleaned = clean(set.turbine("S01").unwrap(), 4.5, 9.0)?;
    let temps: Vec<f64> = cleaned.records.iter().map(|r| r.temperature).collect();
    let clusters = fit_temperature_clusters(&temps, 4, 0)?;
    let grid = assign_subbins(&cleaned.records, &make_wind_bins(5.0, 7.5, 0.5)?, &clusters);
    let sb = grid.get(1, 3);
    let power: Vec<f64> = sb.samples.iter().map(|r| r.power).collect();
    println!(
        "sub-bin wind {} temperature {:.1}: {} samples",
        sb.wind_bin.label(),
        sb.temp_cluster.centroid,
        power.len()
    );

    let windows = extract_concepts(
        &power,
        WindowMode::Count(10),
        &FcmParams::default(),
        sb.id(),
    )?;
    for w in &windows {
        let cs: Vec<String> = w
            .concepts
            .iter()
            .map(|c| {
                format!(
                    "{} ({:.0}, {:.0})",
                    c.label.as_str(),
                    c.centroid.z,
                    c.centroid.dz
                )
            })
            .collect();
        println!("window {:>2}: {}", w.window_index, cs.join("  "));
    }

    let path = std::env::temp_dir().join("windhealth_concepts.csv");
    write_concept_scatter(
        &windows,
        std::fs::File::create(&path).map_err(|e| windhealth::Error::io(&path, e))?,
    )?;
    println!("scatter data written to {}", path.display());
    Ok(())
}
