//! Wind cut, ratio filter, temperature clustering and the sub-bin grid.

use windhealth::binning::{assign_subbins, fit_temperature_clusters, make_wind_bins};
use windhealth::preprocess::{clean, DEFAULT_WIND_MAX, DEFAULT_WIND_MIN};
use windhealth::synth::{generate_scada, SynthConfig};

fn main() -> windhealth::Result<()> {
    let set = generate_scada(&SynthConfig {
        samples: 60_000,
        noise: 0.02,
        ..Default::default()
    })?;
    let records = set.turbine("S01").unwrap();

    let cleaned = clean(records, DEFAULT_WIND_MIN, DEFAULT_WIND_MAX)?;
    let r = &cleaned.report;
    println!(
        "{} records: {} outside wind range, {} outside ratio [{:.1}, {:.1}], {} kept",
        r.input,
        r.removed_wind_range,
        r.removed_iqr,
        r.q1.unwrap(),
        r.q3.unwrap(),
        r.kept()
    );

    let temps: Vec<f64> = cleaned.records.iter().map(|r| r.temperature).collect();
    let clusters = fit_temperature_clusters(&temps, 4, 0)?;
    for c in &clusters {
        println!(
            "temperature cluster {:.2} covers ({:.2}, {:.2}]",
            c.centroid, c.lower, c.upper
        );
    }

    let bins = make_wind_bins(5.0, 7.5, 0.5)?;
    let grid = assign_subbins(&cleaned.records, &bins, &clusters);
    print!("{:>8}", "");
    for b in &bins {
        print!("{:>12}", b.label());
    }
    println!();
    for (t, c) in clusters.iter().enumerate() {
        print!("{:>8.1}", c.centroid);
        for w in 0..grid.n_wind {
            print!("{:>12}", grid.get(t, w).samples.len());
        }
        println!();
    }
    println!(
        "{} cleaned records fall outside every wind bin",
        grid.discarded
    );
    Ok(())
}
