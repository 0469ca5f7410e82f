//! Distance Index before and after an injected power drop, plus a region map.

use windhealth::distance::write_region_map;
use windhealth::pipeline::{analyze, AnalysisParams};
use windhealth::synth::{generate_scada, StepChange, SynthConfig};

fn main() -> windhealth::Result<()> {
    let params = AnalysisParams::default();
    let samples = 400_000;
    for drop in [0.0, 3_000.0, 6_000.0] {
        let cfg = SynthConfig {
            samples,
            noise: 0.02,
            step: (drop > 0.0).then_some(StepChange {
                at: samples / 2,
                amount: drop,
            }),
            ..Default::default()
        };
        let analysis = analyze(&generate_scada(&cfg)?, &params)?;
        let t = &analysis.turbines[0];
        println!("drop of {drop} power units at the midpoint");
        print!("{}", t.distance.render(3));

        if drop == 6_000.0 {
            let ix = t.analyzed().next().unwrap();
            for p in &ix.distance.pairs {
                println!(
                    "  {}: low ({:.3}, {:.3}) high ({:.3}, {:.3})",
                    p.label.as_str(),
                    p.low.z,
                    p.low.dz,
                    p.high.z,
                    p.high.dz
                );
            }
            let path = std::env::temp_dir().join("windhealth_regions.csv");
            let f = std::fs::File::create(&path).map_err(|e| windhealth::Error::io(&path, e))?;
            write_region_map(&ix.distance.pairs, 40, f)?;
            println!("region map written to {}", path.display());
        }
    }
    Ok(())
}
