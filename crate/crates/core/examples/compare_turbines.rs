//! Full runs for two synthetic turbines written to disk, then ranked.

use windhealth::ingest::write_scada_csv;
use windhealth::report::{compare, run_analysis, RunConfig};
use windhealth::synth::{generate_scada, SynthConfig};

fn main() -> windhealth::Result<()> {
    let root = std::env::temp_dir().join("windhealth_compare_example");
    std::fs::create_dir_all(&root).map_err(|e| windhealth::Error::io(&root, e))?;
    let mut reports = Vec::new();
    for (id, degradation) in [("T-healthy", 0.0), ("T-aged", 2e-7)] {
        let cfg = SynthConfig {
            turbine_id: id.into(),
            samples: 400_000,
            noise: 0.02,
            degradation,
            ..Default::default()
        };
        let input = root.join(format!("{id}.csv"));
        let f = std::fs::File::create(&input).map_err(|e| windhealth::Error::io(&input, e))?;
        write_scada_csv(&generate_scada(&cfg)?, std::io::BufWriter::new(f))?;
        let run = RunConfig {
            inputs: vec![input],
            output_dir: Some(root.join(id)),
            ..Default::default()
        };
        let report = run_analysis(&run)?;
        println!(
            "{id}: {} files under {}",
            report.manifest.len() + 1,
            root.join(id).display()
        );
        reports.push(report);
    }
    print!("{}", compare(&reports)?.render());
    Ok(())
}
