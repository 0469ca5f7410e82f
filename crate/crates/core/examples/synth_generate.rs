//! Synthetic SCADA from a JSON config, written as a native CSV.
//!
//!     cargo run --example synth_generate -- [config.json] [out.csv]

use windhealth::ingest::write_scada_csv;
use windhealth::synth::{generate_scada, SynthConfig};

fn main() -> windhealth::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cfg: SynthConfig = match args.first() {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| windhealth::Error::io(p, e))?;
            serde_json::from_str(&text)
                .map_err(|e| windhealth::Error::InvalidParameter(format!("{p}: {e}")))?
        }
        None => SynthConfig {
            samples: 20_000,
            degradation: 1e-6,
            noise: 0.01,
            ..Default::default()
        },
    };
    println!("{}", serde_json::to_string_pretty(&cfg).unwrap());
    let set = generate_scada(&cfg)?;
    let records = set.turbine(&cfg.turbine_id).unwrap();
    let quarter = records.len() / 4;
    for (i, chunk) in records.chunks(quarter.max(1)).enumerate().take(4) {
        let mean = chunk.iter().map(|r| r.power).sum::<f64>() / chunk.len() as f64;
        println!("quarter {}: mean power {mean:.0}", i + 1);
    }
    let out = args.get(1).cloned().unwrap_or_else(|| {
        std::env::temp_dir()
            .join("windhealth_synth.csv")
            .display()
            .to_string()
    });
    let f = std::fs::File::create(&out).map_err(|e| windhealth::Error::io(&out, e))?;
    write_scada_csv(&set, std::io::BufWriter::new(f))?;
    println!("{} records written to {out}", records.len());
    Ok(())
}
