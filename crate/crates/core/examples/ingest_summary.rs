//! Loads a SCADA CSV and prints per-turbine counts, span and ranges.
//!
//!     cargo run --example ingest_summary -- data.csv [edp]
//!
//! Without arguments a small synthetic file is generated first.

use windhealth::ingest::{load_scada, summarize, write_scada_csv, ColumnMap};
use windhealth::synth::{generate_scada, SynthConfig};

fn main() -> windhealth::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tmp;
    let path = match args.first() {
        Some(p) => std::path::PathBuf::from(p),
        None => {
            tmp = std::env::temp_dir().join("windhealth_ingest_example.csv");
            let set = generate_scada(&SynthConfig {
                samples: 5_000,
                noise: 0.02,
                ..Default::default()
            })?;
            write_scada_csv(
                &set,
                std::fs::File::create(&tmp).map_err(|e| windhealth::Error::io(&tmp, e))?,
            )?;
            tmp.clone()
        }
    };
    let map = match args.get(1).map(String::as_str) {
        Some("edp") => ColumnMap::edp(),
        _ => ColumnMap::default(),
    };
    let (set, report) = load_scada(&path, &map)?;
    print!("{report}");
    for s in summarize(&set) {
        println!(
            "{}: {} records over {:.1} days, wind {:.2}..{:.2}, temperature {:.1}..{:.1}, power {:.0}..{:.0}",
            s.turbine_id,
            s.count,
            s.span_secs as f64 / 86_400.0,
            s.wind.min,
            s.wind.max,
            s.temperature.min,
            s.temperature.max,
            s.power.min,
            s.power.max
        );
    }
    Ok(())
}
