//! Membership-slope tables for a synthetic turbine.

use windhealth::pipeline::{analyze, AnalysisParams};
use windhealth::synth::{generate_scada, SynthConfig};

fn main() -> windhealth::Result<()> {
    let set = generate_scada(&SynthConfig {
        samples: 300_000,
        noise: 0.02,
        degradation: 3e-7,
        ..Default::default()
    })?;
    let analysis = analyze(&set, &AnalysisParams::default())?;
    let t = &analysis.turbines[0];
    print!("{}", t.regression_high.render(2));
    print!("{}", t.regression_low.render(2));
    let aging = t.analyzed().filter(|ix| ix.high.indicates_aging()).count();
    println!(
        "{aging} of {} sub-bins show a falling high-concept membership",
        t.analyzed().count()
    );
    for (s, reason) in t.skipped() {
        println!("skipped t{} w{}: {reason}", s.temp_index, s.wind_index);
    }
    Ok(())
}
