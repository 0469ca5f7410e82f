use windhealth::concepts::{read_concept_scatter, WindowMode};
use windhealth::ingest::LoadReport;
use windhealth::pipeline::{analyze, AnalysisParams};
use windhealth::report::{compare, write_outputs, HealthReport, RunConfig};
use windhealth::synth::{generate_scada, SynthConfig};

fn report_for(cfg: &SynthConfig, params: &AnalysisParams, dir: &std::path::Path) -> HealthReport {
    let set = generate_scada(cfg).unwrap();
    let analysis = analyze(&set, params).unwrap();
    let run = RunConfig {
        params: params.clone(),
        ..Default::default()
    };
    write_outputs(&analysis, &LoadReport::default(), &run, dir).unwrap()
}

#[test]
fn degraded_turbine_ranks_worse() {
    let tmp = tempfile::tempdir().unwrap();
    let params = AnalysisParams {
        region_grid: 0,
        ..Default::default()
    };
    // 2e-7 per sample over 500k samples is a 10% loss end to end
    let base = SynthConfig {
        samples: 500_000,
        noise: 0.02,
        turbine_id: "healthy".into(),
        ..Default::default()
    };
    let aged = SynthConfig {
        degradation: 2e-7,
        turbine_id: "aged".into(),
        ..base.clone()
    };
    let a = report_for(&base, &params, &tmp.path().join("a"));
    let b = report_for(&aged, &params, &tmp.path().join("b"));
    let c = compare(&[a, b]).unwrap();
    assert_eq!(c.distance_index[0].turbine_id, "healthy");
    assert!(c.distance_index[1].value > 2.0 * c.distance_index[0].value);
    assert_eq!(c.high_slope[1].turbine_id, "aged");
}

#[test]
fn concept_and_membership_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let r = 12;
    let params = AnalysisParams {
        window_mode: WindowMode::Count(r),
        region_grid: 7,
        ..Default::default()
    };
    let cfg = SynthConfig {
        samples: 40_000,
        noise: 0.02,
        ..Default::default()
    };
    let set = generate_scada(&cfg).unwrap();
    let analysis = analyze(&set, &params).unwrap();
    let run = RunConfig {
        params: params.clone(),
        ..Default::default()
    };
    let report = write_outputs(&analysis, &LoadReport::default(), &run, tmp.path()).unwrap();
    let t = &analysis.turbines[0];
    let mut checked = 0;
    for s in &t.subbins {
        let Some(ix) = s.indexes() else { continue };
        assert_eq!(ix.high.n, s.samples - r);
        assert_eq!(ix.windows.len(), r);
        let file = tmp.path().join(format!(
            "turbines/S01/concepts/t{}_w{}.csv",
            s.temp_index, s.wind_index
        ));
        let concepts = read_concept_scatter(std::fs::File::open(file).unwrap()).unwrap();
        assert_eq!(concepts.len(), r * params.concepts);
        let regions = std::fs::read_to_string(tmp.path().join(format!(
            "turbines/S01/regions/t{}_w{}.csv",
            s.temp_index, s.wind_index
        )))
        .unwrap();
        assert_eq!(regions.lines().count(), 7 * 7 + 1);
        checked += 1;
    }
    assert!(checked >= 10);
    let listed = report
        .manifest
        .iter()
        .filter(|e| e.path.contains("/concepts/"))
        .count();
    assert_eq!(listed, checked);
    // every binned record appears once in the membership dump
    let dump =
        std::fs::read_to_string(tmp.path().join("turbines/S01/subbin_membership.csv")).unwrap();
    let binned: usize = t.subbins.iter().map(|s| s.samples).sum();
    assert_eq!(dump.lines().count(), binned + 1);
}

#[test]
fn stationary_drift_is_small_next_to_a_step() {
    let params = AnalysisParams::default();
    let cfg = SynthConfig {
        samples: 200_000,
        noise: 0.02,
        ..Default::default()
    };
    let flat = analyze(&generate_scada(&cfg).unwrap(), &params).unwrap();
    let stepped_cfg = SynthConfig {
        step: Some(windhealth::synth::StepChange {
            at: 100_000,
            amount: 6_000.0,
        }),
        ..cfg
    };
    let stepped = analyze(&generate_scada(&stepped_cfg).unwrap(), &params).unwrap();
    let di = |a: &windhealth::pipeline::Analysis| {
        a.turbines[0]
            .subbins
            .iter()
            .map(|s| s.indexes().map(|ix| ix.distance.index.value))
            .collect::<Vec<_>>()
    };
    for (x, y) in di(&flat).into_iter().zip(di(&stepped)) {
        if let (Some(x), Some(y)) = (x, y) {
            assert!(y > x, "{y} <= {x}");
        }
    }
}
