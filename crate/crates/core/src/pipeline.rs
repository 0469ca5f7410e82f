//! End-to-end analysis: cleaning, operating-condition binning, concept
//! extraction and both health indexes for every turbine of a series set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binning::{
    assign_subbins, fit_temperature_clusters, make_wind_bins, SubBin, TempCluster, WindBin,
    DEFAULT_TEMP_CLUSTERS, DEFAULT_WIND_BIN_END, DEFAULT_WIND_BIN_START, DEFAULT_WIND_BIN_WIDTH,
};
use crate::concepts::{derive_seed, extract_concepts, RankLabel, WindowConcepts, WindowMode};
use crate::distance::{
    di_table, subbin_distance, DiNormalization, DistanceMetric, NormBounds, SubBinDistance,
};
use crate::error::{Error, Result};
use crate::fcm::{FcmParams, DEFAULT_EPS, DEFAULT_FUZZIFIER, DEFAULT_MAX_ITER};
use crate::ingest::{SampleRecord, SeriesSet};
use crate::preprocess::{clean, CleaningReport, DEFAULT_WIND_MAX, DEFAULT_WIND_MIN};
use crate::regression::{regression_index, regression_table, RegressionIndex, DEFAULT_SLOPE_SCALE};
use crate::table::HealthTable;

/// Offset separating secondary-clustering seed streams from window streams.
const SECONDARY_STREAM: u64 = 1 << 40;

/// Every tunable of an analysis run. Unknown keys in a config file are
/// rejected; missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    pub wind_min: f64,
    pub wind_max: f64,
    pub wind_bin_start: f64,
    pub wind_bin_end: f64,
    pub wind_bin_width: f64,
    pub temp_clusters: usize,
    /// Fit temperature clusters on all turbines together so their tables
    /// share rows; otherwise each turbine gets its own clusters.
    pub pooled_temperature_clusters: bool,
    pub window_mode: WindowMode,
    pub concepts: usize,
    pub fuzzifier: f64,
    pub fcm_eps: f64,
    pub fcm_max_iter: usize,
    pub seed: u64,
    pub norm_bounds: NormBounds,
    pub di_normalization: DiNormalization,
    pub di_metric: DistanceMetric,
    pub slope_scale: f64,
    /// Also regress memberships of the middle-ranked concept.
    pub regress_moderate: bool,
    /// Cells per side of each region map; 0 disables them.
    pub region_grid: usize,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            wind_min: DEFAULT_WIND_MIN,
            wind_max: DEFAULT_WIND_MAX,
            wind_bin_start: DEFAULT_WIND_BIN_START,
            wind_bin_end: DEFAULT_WIND_BIN_END,
            wind_bin_width: DEFAULT_WIND_BIN_WIDTH,
            temp_clusters: DEFAULT_TEMP_CLUSTERS,
            pooled_temperature_clusters: true,
            window_mode: WindowMode::default(),
            concepts: 3,
            fuzzifier: DEFAULT_FUZZIFIER,
            fcm_eps: DEFAULT_EPS,
            fcm_max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            norm_bounds: NormBounds::default(),
            di_normalization: DiNormalization::default(),
            di_metric: DistanceMetric::default(),
            slope_scale: DEFAULT_SLOPE_SCALE,
            regress_moderate: false,
            region_grid: 50,
        }
    }
}

impl AnalysisParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.wind_min < self.wind_max) {
            return bad(format!(
                "wind range [{}, {}) is empty",
                self.wind_min, self.wind_max
            ));
        }
        make_wind_bins(self.wind_bin_start, self.wind_bin_end, self.wind_bin_width)?;
        if self.temp_clusters == 0 {
            return bad("temp_clusters must be positive".into());
        }
        if self.concepts < 2 {
            return bad("at least two concepts are needed".into());
        }
        self.window_mode.window_count(usize::MAX)?;
        if !(self.fuzzifier > 1.0) || !self.fuzzifier.is_finite() {
            return bad(format!("fuzzifier must exceed 1 (got {})", self.fuzzifier));
        }
        if !(self.fcm_eps > 0.0) || self.fcm_max_iter == 0 {
            return bad("fcm_eps and fcm_max_iter must be positive".into());
        }
        if !(self.slope_scale > 0.0) {
            return bad("slope_scale must be positive".into());
        }
        self.norm_bounds.validate()
    }

    pub fn fcm(&self) -> FcmParams {
        FcmParams {
            clusters: self.concepts,
            fuzzifier: self.fuzzifier,
            eps: self.fcm_eps,
            max_iter: self.fcm_max_iter,
            seed: self.seed,
        }
    }

    pub fn wind_bins(&self) -> Result<Vec<WindBin>> {
        make_wind_bins(self.wind_bin_start, self.wind_bin_end, self.wind_bin_width)
    }
}

/// Indexes of one analysed sub-bin. `windows` is kept in memory only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubBinIndexes {
    pub windows_count: usize,
    pub unconverged_windows: usize,
    pub high: RegressionIndex,
    pub low: RegressionIndex,
    pub moderate: Option<RegressionIndex>,
    pub distance: SubBinDistance,
    #[serde(skip)]
    pub windows: Vec<WindowConcepts>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SubBinOutcome {
    Analyzed(Box<SubBinIndexes>),
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubBinResult {
    pub temp_index: usize,
    pub wind_index: usize,
    pub samples: usize,
    pub outcome: SubBinOutcome,
}

impl SubBinResult {
    pub fn indexes(&self) -> Option<&SubBinIndexes> {
        match &self.outcome {
            SubBinOutcome::Analyzed(ix) => Some(ix),
            SubBinOutcome::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineAnalysis {
    pub turbine_id: String,
    pub cleaning: CleaningReport,
    /// Temperature centroids defining this turbine's table rows.
    pub temperature_centroids: Vec<f64>,
    /// Cleaned records outside every wind bin.
    pub discarded: usize,
    /// Temperature-major, like the sub-bin grid.
    pub subbins: Vec<SubBinResult>,
    pub regression_high: HealthTable,
    pub regression_low: HealthTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regression_moderate: Option<HealthTable>,
    pub distance: HealthTable,
    /// (record timestamp, wind bin, temperature cluster) per binned record.
    #[serde(skip)]
    pub membership: Vec<(String, usize, usize)>,
}

impl TurbineAnalysis {
    pub fn analyzed(&self) -> impl Iterator<Item = &SubBinIndexes> {
        self.subbins.iter().filter_map(SubBinResult::indexes)
    }

    pub fn skipped(&self) -> impl Iterator<Item = (&SubBinResult, &str)> {
        self.subbins.iter().filter_map(|s| match &s.outcome {
            SubBinOutcome::Skipped { reason } => Some((s, reason.as_str())),
            SubBinOutcome::Analyzed(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub wind_bins: Vec<WindBin>,
    pub turbines: Vec<TurbineAnalysis>,
}

/// Row label of a temperature cluster: its centroid to one decimal.
pub fn temperature_label(centroid: f64) -> String {
    format!("{centroid:.1}")
}

/// Concepts and both indexes for one sub-bin.
pub fn analyze_subbin(subbin: &SubBin, params: &AnalysisParams) -> Result<SubBinIndexes> {
    let power: Vec<f64> = subbin.samples.iter().map(|r| r.power).collect();
    let fcm = params.fcm();
    let id = subbin.id();
    let windows = extract_concepts(&power, params.window_mode, &fcm, id)?;
    let high = regression_index(&windows, RankLabel::High)?;
    let low = regression_index(&windows, RankLabel::Low)?;
    let moderate = if params.regress_moderate && params.concepts > 2 {
        Some(regression_index(&windows, RankLabel::Moderate)?)
    } else {
        None
    };
    let distance = subbin_distance(
        &windows,
        &fcm,
        &params.norm_bounds,
        params.di_normalization,
        params.di_metric,
        |rank| derive_seed(params.seed, id, SECONDARY_STREAM + rank as u64),
    )?;
    Ok(SubBinIndexes {
        windows_count: windows.len(),
        unconverged_windows: windows.iter().filter(|w| !w.converged).count(),
        high,
        low,
        moderate,
        distance,
        windows,
    })
}

fn analyze_turbine(
    turbine_id: &str,
    cleaned: (Vec<SampleRecord>, CleaningReport),
    clusters: &[TempCluster],
    wind_bins: &[WindBin],
    params: &AnalysisParams,
) -> Result<TurbineAnalysis> {
    let (records, cleaning) = cleaned;
    let grid = assign_subbins(&records, wind_bins, clusters);
    let mut membership = Vec::with_capacity(records.len() - grid.discarded);
    for sb in &grid.subbins {
        for r in &sb.samples {
            membership.push((
                crate::ingest::format_timestamp(&r.timestamp),
                sb.wind_index,
                sb.temp_index,
            ));
        }
    }
    membership.sort();

    let subbins: Vec<SubBinResult> = grid
        .subbins
        .par_iter()
        .map(|sb| {
            let outcome = match analyze_subbin(sb, params) {
                Ok(ix) => SubBinOutcome::Analyzed(Box::new(ix)),
                Err(e) => SubBinOutcome::Skipped {
                    reason: e.to_string(),
                },
            };
            SubBinResult {
                temp_index: sb.temp_index,
                wind_index: sb.wind_index,
                samples: sb.samples.len(),
                outcome,
            }
        })
        .collect();

    let rows: Vec<String> = clusters
        .iter()
        .map(|c| temperature_label(c.centroid))
        .collect();
    let cols: Vec<String> = wind_bins.iter().map(WindBin::label).collect();
    let n_wind = wind_bins.len();
    let grid_of = |f: &dyn Fn(&SubBinIndexes) -> Option<RegressionIndex>| -> Vec<Vec<Option<RegressionIndex>>> {
        subbins
            .chunks(n_wind)
            .map(|row| row.iter().map(|s| s.indexes().and_then(f)).collect())
            .collect()
    };
    let title = |what: &str| format!("{turbine_id}: {what}");
    let scale_note = format!("x{}", params.slope_scale);
    let regression_high = regression_table(
        title(&format!("high-concept membership slope ({scale_note})")),
        rows.clone(),
        cols.clone(),
        &grid_of(&|ix| Some(ix.high)),
        params.slope_scale,
    )?;
    let regression_low = regression_table(
        title(&format!("low-concept membership slope ({scale_note})")),
        rows.clone(),
        cols.clone(),
        &grid_of(&|ix| Some(ix.low)),
        params.slope_scale,
    )?;
    let regression_moderate = if params.regress_moderate && params.concepts > 2 {
        Some(regression_table(
            title(&format!("moderate-concept membership slope ({scale_note})")),
            rows.clone(),
            cols.clone(),
            &grid_of(&|ix| ix.moderate),
            params.slope_scale,
        )?)
    } else {
        None
    };
    let di_cells: Vec<Vec<Option<f64>>> = subbins
        .chunks(n_wind)
        .map(|row| {
            row.iter()
                .map(|s| s.indexes().map(|ix| ix.distance.index.value))
                .collect()
        })
        .collect();
    let distance = di_table(title("distance index"), rows, cols, &di_cells)?;

    Ok(TurbineAnalysis {
        turbine_id: turbine_id.to_string(),
        cleaning,
        temperature_centroids: clusters.iter().map(|c| c.centroid).collect(),
        discarded: grid.discarded,
        subbins,
        regression_high,
        regression_low,
        regression_moderate,
        distance,
        membership,
    })
}

/// Runs the whole pipeline on every turbine of `series`.
///
/// Per-turbine failures (too little data to clean or cluster) abort the run;
/// per-sub-bin failures mark that sub-bin skipped with the reason.
pub fn analyze(series: &SeriesSet, params: &AnalysisParams) -> Result<Analysis> {
    params.validate()?;
    if series.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let wind_bins = params.wind_bins()?;
    let cleaned: Vec<(&String, (Vec<SampleRecord>, CleaningReport))> = series
        .turbines
        .iter()
        .map(|(id, recs)| {
            clean(recs, params.wind_min, params.wind_max)
                .map(|c| (id, (c.records, c.report)))
                .map_err(|e| e.at(format!("preprocess turbine {id}")))
        })
        .collect::<Result<_>>()?;

    let temps_of = |recs: &[SampleRecord]| recs.iter().map(|r| r.temperature).collect::<Vec<f64>>();
    let pooled = if params.pooled_temperature_clusters {
        let all: Vec<f64> = cleaned.iter().flat_map(|(_, (r, _))| temps_of(r)).collect();
        Some(
            fit_temperature_clusters(&all, params.temp_clusters, params.seed)
                .map_err(|e| e.at("temperature clustering"))?,
        )
    } else {
        None
    };

    let turbines = cleaned
        .into_iter()
        .map(|(id, cl)| {
            let clusters = match &pooled {
                Some(c) => c.clone(),
                None => {
                    fit_temperature_clusters(&temps_of(&cl.0), params.temp_clusters, params.seed)
                        .map_err(|e| e.at(format!("temperature clustering turbine {id}")))?
                }
            };
            analyze_turbine(id, cl, &clusters, &wind_bins, params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Analysis {
        wind_bins,
        turbines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_scada, StepChange, SynthConfig, WindModel};

    fn quick() -> AnalysisParams {
        AnalysisParams {
            window_mode: WindowMode::Count(5),
            region_grid: 4,
            ..Default::default()
        }
    }

    #[test]
    fn params_round_trip_and_reject_unknown_keys() {
        let p = AnalysisParams::default();
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<AnalysisParams>(&text).unwrap(), p);
        let partial: AnalysisParams =
            serde_json::from_str(r#"{"seed": 7, "window_mode": {"count": 10}}"#).unwrap();
        assert_eq!(partial.seed, 7);
        assert_eq!(partial.window_mode, WindowMode::Count(10));
        assert_eq!(partial.concepts, 3);
        assert!(serde_json::from_str::<AnalysisParams>(r#"{"sed": 7}"#).is_err());
    }

    #[test]
    fn invalid_params_rejected() {
        for p in [
            AnalysisParams {
                fuzzifier: 1.0,
                ..quick()
            },
            AnalysisParams {
                concepts: 1,
                ..quick()
            },
            AnalysisParams {
                wind_min: 9.0,
                wind_max: 4.0,
                ..quick()
            },
            AnalysisParams {
                window_mode: WindowMode::Count(0),
                ..quick()
            },
            AnalysisParams {
                wind_bin_width: 0.0,
                ..quick()
            },
        ] {
            assert_eq!(p.validate().unwrap_err().exit_code(), 1);
        }
    }

    #[test]
    fn tables_cover_the_grid_and_skips_are_reported() {
        let set = generate_scada(&SynthConfig {
            samples: 20_000,
            noise: 0.02,
            ..Default::default()
        })
        .unwrap();
        let a = analyze(&set, &quick()).unwrap();
        assert_eq!(a.wind_bins.len(), 5);
        let t = &a.turbines[0];
        assert_eq!(t.subbins.len(), 20);
        assert_eq!(t.regression_high.cells.len(), 4);
        assert_eq!(t.distance.cells[0].len(), 5);
        for (i, s) in t.subbins.iter().enumerate() {
            let cell = t.distance.get(s.temp_index, s.wind_index);
            assert_eq!(i, s.temp_index * 5 + s.wind_index);
            assert_eq!(cell.is_some(), s.indexes().is_some());
        }
        assert!(t.analyzed().count() > 0);
        let binned: usize = t.subbins.iter().map(|s| s.samples).sum();
        assert_eq!(binned + t.discarded, t.cleaning.kept());
        assert_eq!(t.membership.len(), binned);
    }

    #[test]
    fn sparse_subbins_are_skipped_not_fatal() {
        // winds stuck near 6 leave most wind bins empty
        let cfg = SynthConfig {
            samples: 3000,
            wind: WindModel::Uniform { lo: 6.0, hi: 6.4 },
            ..Default::default()
        };
        let a = analyze(&generate_scada(&cfg).unwrap(), &quick()).unwrap();
        let t = &a.turbines[0];
        assert!(t.skipped().count() >= 16);
        assert!(t.skipped().all(|(_, r)| !r.is_empty()));
    }

    #[test]
    fn constant_wind_gives_zero_indexes() {
        let cfg = SynthConfig {
            samples: 4000,
            wind: WindModel::Uniform { lo: 6.2, hi: 6.2 },
            ..Default::default()
        };
        let a = analyze(&generate_scada(&cfg).unwrap(), &quick()).unwrap();
        let t = &a.turbines[0];
        assert!(t.analyzed().count() > 0);
        for ix in t.analyzed() {
            assert!(ix.distance.index.value.abs() < 1e-6);
            assert!(ix.high.slope.abs() < 1e-12, "{:?}", ix.high);
        }
    }

    #[test]
    fn step_drop_raises_distance_index() {
        let base = SynthConfig {
            samples: 30_000,
            ..Default::default()
        };
        let stepped = SynthConfig {
            step: Some(StepChange {
                at: 15_000,
                amount: 6_000.0,
            }),
            ..base.clone()
        };
        let p = quick();
        let a = analyze(&generate_scada(&base).unwrap(), &p).unwrap();
        let b = analyze(&generate_scada(&stepped).unwrap(), &p).unwrap();
        assert!(b.turbines[0].distance.total > a.turbines[0].distance.total);
    }

    #[test]
    fn per_turbine_clusters_when_not_pooled() {
        let set = generate_scada(&SynthConfig {
            samples: 10_000,
            ..Default::default()
        })
        .unwrap();
        let p = AnalysisParams {
            pooled_temperature_clusters: false,
            temp_clusters: 2,
            ..quick()
        };
        let a = analyze(&set, &p).unwrap();
        assert_eq!(a.turbines[0].temperature_centroids.len(), 2);
    }
}
