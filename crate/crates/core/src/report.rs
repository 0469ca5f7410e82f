//! Run configuration, on-disk outputs of an analysis, and cross-turbine
//! comparison of saved reports.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::binning::WindBin;
use crate::concepts::write_concept_scatter;
use crate::distance::write_region_map;
use crate::error::{Error, Result};
use crate::ingest::{load_scada, ColumnMap, LoadReport, SeriesSet};
use crate::pipeline::{analyze, Analysis, AnalysisParams, TurbineAnalysis};

pub const REPORT_FILE: &str = "report.json";
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Everything needed to replay a run. The output directory is not part of
/// the echoed config, so moving the outputs does not change their hashes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub inputs: Vec<PathBuf>,
    pub column_map: ColumnMap,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub params: AnalysisParams,
}

impl RunConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
    }

    fn echoed(&self) -> RunConfig {
        RunConfig {
            output_dir: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Machine-readable result of one `analyze` run. The manifest lists every
/// other file of the run; this report itself is written last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthReport {
    pub format_version: u32,
    pub config: RunConfig,
    pub load: LoadReport,
    pub wind_bins: Vec<WindBin>,
    pub turbines: Vec<TurbineAnalysis>,
    pub manifest: Vec<ManifestEntry>,
}

impl HealthReport {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let path = if path.is_dir() {
            path.join(REPORT_FILE)
        } else {
            path.to_path_buf()
        };
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Domain(format!("{}: not a health report: {e}", path.display())))
    }
}

/// Loads and merges every input file. Records of the same turbine and
/// timestamp across files count as duplicates.
pub fn load_inputs(paths: &[PathBuf], map: &ColumnMap) -> Result<(SeriesSet, LoadReport)> {
    if paths.is_empty() {
        return Err(Error::InvalidParameter("no input files".into()));
    }
    let mut total = LoadReport::default();
    let mut records = Vec::new();
    let mut period = None;
    for p in paths {
        let (set, rep) = load_scada(p, map).map_err(|e| e.at("ingest"))?;
        total.rows_read += rep.rows_read;
        total.dropped_missing += rep.dropped_missing;
        total.dropped_unparsable += rep.dropped_unparsable;
        total.dropped_invalid += rep.dropped_invalid;
        total.dropped_duplicate += rep.dropped_duplicate;
        period.get_or_insert(set.sampling_period_secs);
        records.extend(set.turbines.into_values().flatten());
    }
    let (mut set, dups) = SeriesSet::from_records(records);
    total.dropped_duplicate += dups;
    total.kept = set.len();
    if let Some(p) = period {
        set.sampling_period_secs = p;
    }
    Ok((set, total))
}

/// File-name-safe form of a turbine id.
pub fn sanitize_id(id: &str) -> String {
    let s: String = id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() {
        "_".into()
    } else {
        s
    }
}

struct Emitter {
    root: PathBuf,
    manifest: Vec<ManifestEntry>,
}

impl Emitter {
    fn emit(&mut self, rel: &str, fill: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&path, &buf).map_err(|e| Error::io(&path, e))?;
        self.manifest.push(ManifestEntry {
            path: rel.to_string(),
            sha256: hex::encode(Sha256::digest(&buf)),
            bytes: buf.len(),
        });
        Ok(())
    }
}

fn write_membership(t: &TurbineAnalysis, bins: &[WindBin], buf: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(["timestamp", "wind_bin", "temperature_cluster"])?;
    for (ts, wi, ti) in &t.membership {
        w.write_record([
            ts.clone(),
            bins[*wi].label(),
            crate::pipeline::temperature_label(t.temperature_centroids[*ti]),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<membership>", e))?;
    Ok(())
}

/// Writes every output file of `analysis` under `out_dir` and returns the
/// report, which is also saved as `report.json`.
pub fn write_outputs(
    analysis: &Analysis,
    load: &LoadReport,
    config: &RunConfig,
    out_dir: impl AsRef<Path>,
) -> Result<HealthReport> {
    let root = out_dir.as_ref().to_path_buf();
    fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let mut em = Emitter {
        root: root.clone(),
        manifest: Vec::new(),
    };
    let echoed = config.echoed();
    em.emit("config.json", |b| {
        serde_json::to_writer_pretty(&mut *b, &echoed)?;
        b.push(b'\n');
        Ok(())
    })?;
    em.emit("load_report.txt", |b| {
        b.extend(load.to_string().bytes());
        Ok(())
    })?;

    for t in &analysis.turbines {
        let dir = format!("turbines/{}", sanitize_id(&t.turbine_id));
        em.emit(&format!("{dir}/regression_high.csv"), |b| {
            t.regression_high.write_csv(b)
        })?;
        em.emit(&format!("{dir}/regression_low.csv"), |b| {
            t.regression_low.write_csv(b)
        })?;
        if let Some(m) = &t.regression_moderate {
            em.emit(&format!("{dir}/regression_moderate.csv"), |b| {
                m.write_csv(b)
            })?;
        }
        em.emit(&format!("{dir}/distance_index.csv"), |b| {
            t.distance.write_csv(b)
        })?;
        em.emit(&format!("{dir}/tables.txt"), |b| {
            let mut text = String::new();
            for table in [
                Some(&t.regression_high),
                Some(&t.regression_low),
                t.regression_moderate.as_ref(),
                Some(&t.distance),
            ]
            .into_iter()
            .flatten()
            {
                text.push_str(&table.render(2));
                text.push('\n');
            }
            let skipped: Vec<_> = t.skipped().collect();
            if !skipped.is_empty() {
                text.push_str("skipped sub-bins\n");
                for (s, reason) in skipped {
                    text.push_str(&format!(
                        "  temperature {} wind {}: {reason}\n",
                        crate::pipeline::temperature_label(t.temperature_centroids[s.temp_index]),
                        analysis.wind_bins[s.wind_index].label()
                    ));
                }
            }
            b.extend(text.bytes());
            Ok(())
        })?;
        em.emit(&format!("{dir}/subbin_membership.csv"), |b| {
            write_membership(t, &analysis.wind_bins, b)
        })?;
        for s in &t.subbins {
            let Some(ix) = s.indexes() else { continue };
            let cell = format!("t{}_w{}", s.temp_index, s.wind_index);
            em.emit(&format!("{dir}/concepts/{cell}.csv"), |b| {
                write_concept_scatter(&ix.windows, b)
            })?;
            if config.params.region_grid > 0 {
                em.emit(&format!("{dir}/regions/{cell}.csv"), |b| {
                    write_region_map(&ix.distance.pairs, config.params.region_grid, b)
                })?;
            }
        }
    }

    let report = HealthReport {
        format_version: REPORT_FORMAT_VERSION,
        config: echoed,
        load: load.clone(),
        wind_bins: analysis.wind_bins.clone(),
        turbines: analysis.turbines.clone(),
        manifest: em.manifest,
    };
    let path = root.join(REPORT_FILE);
    let mut text = serde_json::to_vec_pretty(&report)?;
    text.push(b'\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

/// Load, analyse and write outputs according to `config`.
pub fn run_analysis(config: &RunConfig) -> Result<HealthReport> {
    let out = config
        .output_dir
        .clone()
        .ok_or_else(|| Error::InvalidParameter("no output directory".into()))?;
    config.params.validate()?;
    let (series, load) = load_inputs(&config.inputs, &config.column_map)?;
    let analysis = analyze(&series, &config.params)?;
    write_outputs(&analysis, &load, config, out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingEntry {
    pub turbine_id: String,
    pub value: f64,
}

/// Turbines ordered from least to most deteriorated under each index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Grand-total Distance Index, ascending.
    pub distance_index: Vec<RankingEntry>,
    /// Sum of scaled high-concept slopes, descending.
    pub high_slope: Vec<RankingEntry>,
}

impl Comparison {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (title, list) in [
            ("distance index total (ascending)", &self.distance_index),
            ("high-concept slope sum (descending)", &self.high_slope),
        ] {
            out.push_str(title);
            out.push('\n');
            let width = list.iter().map(|e| e.turbine_id.len()).max().unwrap_or(0);
            for (i, e) in list.iter().enumerate() {
                out.push_str(&format!(
                    "{:>3}. {:<width$}  {:.4}\n",
                    i + 1,
                    e.turbine_id,
                    e.value
                ));
            }
        }
        out
    }
}

/// Ranks all turbines of `reports`. Ties keep turbine-id order.
pub fn compare(reports: &[HealthReport]) -> Result<Comparison> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidParameter("nothing to compare".into()))?;
    for r in &reports[1..] {
        if r.config.params != first.config.params {
            let a = serde_json::to_value(&first.config.params)?;
            let b = serde_json::to_value(&r.config.params)?;
            let keys: Vec<String> = a
                .as_object()
                .into_iter()
                .flatten()
                .filter(|(k, v)| b.get(k.as_str()) != Some(v))
                .map(|(k, _)| k.clone())
                .collect();
            return Err(Error::ConfigMismatch(keys.join(", ")));
        }
    }
    let turbines: Vec<&TurbineAnalysis> = reports.iter().flat_map(|r| &r.turbines).collect();
    if turbines.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two turbines to compare, got {}",
            turbines.len()
        )));
    }
    let rank = |value: &dyn Fn(&TurbineAnalysis) -> f64, descending: bool| {
        let mut v: Vec<RankingEntry> = turbines
            .iter()
            .map(|t| RankingEntry {
                turbine_id: t.turbine_id.clone(),
                value: value(t),
            })
            .collect();
        v.sort_by(|a, b| {
            let ord = a.value.total_cmp(&b.value);
            let ord = if descending { ord.reverse() } else { ord };
            ord.then_with(|| a.turbine_id.cmp(&b.turbine_id))
        });
        v
    };
    Ok(Comparison {
        distance_index: rank(&|t| t.distance.total, false),
        high_slope: rank(&|t| t.regression_high.total, true),
    })
}
