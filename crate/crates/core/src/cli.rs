//! Command-line front end. Exit codes: 0 success, 1 usage or config error,
//! 2 data error, 3 numerical failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::concepts::WindowMode;
use crate::distance::{DiNormalization, DistanceMetric};
use crate::error::{Error, Result};
use crate::ingest::{summarize, write_scada_csv, ColumnMap};
use crate::plots::{histogram, power_curve_stages, write_histogram, write_power_curve};
use crate::report::{compare, load_inputs, run_analysis, sanitize_id, HealthReport, RunConfig};
use crate::synth::{generate_scada, StepChange, SynthConfig};

#[derive(Debug, Parser)]
#[command(
    name = "windhealth",
    version,
    about = "Wind turbine health indexes from SCADA data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline and write reports, tables and plot data.
    Analyze(Box<AnalyzeArgs>),
    /// Rank turbines from one or more saved reports.
    Compare(CompareArgs),
    /// Generate a synthetic SCADA CSV.
    Synth(SynthArgs),
    /// Per-turbine counts, time span and value ranges.
    Summarize(SummarizeArgs),
    /// Power-curve scatter per cleaning stage and a temperature histogram.
    PlotData(PlotDataArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ColumnPreset {
    /// timestamp, turbine_id, wind_speed, temperature, power
    Native,
    /// EDP open-data export, power converted from kW to Wh per 10 minutes.
    Edp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricArg {
    Euclidean,
    Manhattan,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DiNormArg {
    Coordinates,
    Scalar,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// SCADA CSV files; appended to any listed in the config file.
    pub inputs: Vec<PathBuf>,
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Column layout of the input files.
    #[arg(long, value_enum)]
    pub columns: Option<ColumnPreset>,
    /// Multiplier applied to the power column.
    #[arg(long)]
    pub power_scale: Option<f64>,
    /// Lower wind-speed cut, inclusive.
    #[arg(long)]
    pub wind_min: Option<f64>,
    /// Upper wind-speed cut, exclusive.
    #[arg(long)]
    pub wind_max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output directory; required unless the config file names one.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Lower edge of the first wind bin.
    #[arg(long)]
    pub wind_bin_start: Option<f64>,
    /// Upper edge of the last wind bin.
    #[arg(long)]
    pub wind_bin_end: Option<f64>,
    /// Wind bin width.
    #[arg(long)]
    pub wind_bin_width: Option<f64>,
    /// Number of temperature clusters.
    #[arg(long)]
    pub temp_clusters: Option<usize>,
    /// Fit temperature clusters per turbine instead of over all turbines.
    #[arg(long)]
    pub per_turbine_temperature: bool,
    /// Base seed for every random initialisation.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of windows per sub-bin.
    #[arg(long, conflicts_with = "window_length")]
    pub windows: Option<usize>,
    /// Samples per window; the window count follows from the sub-bin size.
    #[arg(long)]
    pub window_length: Option<usize>,
    /// Fuzzy concepts per window.
    #[arg(long)]
    pub concepts: Option<usize>,
    /// FCM fuzzifier m, greater than 1.
    #[arg(long)]
    pub fuzzifier: Option<f64>,
    /// FCM stop threshold on membership change.
    #[arg(long)]
    pub fcm_eps: Option<f64>,
    /// FCM iteration cap.
    #[arg(long)]
    pub fcm_max_iter: Option<usize>,
    /// Distance between early and late centroids.
    #[arg(long, value_enum)]
    pub di_metric: Option<MetricArg>,
    /// How concept coordinates are scaled before the Distance Index.
    #[arg(long, value_enum)]
    pub di_normalization: Option<DiNormArg>,
    /// Power bound for coordinate normalisation.
    #[arg(long)]
    pub norm_power_min: Option<f64>,
    /// Power bound for coordinate normalisation.
    #[arg(long)]
    pub norm_power_max: Option<f64>,
    /// Power-change bound for coordinate normalisation.
    #[arg(long)]
    pub norm_dpower_min: Option<f64>,
    /// Power-change bound for coordinate normalisation.
    #[arg(long)]
    pub norm_dpower_max: Option<f64>,
    /// Cells per side of the region maps; 0 disables them.
    #[arg(long)]
    pub region_grid: Option<usize>,
    /// Factor applied to membership slopes in tables.
    #[arg(long)]
    pub slope_scale: Option<f64>,
    #[arg(long)]
    pub regress_moderate: bool,
    /// Only write files; print nothing but the output directory.
    #[arg(short, long)]
    pub quiet: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Report files or analyze output directories.
    #[arg(required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON generator configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output CSV; stdout if absent.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Number of records to generate.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Relative power loss per sample.
    #[arg(long)]
    pub degradation: Option<f64>,
    /// Relative noise standard deviation.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Base seed for every random initialisation.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub turbine_id: Option<String>,
    /// Sample index of an injected power drop.
    #[arg(long, requires = "step_amount")]
    pub step_at: Option<usize>,
    /// Size of the injected drop in power units.
    #[arg(long, requires = "step_at")]
    pub step_amount: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PlotDataArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Directory for the plot CSV files.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Temperature histogram bins.
    #[arg(long, default_value_t = 30)]
    pub hist_bins: usize,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParameter(format!("{}: {e}", path.display())))
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl InputArgs {
    fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        cfg.inputs.extend(self.inputs.iter().cloned());
        match self.columns {
            Some(ColumnPreset::Native) => cfg.column_map = ColumnMap::default(),
            Some(ColumnPreset::Edp) => cfg.column_map = ColumnMap::edp(),
            None => {}
        }
        set(&mut cfg.column_map.power_scale, self.power_scale);
        set(&mut cfg.params.wind_min, self.wind_min);
        set(&mut cfg.params.wind_max, self.wind_max);
        if cfg.inputs.is_empty() {
            return Err(Error::InvalidParameter("no input files given".into()));
        }
        Ok(cfg)
    }
}

impl AnalyzeArgs {
    /// Config file values overridden by flags.
    pub fn run_config(&self) -> Result<RunConfig> {
        let mut cfg = self.input.run_config()?;
        if self.out.is_some() {
            cfg.output_dir = self.out.clone();
        }
        let p = &mut cfg.params;
        set(&mut p.wind_bin_start, self.wind_bin_start);
        set(&mut p.wind_bin_end, self.wind_bin_end);
        set(&mut p.wind_bin_width, self.wind_bin_width);
        set(&mut p.temp_clusters, self.temp_clusters);
        if self.per_turbine_temperature {
            p.pooled_temperature_clusters = false;
        }
        set(&mut p.seed, self.seed);
        set(&mut p.window_mode, self.windows.map(WindowMode::Count));
        set(
            &mut p.window_mode,
            self.window_length.map(WindowMode::Length),
        );
        set(&mut p.concepts, self.concepts);
        set(&mut p.fuzzifier, self.fuzzifier);
        set(&mut p.fcm_eps, self.fcm_eps);
        set(&mut p.fcm_max_iter, self.fcm_max_iter);
        set(
            &mut p.di_metric,
            self.di_metric.map(|m| match m {
                MetricArg::Euclidean => DistanceMetric::Euclidean,
                MetricArg::Manhattan => DistanceMetric::Manhattan,
            }),
        );
        set(
            &mut p.di_normalization,
            self.di_normalization.map(|m| match m {
                DiNormArg::Coordinates => DiNormalization::Coordinates,
                DiNormArg::Scalar => DiNormalization::Scalar,
            }),
        );
        set(&mut p.norm_bounds.power_min, self.norm_power_min);
        set(&mut p.norm_bounds.power_max, self.norm_power_max);
        set(&mut p.norm_bounds.dpower_min, self.norm_dpower_min);
        set(&mut p.norm_bounds.dpower_max, self.norm_dpower_max);
        set(&mut p.region_grid, self.region_grid);
        set(&mut p.slope_scale, self.slope_scale);
        if self.regress_moderate {
            p.regress_moderate = true;
        }
        if cfg.output_dir.is_none() {
            return Err(Error::InvalidParameter(
                "no output directory (--out)".into(),
            ));
        }
        cfg.params.validate()?;
        Ok(cfg)
    }
}

impl SynthArgs {
    pub fn synth_config(&self) -> Result<SynthConfig> {
        let mut cfg: SynthConfig = match &self.config {
            Some(p) => read_json(p)?,
            None => SynthConfig::default(),
        };
        set(&mut cfg.samples, self.samples);
        set(&mut cfg.degradation, self.degradation);
        set(&mut cfg.noise, self.noise);
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.turbine_id, self.turbine_id.clone());
        if let (Some(at), Some(amount)) = (self.step_at, self.step_amount) {
            cfg.step = Some(StepChange { at, amount });
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.run_config()?;
    let report = run_analysis(&cfg)?;
    let dir = cfg.output_dir.as_deref().unwrap_or(Path::new("."));
    let w = |e| Error::io("<stdout>", e);
    if !args.quiet {
        write!(out, "{}", report.load).map_err(w)?;
        for t in &report.turbines {
            writeln!(out).map_err(w)?;
            let c = &t.cleaning;
            writeln!(
                out,
                "{}: {} records, {} outside wind range, {} removed by ratio filter, {} kept",
                t.turbine_id,
                c.input,
                c.removed_wind_range,
                c.removed_iqr,
                c.kept()
            )
            .map_err(w)?;
            for table in [&t.regression_high, &t.regression_low, &t.distance] {
                write!(out, "{}", table.render(2)).map_err(w)?;
            }
            let skipped = t.skipped().count();
            if skipped > 0 {
                writeln!(out, "{skipped} sub-bin(s) skipped; see tables.txt").map_err(w)?;
            }
        }
    }
    writeln!(
        out,
        "wrote {} files and report.json to {}",
        report.manifest.len(),
        dir.display()
    )
    .map_err(w)?;
    Ok(())
}

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let reports = args
        .reports
        .iter()
        .map(HealthReport::read)
        .collect::<Result<Vec<_>>>()?;
    let c = compare(&reports)?;
    let text = if args.json {
        serde_json::to_string_pretty(&c)? + "\n"
    } else {
        c.render()
    };
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let set = generate_scada(&args.synth_config()?)?;
    match &args.out {
        Some(p) => {
            let f = fs::File::create(p).map_err(|e| Error::io(p, e))?;
            write_scada_csv(&set, std::io::BufWriter::new(f))
        }
        None => write_scada_csv(&set, out),
    }
}

fn cmd_summarize(args: &SummarizeArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.input.run_config()?;
    let (set, load) = load_inputs(&cfg.inputs, &cfg.column_map)?;
    let summary = summarize(&set);
    let w = |e| Error::io("<stdout>", e);
    if args.json {
        serde_json::to_writer_pretty(
            &mut *out,
            &serde_json::json!({ "load": load, "turbines": summary }),
        )?;
        writeln!(out).map_err(w)?;
        return Ok(());
    }
    write!(out, "{load}").map_err(w)?;
    for s in summary {
        writeln!(out, "\n{}: {} records", s.turbine_id, s.count).map_err(w)?;
        writeln!(
            out,
            "  from {} to {} ({} s)",
            s.start.to_rfc3339(),
            s.end.to_rfc3339(),
            s.span_secs
        )
        .map_err(w)?;
        for (name, r) in [
            ("wind", s.wind),
            ("temperature", s.temperature),
            ("power", s.power),
        ] {
            writeln!(out, "  {name:<12} {} .. {}", r.min, r.max).map_err(w)?;
        }
    }
    Ok(())
}

fn cmd_plot_data(args: &PlotDataArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = args.input.run_config()?;
    let (set, _) = load_inputs(&cfg.inputs, &cfg.column_map)?;
    let mut written = 0;
    for (id, recs) in &set.turbines {
        let dir = args.out.join(sanitize_id(id));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let stages = power_curve_stages(recs, cfg.params.wind_min, cfg.params.wind_max)
            .map_err(|e| e.at(format!("preprocess turbine {id}")))?;
        for (stage, rs) in &stages {
            let p = dir.join(format!("power_curve_{}.csv", stage.as_str()));
            let f = fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
            write_power_curve(rs, std::io::BufWriter::new(f))?;
            written += 1;
        }
        let temps: Vec<f64> = recs.iter().map(|r| r.temperature).collect();
        let p = dir.join("temperature_histogram.csv");
        let f = fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
        write_histogram(&histogram(&temps, args.hist_bins)?, f)?;
        written += 1;
    }
    writeln!(out, "wrote {written} files to {}", args.out.display())
        .map_err(|e| Error::io("<stdout>", e))
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::Summarize(a) => cmd_summarize(a, out),
        Command::PlotData(a) => cmd_plot_data(a, out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
/// Diagnostics go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
