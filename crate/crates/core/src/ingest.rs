//! Loading and validation of SCADA time series from CSV.
//!
//! Rows missing any of wind, temperature or power are dropped (no
//! imputation). Within a turbine, records are sorted by timestamp and the
//! first occurrence of a duplicated timestamp wins.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nominal SCADA sampling period (10 minutes) used when it cannot be inferred.
pub const DEFAULT_SAMPLING_PERIOD_SECS: i64 = 600;

/// One timestamped SCADA observation for one turbine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub timestamp: DateTime<Utc>,
    pub turbine_id: String,
    /// m/s
    pub wind_speed: f64,
    /// °C (or any numeric channel mapped in its place, e.g. air pressure)
    pub temperature: f64,
    /// Opaque power units.
    pub power: f64,
}

/// Per-turbine, timestamp-sorted series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSet {
    pub turbines: BTreeMap<String, Vec<SampleRecord>>,
    pub sampling_period_secs: i64,
}

impl SeriesSet {
    /// Builds a set from unordered records, applying the same sort and
    /// duplicate policy as [`load_scada`]. Returns the set and the number of
    /// duplicates dropped.
    pub fn from_records(records: Vec<SampleRecord>) -> (Self, usize) {
        let mut turbines: BTreeMap<String, Vec<SampleRecord>> = BTreeMap::new();
        for r in records {
            turbines.entry(r.turbine_id.clone()).or_default().push(r);
        }
        let mut duplicates = 0;
        for list in turbines.values_mut() {
            // stable: the first occurrence in input order survives
            list.sort_by_key(|r| r.timestamp);
            let before = list.len();
            list.dedup_by_key(|r| r.timestamp);
            duplicates += before - list.len();
        }
        let sampling_period_secs = infer_sampling_period(&turbines);
        (
            SeriesSet {
                turbines,
                sampling_period_secs,
            },
            duplicates,
        )
    }

    pub fn len(&self) -> usize {
        self.turbines.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn turbine(&self, id: &str) -> Option<&[SampleRecord]> {
        self.turbines.get(id).map(Vec::as_slice)
    }
}

fn infer_sampling_period(turbines: &BTreeMap<String, Vec<SampleRecord>>) -> i64 {
    let mut diffs: Vec<i64> = turbines
        .values()
        .flat_map(|list| {
            list.windows(2)
                .map(|w| (w[1].timestamp - w[0].timestamp).num_seconds())
        })
        .filter(|d| *d > 0)
        .collect();
    if diffs.is_empty() {
        return DEFAULT_SAMPLING_PERIOD_SECS;
    }
    let mid = diffs.len() / 2;
    *diffs.select_nth_unstable(mid).1
}

/// Where the turbine id of each row comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurbineColumn {
    Column(String),
    Constant(String),
}

/// Maps logical fields onto CSV header names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMap {
    pub timestamp: String,
    pub turbine: TurbineColumn,
    pub wind: String,
    pub temperature: String,
    pub power: String,
    /// Multiplier applied to the power column on load.
    #[serde(default = "one")]
    pub power_scale: f64,
    /// chrono format string; `None` accepts ISO-8601 / RFC 3339.
    #[serde(default)]
    pub timestamp_format: Option<String>,
    /// Field separator; `None` picks `;` or `,` from the header line.
    #[serde(default)]
    pub delimiter: Option<char>,
}

fn one() -> f64 {
    1.0
}

impl Default for ColumnMap {
    /// The schema written by [`write_scada_csv`] and the synthetic generator.
    fn default() -> Self {
        ColumnMap {
            timestamp: "timestamp".into(),
            turbine: TurbineColumn::Column("turbine_id".into()),
            wind: "wind_speed".into(),
            temperature: "temperature".into(),
            power: "power".into(),
            power_scale: 1.0,
            timestamp_format: None,
            delimiter: None,
        }
    }
}

impl ColumnMap {
    /// EDP open-data SCADA export. Average active power in kW is converted to
    /// Wh per 10-minute interval.
    pub fn edp() -> Self {
        ColumnMap {
            timestamp: "Timestamp".into(),
            turbine: TurbineColumn::Column("Turbine_ID".into()),
            wind: "Amb_WindSpeed_Avg".into(),
            temperature: "Amb_Temp_Avg".into(),
            power: "Grd_Prod_Pwr_Avg".into(),
            power_scale: 1000.0 / 6.0,
            timestamp_format: None,
            delimiter: None,
        }
    }
}

/// Row accounting for one load.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub kept: usize,
    pub dropped_missing: usize,
    pub dropped_unparsable: usize,
    pub dropped_invalid: usize,
    pub dropped_duplicate: usize,
}

impl LoadReport {
    pub fn dropped(&self) -> usize {
        self.dropped_missing
            + self.dropped_unparsable
            + self.dropped_invalid
            + self.dropped_duplicate
    }
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows read:          {}", self.rows_read)?;
        writeln!(f, "rows kept:          {}", self.kept)?;
        writeln!(f, "dropped (total):    {}", self.dropped())?;
        writeln!(f, "  missing field:    {}", self.dropped_missing)?;
        writeln!(f, "  unparsable field: {}", self.dropped_unparsable)?;
        writeln!(f, "  invalid value:    {}", self.dropped_invalid)?;
        writeln!(f, "  duplicate time:   {}", self.dropped_duplicate)
    }
}

/// Loads a SCADA CSV file.
pub fn load_scada(path: impl AsRef<Path>, map: &ColumnMap) -> Result<(SeriesSet, LoadReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    load_scada_from_reader(file, map).map_err(|e| match e {
        Error::NoValidRows { .. } => Error::NoValidRows { path: path.into() },
        other => other,
    })
}

enum RowError {
    Missing,
    Unparsable,
    Invalid,
}

struct Columns {
    timestamp: usize,
    turbine: Option<usize>,
    wind: usize,
    temperature: usize,
    power: usize,
}

fn sniff_delimiter(header: &str) -> u8 {
    let semis = header.matches(';').count();
    if semis > header.matches(',').count() {
        b';'
    } else {
        b','
    }
}

pub fn load_scada_from_reader<R: Read>(
    reader: R,
    map: &ColumnMap,
) -> Result<(SeriesSet, LoadReport)> {
    let mut reader = BufReader::new(reader);
    let mut first = String::new();
    reader
        .read_line(&mut first)
        .map_err(|e| Error::io("<reader>", e))?;
    if let Some(rest) = first.strip_prefix('\u{feff}') {
        first = rest.to_string();
    }
    let delimiter = match map.delimiter {
        Some(c) if c.is_ascii() => c as u8,
        Some(c) => {
            return Err(Error::InvalidParameter(format!(
                "delimiter {c:?} is not ASCII"
            )))
        }
        None => sniff_delimiter(&first),
    };
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .delimiter(delimiter)
        .from_reader(std::io::Cursor::new(first).chain(reader));
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let cols = Columns {
        timestamp: find(&map.timestamp)?,
        turbine: match &map.turbine {
            TurbineColumn::Column(name) => Some(find(name)?),
            TurbineColumn::Constant(_) => None,
        },
        wind: find(&map.wind)?,
        temperature: find(&map.temperature)?,
        power: find(&map.power)?,
    };

    let mut report = LoadReport::default();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        report.rows_read += 1;
        match parse_row(&row, &cols, map) {
            Ok(r) => records.push(r),
            Err(RowError::Missing) => report.dropped_missing += 1,
            Err(RowError::Unparsable) => report.dropped_unparsable += 1,
            Err(RowError::Invalid) => report.dropped_invalid += 1,
        }
    }
    let (set, duplicates) = SeriesSet::from_records(records);
    report.dropped_duplicate = duplicates;
    report.kept = set.len();
    if set.is_empty() {
        return Err(Error::NoValidRows {
            path: "<reader>".into(),
        });
    }
    Ok((set, report))
}

fn field(row: &csv::StringRecord, idx: usize) -> std::result::Result<&str, RowError> {
    match row.get(idx) {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(RowError::Missing),
    }
}

fn number(row: &csv::StringRecord, idx: usize) -> std::result::Result<f64, RowError> {
    let v: f64 = field(row, idx)?.parse().map_err(|_| RowError::Unparsable)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(RowError::Unparsable)
    }
}

fn parse_row(
    row: &csv::StringRecord,
    cols: &Columns,
    map: &ColumnMap,
) -> std::result::Result<SampleRecord, RowError> {
    let ts = field(row, cols.timestamp)?;
    let timestamp =
        parse_timestamp(ts, map.timestamp_format.as_deref()).ok_or(RowError::Unparsable)?;
    let turbine_id = match (&map.turbine, cols.turbine) {
        (TurbineColumn::Constant(id), _) => id.clone(),
        (_, Some(idx)) => field(row, idx)?.to_string(),
        (TurbineColumn::Column(_), None) => unreachable!("column index resolved from header"),
    };
    let wind_speed = number(row, cols.wind)?;
    let temperature = number(row, cols.temperature)?;
    let power = number(row, cols.power)? * map.power_scale;
    if wind_speed < 0.0 {
        return Err(RowError::Invalid);
    }
    Ok(SampleRecord {
        timestamp,
        turbine_id,
        wind_speed,
        temperature,
        power,
    })
}

/// Parses an ISO-8601 timestamp, or one in the given chrono format. Naive
/// timestamps are taken as UTC.
pub fn parse_timestamp(s: &str, format: Option<&str>) -> Option<DateTime<Utc>> {
    match format {
        Some(fmt) => DateTime::parse_from_str(s, fmt)
            .map(|t| t.with_timezone(&Utc))
            .ok()
            .or_else(|| {
                NaiveDateTime::parse_from_str(s, fmt)
                    .ok()
                    .map(|n| n.and_utc())
            }),
        None => DateTime::parse_from_rfc3339(s)
            .map(|t| t.with_timezone(&Utc))
            .ok()
            .or_else(|| {
                [
                    "%Y-%m-%dT%H:%M:%S%.f",
                    "%Y-%m-%d %H:%M:%S%.f",
                    "%Y-%m-%dT%H:%M",
                    "%Y-%m-%d %H:%M",
                ]
                .iter()
                .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
                .map(|n| n.and_utc())
            }),
    }
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Writes records in the default [`ColumnMap`] schema. Floats are written in
/// shortest round-trip form so re-loading is bit-exact.
pub fn write_scada_csv<W: Write>(series: &SeriesSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "timestamp",
        "turbine_id",
        "wind_speed",
        "temperature",
        "power",
    ])?;
    for r in series.turbines.values().flatten() {
        w.write_record([
            format_timestamp(&r.timestamp),
            r.turbine_id.clone(),
            r.wind_speed.to_string(),
            r.temperature.to_string(),
            r.power.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldRange {
    pub min: f64,
    pub max: f64,
}

impl FieldRange {
    fn over(values: impl Iterator<Item = f64>) -> Self {
        values.fold(
            FieldRange {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |acc, v| FieldRange {
                min: acc.min.min(v),
                max: acc.max.max(v),
            },
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurbineSummary {
    pub turbine_id: String,
    pub count: usize,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub span_secs: i64,
    pub wind: FieldRange,
    pub temperature: FieldRange,
    pub power: FieldRange,
}

/// Exact per-turbine counts, time span and field ranges.
pub fn summarize(series: &SeriesSet) -> Vec<TurbineSummary> {
    series
        .turbines
        .iter()
        .filter(|(_, list)| !list.is_empty())
        .map(|(id, list)| {
            let start = list[0].timestamp;
            let end = list[list.len() - 1].timestamp;
            TurbineSummary {
                turbine_id: id.clone(),
                count: list.len(),
                start,
                end,
                span_secs: (end - start).num_seconds(),
                wind: FieldRange::over(list.iter().map(|r| r.wind_speed)),
                temperature: FieldRange::over(list.iter().map(|r| r.temperature)),
                power: FieldRange::over(list.iter().map(|r| r.power)),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<(SeriesSet, LoadReport)> {
        load_scada_from_reader(text.as_bytes(), &ColumnMap::default())
    }

    #[test]
    fn semicolon_files_and_bom_are_accepted() {
        let text = "\u{feff}Turbine_ID;Timestamp;Amb_WindSpeed_Avg;Amb_Temp_Avg;Grd_Prod_Pwr_Avg\n\
                    T01;2016-01-01T00:00:00+00:00;5.5;12.1;300.0\n";
        let (set, _) = load_scada_from_reader(text.as_bytes(), &ColumnMap::edp()).unwrap();
        let r = &set.turbine("T01").unwrap()[0];
        assert_eq!(r.power, 300.0 * 1000.0 / 6.0);
        let forced = ColumnMap {
            delimiter: Some(','),
            ..ColumnMap::edp()
        };
        assert!(matches!(
            load_scada_from_reader(text.as_bytes(), &forced),
            Err(Error::MissingColumn(_))
        ));
    }

    #[test]
    fn drops_row_with_empty_power() {
        let csv = "timestamp,turbine_id,wind_speed,temperature,power\n\
                   2016-01-01T00:00:00Z,T1,5,10,1000\n\
                   2016-01-01T00:10:00Z,T1,6,10,\n\
                   2016-01-01T00:20:00Z,T1,7,10,3000\n\
                   2016-01-01T00:30:00Z,T1,8,10,4000\n";
        let (set, report) = load(csv).unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(report.dropped(), 1);
        assert_eq!(report.dropped_missing, 1);
    }

    #[test]
    fn shuffled_rows_come_back_sorted() {
        let csv = "timestamp,turbine_id,wind_speed,temperature,power\n\
                   2016-01-01T00:20:00Z,T1,7,10,3\n\
                   2016-01-01T00:00:00Z,T1,5,10,1\n\
                   2016-01-01T00:10:00Z,T1,6,10,2\n";
        let (set, _) = load(csv).unwrap();
        let powers: Vec<f64> = set.turbine("T1").unwrap().iter().map(|r| r.power).collect();
        assert_eq!(powers, vec![1.0, 2.0, 3.0]);
        assert_eq!(set.sampling_period_secs, 600);
    }

    #[test]
    fn duplicate_timestamps_keep_first() {
        let csv = "timestamp,turbine_id,wind_speed,temperature,power\n\
                   2016-01-01T00:00:00Z,T1,5,10,1\n\
                   2016-01-01T00:00:00Z,T1,6,10,2\n\
                   2016-01-01T00:00:00Z,T2,6,10,2\n";
        let (set, report) = load(csv).unwrap();
        assert_eq!(set.turbine("T1").unwrap()[0].power, 1.0);
        assert_eq!(set.turbine("T1").unwrap().len(), 1);
        assert_eq!(set.turbine("T2").unwrap().len(), 1);
        assert_eq!(report.dropped_duplicate, 1);
    }

    #[test]
    fn missing_column_and_empty_file_errors() {
        let err = load("timestamp,turbine_id,wind_speed,power\n").unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "temperature"));
        let err =
            load("timestamp,turbine_id,wind_speed,temperature,power\nx,T1,1,1,1\n").unwrap_err();
        assert!(matches!(err, Error::NoValidRows { .. }));
        let err = load_scada("/nonexistent/file.csv", &ColumnMap::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn negative_wind_and_garbage_are_dropped() {
        let csv = "timestamp,turbine_id,wind_speed,temperature,power\n\
                   2016-01-01T00:00:00Z,T1,-1,10,1\n\
                   2016-01-01T00:10:00Z,T1,abc,10,1\n\
                   2016-01-01T00:20:00Z,T1,NaN,10,1\n\
                   2016-01-01T00:30:00Z,T1,5,10,1\n";
        let (set, report) = load(csv).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(report.dropped_invalid, 1);
        assert_eq!(report.dropped_unparsable, 2);
    }

    #[test]
    fn constant_turbine_custom_format_and_scale() {
        let map = ColumnMap {
            timestamp: "time".into(),
            turbine: TurbineColumn::Constant("T11".into()),
            wind: "ws".into(),
            temperature: "t".into(),
            power: "kw".into(),
            power_scale: 1000.0 / 6.0,
            timestamp_format: Some("%d/%m/%Y %H:%M".into()),
            delimiter: None,
        };
        let csv = "time,ws,t,kw\n01/02/2017 10:20,6.5,12,600\n";
        let (set, _) = load_scada_from_reader(csv.as_bytes(), &map).unwrap();
        let r = &set.turbine("T11").unwrap()[0];
        assert_eq!(format_timestamp(&r.timestamp), "2017-02-01T10:20:00Z");
        assert!((r.power - 100_000.0).abs() < 1e-9);
    }

    #[test]
    fn iso_variants_parse() {
        for s in [
            "2016-01-01T00:10:00+00:00",
            "2016-01-01T00:10:00Z",
            "2016-01-01 00:10:00",
            "2016-01-01T00:10:00.000",
            "2016-01-01T01:10:00+01:00",
        ] {
            let t = parse_timestamp(s, None).unwrap_or_else(|| panic!("{s}"));
            assert_eq!(format_timestamp(&t), "2016-01-01T00:10:00Z");
        }
        assert!(parse_timestamp("yesterday", None).is_none());
    }

    #[test]
    fn summary_ranges_and_degenerate_span() {
        let csv = "timestamp,turbine_id,wind_speed,temperature,power\n\
                   2016-01-01T00:00:00Z,T1,2,10,1\n\
                   2016-01-01T00:10:00Z,T1,11,-3,2\n\
                   2016-01-01T00:20:00Z,T1,5,4,3\n\
                   2016-01-01T00:20:00Z,T2,5,4,3\n";
        let (set, _) = load(csv).unwrap();
        let s = summarize(&set);
        assert_eq!(
            s[0].wind,
            FieldRange {
                min: 2.0,
                max: 11.0
            }
        );
        assert_eq!(
            s[0].temperature,
            FieldRange {
                min: -3.0,
                max: 10.0
            }
        );
        assert_eq!(s[0].count, 3);
        assert_eq!(s[0].span_secs, 1200);
        assert_eq!(s[1].span_secs, 0);
    }

    #[test]
    fn write_then_load_is_exact() {
        let csv = "timestamp,turbine_id,wind_speed,temperature,power\n\
                   2016-01-01T00:00:00Z,T1,5.123456789012345,10.1,1000.000000001\n\
                   2016-01-01T00:10:00Z,T1,0.1,-0.3,3e-7\n";
        let (set, _) = load(csv).unwrap();
        let mut buf = Vec::new();
        write_scada_csv(&set, &mut buf).unwrap();
        let (again, _) = load_scada_from_reader(buf.as_slice(), &ColumnMap::default()).unwrap();
        assert_eq!(set, again);
    }
}
