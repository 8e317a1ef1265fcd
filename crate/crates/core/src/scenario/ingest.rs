//! Reading load, solar and price traces.
//!
//! Schemas (CSV with a header row, ISO-8601 timestamps, uniform spacing):
//!
//! * load: `timestamp,device_id,kwh`
//! * solar: `timestamp,kwh`
//! * prices: `timestamp,usd_per_kwh`
//!
//! Row numbers in errors are file line numbers, the header being line 1.

use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, Timelike};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    pub timestamps: Vec<NaiveDateTime>,
    /// Device ids in order of first appearance.
    pub devices: Vec<String>,
    /// Energy per device and interval, kWh, indexed `[device][interval]`.
    pub load: Vec<Vec<f64>>,
    /// DER output per interval, kWh.
    pub solar: Vec<f64>,
    /// Wholesale price per interval, $/kWh.
    pub prices: Vec<f64>,
    /// Interval length, minutes.
    pub step_minutes: i64,
}

/// Traces aggregated to net-billing periods.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSeries {
    pub starts: Vec<NaiveDateTime>,
    pub devices: Vec<String>,
    pub load: Vec<Vec<f64>>,
    pub solar: Vec<f64>,
    pub prices: Vec<f64>,
}

impl PeriodSeries {
    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    /// Hour of day at the start of period `t`.
    pub fn hour(&self, t: usize) -> usize {
        self.starts[t].hour() as usize
    }
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    s.parse::<NaiveDateTime>()
        .ok()
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").ok())
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M").ok())
        .or_else(|| DateTime::parse_from_rfc3339(s).ok().map(|d| d.naive_utc()))
}

struct Row {
    line: usize,
    fields: csv::StringRecord,
}

fn read_rows(path: &Path, columns: &[&str]) -> Result<(Vec<usize>, Vec<Row>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let schema = |row: usize, message: String| Error::Schema {
        file: path.to_path_buf(),
        row,
        message,
    };
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => return Err(schema(1, e.to_string())),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyTrace(path.to_path_buf()));
    }
    let index = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| schema(1, format!("missing column {c:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            schema(line, e.to_string())
        })?;
        let line = record.position().map_or(rows.len() + 2, |p| p.line() as usize);
        rows.push(Row { line, fields: record });
    }
    if rows.is_empty() {
        return Err(Error::EmptyTrace(path.to_path_buf()));
    }
    Ok((index, rows))
}

fn field<'r>(path: &Path, row: &'r Row, col: usize, name: &str) -> Result<&'r str> {
    row.fields.get(col).ok_or_else(|| Error::Schema {
        file: path.to_path_buf(),
        row: row.line,
        message: format!("missing value for {name:?}"),
    })
}

fn timestamp(path: &Path, row: &Row, col: usize) -> Result<NaiveDateTime> {
    let raw = field(path, row, col, "timestamp")?;
    parse_timestamp(raw).ok_or_else(|| Error::Schema {
        file: path.to_path_buf(),
        row: row.line,
        message: format!("unparsable timestamp {raw:?}"),
    })
}

fn number(path: &Path, row: &Row, col: usize, name: &str, nonnegative: bool) -> Result<f64> {
    let raw = field(path, row, col, name)?;
    let err = |message: String| Error::Schema {
        file: path.to_path_buf(),
        row: row.line,
        message,
    };
    let v: f64 = raw.parse().map_err(|_| err(format!("{name} {raw:?} is not a number")))?;
    if !v.is_finite() {
        return Err(err(format!("{name} {raw:?} is not finite")));
    }
    if nonnegative && v < 0.0 {
        return Err(err(format!("negative {name} {v}")));
    }
    Ok(v)
}

fn check_spacing(path: &Path, timestamps: &[NaiveDateTime]) -> Result<i64> {
    let align = |message: String| Error::Alignment {
        file: path.to_path_buf(),
        message,
    };
    if timestamps.len() < 2 {
        return Err(align("need at least two intervals to infer spacing".into()));
    }
    let step = (timestamps[1] - timestamps[0]).num_seconds();
    if step <= 0 || step % 60 != 0 {
        return Err(align(format!("invalid spacing of {step} s at {}", timestamps[0])));
    }
    for w in timestamps.windows(2) {
        let gap = (w[1] - w[0]).num_seconds();
        if gap != step {
            return Err(align(format!(
                "spacing changes from {step} s to {gap} s between {} and {}",
                w[0], w[1]
            )));
        }
    }
    Ok(step / 60)
}

/// Reads a `timestamp,<column>` series.
pub fn read_series(path: &Path, column: &str, nonnegative: bool) -> Result<(Vec<NaiveDateTime>, Vec<f64>)> {
    let (idx, rows) = read_rows(path, &["timestamp", column])?;
    let mut ts = Vec::with_capacity(rows.len());
    let mut vals = Vec::with_capacity(rows.len());
    for row in &rows {
        ts.push(timestamp(path, row, idx[0])?);
        vals.push(number(path, row, idx[1], column, nonnegative)?);
    }
    Ok((ts, vals))
}

/// Timestamps, device ids and `[device][interval]` energies.
pub type LoadTable = (Vec<NaiveDateTime>, Vec<String>, Vec<Vec<f64>>);

/// Reads a long-format `timestamp,device_id,kwh` load trace.
pub fn read_load(path: &Path) -> Result<LoadTable> {
    let (idx, rows) = read_rows(path, &["timestamp", "device_id", "kwh"])?;
    let mut timestamps: Vec<NaiveDateTime> = Vec::new();
    let mut devices: Vec<String> = Vec::new();
    let mut load: Vec<Vec<f64>> = Vec::new();
    let align = |message: String| Error::Alignment {
        file: path.to_path_buf(),
        message,
    };
    for row in &rows {
        let t = timestamp(path, row, idx[0])?;
        let id = field(path, row, idx[1], "device_id")?.to_string();
        let kwh = number(path, row, idx[2], "kwh", true)?;
        if timestamps.last() != Some(&t) {
            if let Some(&prev) = timestamps.last() {
                if t < prev {
                    return Err(align(format!("line {}: timestamp {t} is out of order", row.line)));
                }
                if let Some(d) = load.iter().position(|l| l.len() < timestamps.len()) {
                    return Err(align(format!("device {:?} has no reading at {prev}", devices[d])));
                }
            }
            timestamps.push(t);
        }
        let k = timestamps.len() - 1;
        let d = match devices.iter().position(|x| *x == id) {
            Some(d) => d,
            None if k == 0 => {
                devices.push(id.clone());
                load.push(Vec::new());
                devices.len() - 1
            }
            None => return Err(align(format!("line {}: device {id:?} first appears after {}", row.line, timestamps[0]))),
        };
        if load[d].len() != k {
            return Err(align(format!("line {}: duplicate reading for device {id:?} at {t}", row.line)));
        }
        load[d].push(kwh);
    }
    if let Some(d) = load.iter().position(|l| l.len() != timestamps.len()) {
        return Err(align(format!("device {:?} has no reading at {}", devices[d], timestamps[timestamps.len() - 1])));
    }
    Ok((timestamps, devices, load))
}

fn same_clock(path: &Path, reference: &[NaiveDateTime], other: &[NaiveDateTime]) -> Result<()> {
    if reference.len() != other.len() {
        return Err(Error::Alignment {
            file: path.to_path_buf(),
            message: format!("{} intervals, load trace has {}", other.len(), reference.len()),
        });
    }
    if let Some(i) = reference.iter().zip(other).position(|(a, b)| a != b) {
        return Err(Error::Alignment {
            file: path.to_path_buf(),
            message: format!("timestamp {} does not match load trace timestamp {}", other[i], reference[i]),
        });
    }
    Ok(())
}

/// Reads and aligns the three traces.
pub fn ingest_traces(load: &Path, solar: &Path, prices: &Path) -> Result<Traces> {
    let (timestamps, devices, load_kwh) = read_load(load)?;
    let step_minutes = check_spacing(load, &timestamps)?;
    let (solar_ts, solar_kwh) = read_series(solar, "kwh", true)?;
    same_clock(solar, &timestamps, &solar_ts)?;
    let (price_ts, price) = read_series(prices, "usd_per_kwh", false)?;
    same_clock(prices, &timestamps, &price_ts)?;
    Ok(Traces {
        timestamps,
        devices,
        load: load_kwh,
        solar: solar_kwh,
        prices: price,
        step_minutes,
    })
}

impl Traces {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Sums energies and averages prices over net-billing periods of
    /// `minutes`; a trailing partial period is dropped.
    pub fn aggregate(&self, minutes: u32, source: &Path) -> Result<PeriodSeries> {
        let minutes = minutes as i64;
        if minutes % self.step_minutes != 0 {
            return Err(Error::Alignment {
                file: PathBuf::from(source),
                message: format!(
                    "net-billing period of {minutes} min is not a multiple of the {} min trace spacing",
                    self.step_minutes
                ),
            });
        }
        let per = (minutes / self.step_minutes) as usize;
        let n = self.len() / per;
        if n == 0 {
            return Err(Error::EmptyTrace(PathBuf::from(source)));
        }
        let chunk_sum = |v: &[f64]| -> Vec<f64> { v.chunks_exact(per).map(|c| c.iter().sum()).collect() };
        Ok(PeriodSeries {
            starts: self.timestamps.iter().step_by(per).take(n).copied().collect(),
            devices: self.devices.clone(),
            load: self.load.iter().map(|l| chunk_sum(l)).collect(),
            solar: chunk_sum(&self.solar),
            prices: chunk_sum(&self.prices).into_iter().map(|p| p / per as f64).collect(),
        })
    }
}
