//! Result tables and run manifests.
//!
//! Money is written with 2 decimals, rates ($/kWh) and fractions with 4,
//! percentages with 2. Infeasible (death-spiral) entries are `--`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::runner::{PaybackRow, ScenarioResult, SweepResult, YearMetrics};
use crate::adoption::Payback;
use crate::error::{Error, Result};

pub const MISSING: &str = "--";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    JsonLines,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonLines => "jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64, usize),
    Int(i64),
    Text(String),
    Bool(bool),
    Missing,
}

impl Cell {
    pub fn money(v: f64) -> Cell {
        Cell::Num(v, 2)
    }

    pub fn rate(v: f64) -> Cell {
        Cell::Num(v, 4)
    }

    pub fn fraction(v: f64) -> Cell {
        Cell::Num(v, 4)
    }

    pub fn percent(v: Option<f64>) -> Cell {
        v.map_or(Cell::Missing, |v| Cell::Num(v, 2))
    }

    pub fn payback(p: Payback) -> Cell {
        match p {
            Payback::Years(y) => Cell::Int(y as i64),
            Payback::Infinite => Cell::Text("inf".into()),
        }
    }

    pub fn text(&self) -> String {
        match self {
            Cell::Num(v, d) => fixed(*v, *d),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => MISSING.into(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v, d) => {
                let s = fixed(*v, *d);
                s.parse::<f64>()
                    .ok()
                    .and_then(serde_json::Number::from_f64)
                    .map_or(Value::String(s), Value::Number)
            }
            Cell::Int(i) => Value::from(*i),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Missing => Value::String(MISSING.into()),
        }
    }
}

/// Fixed-point formatting without negative zero.
fn fixed(v: f64, decimals: usize) -> String {
    if !v.is_finite() {
        return MISSING.into();
    }
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| Error::Input(format!("csv encoding: {e}"));
                w.write_record(&self.columns).map_err(io)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::text)).map_err(io)?;
                }
                let bytes = w.into_inner().map_err(|e| Error::Input(format!("csv encoding: {e}")))?;
                Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
            }
            Format::JsonLines => {
                let mut out = String::new();
                for row in &self.rows {
                    let obj: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                    writeln!(out, "{}", Value::Object(obj)).expect("write to string");
                }
                Ok(out)
            }
        }
    }

    pub fn write(&self, dir: &Path, stem: &str, format: Format) -> Result<PathBuf> {
        let path = dir.join(format!("{stem}.{}", format.extension()));
        fs::write(&path, self.render(format)?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn metric_cells(m: Option<&YearMetrics>) -> Vec<Cell> {
    match m {
        None => vec![Cell::Missing; 15],
        Some(m) => vec![
            Cell::rate(m.retail),
            Cell::rate(m.export),
            Cell::money(m.fixed_monthly),
            Cell::money(m.prosumer_charge_monthly),
            Cell::money(m.welfare),
            Cell::money(m.customer_surplus),
            Cell::money(m.consumer_surplus),
            Cell::money(m.adopter_surplus),
            Cell::money(m.environmental),
            Cell::money(m.utility_surplus),
            Cell::money(m.cost_shift),
            Cell::money(m.cost_shift_monthly()),
            Cell::money(m.annual_savings),
            Cell::payback(m.payback),
            Cell::fraction(m.potential),
        ],
    }
}

/// One row per policy and year.
pub fn long_run_table(results: &[ScenarioResult]) -> Table {
    let mut t = Table::new([
        "policy",
        "year",
        "fixed_cost",
        "install_cost_per_kw",
        "gamma_prev",
        "gamma",
        "feasible",
        "retail",
        "export",
        "fixed_monthly",
        "prosumer_charge_monthly",
        "welfare",
        "customer_surplus",
        "consumer_surplus",
        "adopter_surplus",
        "environmental",
        "utility_surplus",
        "cost_shift",
        "cost_shift_monthly",
        "annual_savings",
        "payback_years",
        "market_potential",
    ]);
    for r in results {
        for rec in &r.records {
            let mut row = vec![
                Cell::Text(r.policy.clone()),
                Cell::Int(rec.year as i64),
                Cell::money(rec.theta),
                Cell::money(rec.xi),
                Cell::fraction(rec.gamma_prev),
                Cell::fraction(rec.gamma),
                Cell::Bool(rec.feasible),
            ];
            row.extend(metric_cells(rec.metrics.as_ref()));
            t.push(row);
        }
    }
    t
}

/// Policy-by-year table of one per-year quantity.
fn by_year(results: &[ScenarioResult], value: impl Fn(&YearMetrics, f64) -> Cell) -> Table {
    let years = results
        .iter()
        .flat_map(|r| r.records.iter().map(|x| x.year))
        .max()
        .unwrap_or(0);
    let mut t = Table::new(std::iter::once("policy".to_string()).chain((1..=years).map(|y| format!("year_{y}"))));
    for r in results {
        let mut row = vec![Cell::Text(r.policy.clone())];
        for y in 1..=years {
            let rec = r.records.iter().find(|x| x.year == y);
            row.push(match rec.and_then(|x| x.metrics.as_ref().map(|m| (m, x.gamma))) {
                Some((m, gamma)) => value(m, gamma),
                None => Cell::Missing,
            });
        }
        t.push(row);
    }
    t
}

/// Cost-shifts in $/customer/month, policy by year.
pub fn cost_shift_table(results: &[ScenarioResult]) -> Table {
    by_year(results, |m, _| Cell::money(m.cost_shift_monthly()))
}

/// Adoption fraction, policy by year.
pub fn adoption_table(results: &[ScenarioResult]) -> Table {
    by_year(results, |_, gamma| Cell::fraction(gamma))
}

pub fn sweep_table(sweep: &SweepResult) -> Table {
    let mut t = Table::new([
        "policy",
        "gamma",
        "retail",
        "welfare",
        "welfare_pct",
        "retail_pct",
        "prosumer_pct",
        "consumer_pct",
        "cost_shift_monthly",
        "payback_years",
        "market_potential",
    ]);
    for c in &sweep.cells {
        let mut row = vec![Cell::Text(c.policy.clone()), Cell::fraction(c.gamma)];
        match &c.metrics {
            None => row.extend(vec![Cell::Missing; 9]),
            Some(m) => row.extend([
                Cell::rate(m.retail),
                Cell::money(m.welfare),
                Cell::percent(m.welfare_pct),
                Cell::percent(m.retail_pct),
                Cell::percent(m.prosumer_pct),
                Cell::percent(m.consumer_pct),
                Cell::money(m.cost_shift / 12.0),
                Cell::payback(m.payback),
                Cell::fraction(m.potential),
            ]),
        }
        t.push(row);
    }
    t
}

/// Market potential, policy by adoption level.
pub fn market_potential_table(sweep: &SweepResult) -> Table {
    let mut t = Table::new(std::iter::once("policy".to_string()).chain(sweep.gammas.iter().map(|g| format!("gamma_{g:.2}"))));
    for p in &sweep.policies {
        let mut row = vec![Cell::Text(p.clone())];
        for c in sweep.row(p).unwrap_or_default() {
            row.push(c.metrics.as_ref().map_or(Cell::Missing, |m| Cell::fraction(m.potential)));
        }
        t.push(row);
    }
    t
}

pub fn payback_report(rows: &[PaybackRow]) -> Table {
    let mut t = Table::new(["policy", "gamma", "retail", "annual_savings", "payback_years", "market_potential"]);
    for r in rows {
        let mut row = vec![Cell::Text(r.policy.clone()), Cell::fraction(r.gamma)];
        match (r.retail, &r.outlook) {
            (Some(p), Some(o)) => row.extend([
                Cell::rate(p),
                Cell::money(o.annual_savings),
                Cell::payback(o.payback),
                Cell::fraction(o.potential),
            ]),
            _ => row.extend(vec![Cell::Missing; 4]),
        }
        t.push(row);
    }
    t
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").expect("write to string");
        s
    })
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub inputs: Vec<OutputFile>,
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: &Path, inputs: &[&Path], outputs: &[PathBuf]) -> Result<Self> {
        let describe = |p: &Path| -> Result<OutputFile> {
            Ok(OutputFile {
                name: p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()),
                sha256: sha256_file(p)?,
            })
        };
        Ok(Manifest {
            tool: "netmeter".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config_sha256: sha256_file(config)?,
            inputs: inputs.iter().map(|p| describe(p)).collect::<Result<_>>()?,
            outputs: outputs.iter().map(|p| describe(p)).collect::<Result<_>>()?,
        })
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self).map_err(|e| Error::Input(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(fixed(-0.0001, 2), "0.00");
        assert_eq!(fixed(1.005, 2), "1.00");
        assert_eq!(fixed(0.23456, 4), "0.2346");
        assert_eq!(Cell::Missing.text(), "--");
        assert_eq!(Cell::payback(Payback::Infinite).text(), "inf");
    }

    #[test]
    fn renders_both_formats() {
        let mut t = Table::new(["policy", "value"]);
        t.push(vec![Cell::Text("NEM 1.0".into()), Cell::money(3.13702)]);
        t.push(vec![Cell::Text("FiT, SMC".into()), Cell::Missing]);
        assert_eq!(t.render(Format::Csv).unwrap(), "policy,value\nNEM 1.0,3.14\n\"FiT, SMC\",--\n");
        assert_eq!(
            t.render(Format::JsonLines).unwrap(),
            "{\"policy\":\"NEM 1.0\",\"value\":3.14}\n{\"policy\":\"FiT, SMC\",\"value\":\"--\"}\n"
        );
    }

    #[test]
    fn sha_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
