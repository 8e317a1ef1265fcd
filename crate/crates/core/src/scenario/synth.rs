//! Deterministic synthetic traces with the ingestion schemas: a summer
//! season of household load (HVAC, EV, other), rooftop solar and
//! wholesale prices.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthOptions {
    pub start: NaiveDateTime,
    pub days: u32,
    pub step_minutes: u32,
    /// DC rating of the solar system, kW.
    pub system_kw: f64,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            start: NaiveDate::from_ymd_opt(2019, 6, 1)
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .expect("valid date"),
            days: 90,
            step_minutes: 15,
            system_kw: 5.0,
            seed: 2019,
        }
    }
}

pub const DEVICE_IDS: [&str; 3] = ["hvac", "ev", "other"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTraces {
    pub timestamps: Vec<NaiveDateTime>,
    /// kWh per interval, indexed like [`DEVICE_IDS`].
    pub load: [Vec<f64>; 3],
    pub solar: Vec<f64>,
    pub prices: Vec<f64>,
}

/// Bump centred at `centre` hours with half-width `width`, wrapping at midnight.
fn bump(hour: f64, centre: f64, width: f64) -> f64 {
    let mut d = (hour - centre).abs();
    d = d.min(24.0 - d);
    if d >= width {
        0.0
    } else {
        0.5 * (1.0 + (PI * d / width).cos())
    }
}

fn clear_sky(hour: f64) -> f64 {
    let (rise, set) = (6.0, 20.0);
    if hour <= rise || hour >= set {
        0.0
    } else {
        (PI * (hour - rise) / (set - rise)).sin().powf(1.3)
    }
}

pub fn generate(opts: &SynthOptions) -> SynthTraces {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let per_day = (24 * 60 / opts.step_minutes) as usize;
    let h = opts.step_minutes as f64 / 60.0;
    let n = per_day * opts.days as usize;
    let mut out = SynthTraces {
        timestamps: Vec::with_capacity(n),
        load: [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)],
        solar: Vec::with_capacity(n),
        prices: Vec::with_capacity(n),
    };
    for day in 0..opts.days {
        let sky: f64 = if rng.gen_bool(0.12) {
            rng.gen_range(0.35..0.75)
        } else {
            rng.gen_range(0.85..1.0)
        };
        let heat: f64 = rng.gen_range(0.6..1.4);
        let ev_trip: f64 = if rng.gen_bool(0.8) { rng.gen_range(0.7..1.3) } else { 0.15 };
        let ev_start: f64 = rng.gen_range(18.5..21.0);
        let price_level: f64 = rng.gen_range(0.85..1.2) * (0.9 + 0.2 * heat / 1.4);
        for k in 0..per_day {
            let hour = (k as f64 + 0.5) * h;
            out.timestamps.push(opts.start + Duration::minutes((day as i64 * per_day as i64 + k as i64) * opts.step_minutes as i64));

            let cloud = (sky * rng.gen_range(0.9f64..1.05)).min(1.0);
            out.solar.push(opts.system_kw * 0.86 * clear_sky(hour) * cloud * h);

            let hvac_kw = 0.12 + heat * (1.35 * bump(hour, 18.0, 6.0) + 0.25 * bump(hour, 22.0, 4.0));
            let ev_kw = 0.05 + ev_trip * 3.3 * bump(hour, ev_start + 1.0, 2.2);
            let other_kw = 0.2 + 0.35 * bump(hour, 7.5, 2.5) + 0.55 * bump(hour, 19.5, 3.5) + 0.1 * bump(hour, 13.0, 5.0);
            let noise = |rng: &mut ChaCha8Rng| rng.gen_range(0.9..1.1);
            out.load[0].push(hvac_kw * noise(&mut rng) * h);
            out.load[1].push(ev_kw * noise(&mut rng) * h);
            out.load[2].push(other_kw * noise(&mut rng) * h);

            let lmp = 0.031 + 0.042 * bump(hour, 19.0, 3.5) - 0.01 * bump(hour, 12.5, 4.0) + 0.006 * bump(hour, 7.5, 2.0);
            out.prices.push((lmp * price_level * rng.gen_range(0.95..1.05) * 1e5).round() / 1e5);
        }
    }
    for v in out.load.iter_mut().chain([&mut out.solar]) {
        for x in v.iter_mut() {
            *x = (*x * 1e6).round() / 1e6;
        }
    }
    out
}

fn stamp(t: &NaiveDateTime) -> String {
    t.format("%Y-%m-%dT%H:%M:%S").to_string()
}

/// Writes `load.csv`, `solar.csv` and `prices.csv` into `dir`.
pub fn write_bundle(dir: &Path, opts: &SynthOptions) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let tr = generate(opts);
    let mut load = String::from("timestamp,device_id,kwh\n");
    let mut solar = String::from("timestamp,kwh\n");
    let mut prices = String::from("timestamp,usd_per_kwh\n");
    for (i, t) in tr.timestamps.iter().enumerate() {
        let ts = stamp(t);
        for (d, id) in DEVICE_IDS.iter().enumerate() {
            writeln!(load, "{ts},{id},{:.6}", tr.load[d][i]).expect("write to string");
        }
        writeln!(solar, "{ts},{:.6}", tr.solar[i]).expect("write to string");
        writeln!(prices, "{ts},{:.5}", tr.prices[i]).expect("write to string");
    }
    let mut paths = Vec::new();
    for (name, text) in [("load.csv", load), ("solar.csv", solar), ("prices.csv", prices)] {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        paths.push(p);
    }
    Ok(paths)
}
