//! Turning aggregated traces into calibrated devices and a scenario set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{default_elasticity, Config, DeviceConfig, Expectation};
use super::ingest::PeriodSeries;
use crate::device::{calibrate_kind, CalibrationInput, DeviceKind, DeviceModel};
use crate::error::{Error, Result};
use crate::scenario_set::{DerSample, PeriodClass, ScenarioSet};

/// Devices to model, in trace order, with their configured elasticities.
pub fn device_configs(config: &Config, series: &PeriodSeries) -> Result<Vec<(usize, DeviceConfig)>> {
    if config.devices.is_empty() {
        return Ok(series
            .devices
            .iter()
            .enumerate()
            .map(|(i, id)| {
                (
                    i,
                    DeviceConfig {
                        id: id.clone(),
                        kind: DeviceKind::Other,
                        elasticity: default_elasticity(),
                    },
                )
            })
            .collect());
    }
    config
        .devices
        .iter()
        .map(|d| {
            series
                .devices
                .iter()
                .position(|id| *id == d.id)
                .map(|i| (i, d.clone()))
                .ok_or_else(|| Error::Config(format!("device {:?} is not in the load trace", d.id)))
        })
        .collect()
}

fn calibrated(devices: &[(usize, DeviceConfig)], price: f64, baseline: impl Fn(usize) -> f64, label: &str) -> Result<Vec<DeviceModel>> {
    devices
        .iter()
        .map(|(i, d)| {
            let input = CalibrationInput {
                price,
                demand: baseline(*i),
                elasticity: d.elasticity,
            };
            calibrate_kind(&input, d.kind).map_err(|e| Error::Calibration(format!("device {:?} at {label}: {e}", d.id)))
        })
        .collect()
}

/// Period indices grouped by hour of day.
pub fn hour_groups(series: &PeriodSeries) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); 24];
    for t in 0..series.len() {
        groups[series.hour(t)].push(t);
    }
    groups
}

/// Mean wholesale price by hour of day; hours absent from the trace get the
/// overall mean.
pub fn hourly_mean_price(series: &PeriodSeries) -> Vec<f64> {
    let overall = series.prices.iter().sum::<f64>() / series.len() as f64;
    hour_groups(series)
        .iter()
        .map(|g| {
            if g.is_empty() {
                overall
            } else {
                g.iter().map(|&t| series.prices[t]).sum::<f64>() / g.len() as f64
            }
        })
        .collect()
}

pub fn build_scenario_set(config: &Config, series: &PeriodSeries, seed: u64) -> Result<ScenarioSet> {
    if series.is_empty() {
        return Err(Error::Input("no net-billing periods".into()));
    }
    let devices = device_configs(config, series)?;
    let price = config.calibration.historical_price;
    let periods = config.scenario.periods_per_year;
    let n = series.len() as f64;
    let classes = match config.scenario.expectation {
        Expectation::HourOfDay => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = config.scenario.samples;
            let mut classes = Vec::new();
            for (hour, group) in hour_groups(series).into_iter().enumerate() {
                if group.is_empty() {
                    continue;
                }
                let baseline = |i: usize| group.iter().map(|&t| series.load[i][t]).sum::<f64>() / group.len() as f64;
                let models = calibrated(&devices, price, baseline, &format!("hour {hour}"))?;
                let samples = (0..k)
                    .map(|_| {
                        let t = group[rng.gen_range(0..group.len())];
                        DerSample {
                            der: series.solar[t],
                            wholesale: series.prices[t],
                        }
                    })
                    .collect();
                classes.push(PeriodClass {
                    weight: periods * group.len() as f64 / n,
                    schedule_index: hour,
                    devices: models,
                    samples,
                });
            }
            classes
        }
        Expectation::Chronological => (0..series.len())
            .map(|t| {
                let models = calibrated(&devices, price, |i| series.load[i][t], &series.starts[t].to_string())?;
                Ok(PeriodClass {
                    weight: periods / n,
                    schedule_index: series.hour(t),
                    devices: models,
                    samples: vec![DerSample {
                        der: series.solar[t],
                        wholesale: series.prices[t],
                    }],
                })
            })
            .collect::<Result<Vec<_>>>()?,
    };
    ScenarioSet::new(classes)
}
