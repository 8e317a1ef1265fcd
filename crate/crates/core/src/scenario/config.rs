//! Scenario configuration files (TOML).

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adoption::AdoptionParams;
use crate::device::DeviceKind;
use crate::error::{Error, Result};
use crate::rules::{presets, PolicyRule, TouShape};
use crate::scenario_set::CostModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Seed for scenario resampling.
    #[serde(default)]
    pub seed: u64,
    pub traces: TraceConfig,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    pub calibration: CalibrationConfig,
    /// Devices to model; empty means every device in the load trace.
    #[serde(default)]
    pub devices: Vec<DeviceConfig>,
    #[serde(default)]
    pub economics: Economics,
    #[serde(default)]
    pub adoption: AdoptionConfig,
    #[serde(default)]
    pub long_run: LongRunConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub tou: TouShape,
    /// Avoided-cost export rate by hour of day, $/kWh.
    #[serde(default)]
    pub avoided_cost: Vec<f64>,
    /// Policy definitions; empty means the built-in presets.
    #[serde(default)]
    pub policies: Vec<PolicyRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub load: PathBuf,
    pub solar: PathBuf,
    pub prices: PathBuf,
    /// Length of a net-billing period.
    #[serde(default = "default_net_billing_minutes")]
    pub net_billing_minutes: u32,
}

fn default_net_billing_minutes() -> u32 {
    60
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    /// One class per hour of day with bootstrap-resampled days.
    #[default]
    HourOfDay,
    /// One class per trace period, replayed cyclically over the year.
    Chronological,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Net-billing periods per rate-setting period.
    pub periods_per_year: f64,
    /// Bootstrap samples per class.
    pub samples: usize,
    pub expectation: Expectation,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            periods_per_year: 8760.0,
            samples: 200,
            expectation: Expectation::HourOfDay,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationConfig {
    /// Flat retail price the load traces were observed under, $/kWh.
    pub historical_price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub id: String,
    #[serde(default)]
    pub kind: DeviceKind,
    #[serde(default = "default_elasticity")]
    pub elasticity: f64,
}

pub fn default_elasticity() -> f64 {
    -0.3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Economics {
    /// Utility fixed cost in year 0, $/customer/day.
    pub fixed_cost_per_day: f64,
    /// Non-market adder on the wholesale price giving the social marginal cost, $/kWh.
    pub smc_adder: f64,
    /// Environmental value of DER output, $/kWh.
    pub environmental_price: f64,
    /// DER system size per adopter, kW.
    pub system_kw: f64,
    /// Installation cost in year 0, $/kW.
    pub install_cost_per_kw: f64,
    pub cost_model: CostModel,
    /// Search interval for the break-even retail rate, $/kWh.
    pub retail_bracket: [f64; 2],
}

impl Default for Economics {
    fn default() -> Self {
        Economics {
            fixed_cost_per_day: 2.86,
            smc_adder: 0.03,
            environmental_price: 0.035,
            system_kw: 5.0,
            install_cost_per_kw: 4500.0,
            cost_model: CostModel::Wholesale,
            retail_bracket: [0.0, 1.5],
        }
    }
}

impl Economics {
    /// Fixed cost per rate-setting period (one year).
    pub fn fixed_cost(&self) -> f64 {
        self.fixed_cost_per_day * 365.0
    }

    /// Installed cost of one DER system.
    pub fn system_cost(&self) -> f64 {
        self.install_cost_per_kw * self.system_kw
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdoptionConfig {
    /// Adoption fraction in year 0.
    pub initial: f64,
    pub market_size: f64,
    pub payback_sensitivity: f64,
    pub innovation: f64,
    pub imitation: f64,
    pub degradation: f64,
    pub interest: f64,
    pub horizon_years: u32,
}

impl Default for AdoptionConfig {
    fn default() -> Self {
        AdoptionConfig {
            initial: 0.02,
            market_size: 0.5,
            payback_sensitivity: -0.1,
            innovation: 0.03,
            imitation: 0.38,
            degradation: 0.005,
            interest: 0.02,
            horizon_years: 25,
        }
    }
}

impl AdoptionConfig {
    pub fn params(&self) -> AdoptionParams {
        AdoptionParams {
            market_size: self.market_size,
            payback_sensitivity: self.payback_sensitivity,
            innovation: self.innovation,
            imitation: self.imitation,
            degradation: self.degradation,
            interest: self.interest,
            horizon_years: self.horizon_years,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LongRunConfig {
    pub years: u32,
    /// Annual decline of the installation cost.
    pub install_cost_decay: f64,
    /// Annual growth of the utility fixed cost.
    pub fixed_cost_growth: f64,
    /// Policies to run; empty means all.
    pub policies: Vec<String>,
}

impl Default for LongRunConfig {
    fn default() -> Self {
        LongRunConfig {
            years: 25,
            install_cost_decay: 0.035,
            fixed_cost_growth: 0.026,
            policies: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
    pub policies: Vec<String>,
    /// Overrides the year-0 fixed cost, $/customer/day.
    pub fixed_cost_per_day: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            gammas: vec![0.0, 0.1, 0.2, 0.3, 0.35, 0.4, 0.45, 0.5, 0.6],
            policies: Vec::new(),
            fixed_cost_per_day: None,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file and resolves trace paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.traces.load, &mut config.traces.solar, &mut config.traces.prices] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    /// Configured policies, or the presets when none are given.
    pub fn policy_rules(&self) -> Vec<PolicyRule> {
        if self.policies.is_empty() {
            presets()
        } else {
            self.policies.clone()
        }
    }

    /// Policies named in `names` in that order, or all of them.
    pub fn select_policies(&self, names: &[String]) -> Result<Vec<PolicyRule>> {
        let all = self.policy_rules();
        if names.is_empty() {
            return Ok(all);
        }
        names
            .iter()
            .map(|n| {
                all.iter()
                    .find(|p| &p.name == n)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("unknown policy {n:?}")))
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.traces.net_billing_minutes == 0 {
            return bad("net_billing_minutes must be positive".into());
        }
        if !(self.scenario.periods_per_year > 0.0) || self.scenario.samples == 0 {
            return bad("scenario needs positive periods_per_year and samples".into());
        }
        if !(self.calibration.historical_price > 0.0) {
            return bad("historical_price must be positive".into());
        }
        let mut ids = HashSet::new();
        for d in &self.devices {
            if !ids.insert(&d.id) {
                return bad(format!("device {:?} listed twice", d.id));
            }
            if !(d.elasticity < 0.0) {
                return bad(format!("device {:?}: elasticity must be negative", d.id));
            }
        }
        let e = &self.economics;
        if !(e.fixed_cost_per_day >= 0.0 && e.smc_adder >= 0.0 && e.environmental_price >= 0.0) {
            return bad("fixed cost, SMC adder and environmental price must be nonnegative".into());
        }
        if !(e.system_kw > 0.0 && e.install_cost_per_kw > 0.0) {
            return bad("system size and installation cost must be positive".into());
        }
        let [lo, hi] = e.retail_bracket;
        if !(lo >= 0.0 && hi > lo) {
            return bad(format!("retail bracket [{lo}, {hi}] is empty"));
        }
        let a = &self.adoption;
        if !(0.0..=1.0).contains(&a.initial) {
            return bad(format!("initial adoption {} outside [0, 1]", a.initial));
        }
        a.params().validate().map_err(|e| Error::Config(e.to_string()))?;
        let lr = &self.long_run;
        if !(0.0..1.0).contains(&lr.install_cost_decay) || lr.fixed_cost_growth <= -1.0 {
            return bad("long-run growth rates out of range".into());
        }
        if let Some(g) = self.sweep.gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return bad(format!("sweep adoption level {g} outside [0, 1]"));
        }
        if !self.avoided_cost.is_empty() && self.avoided_cost.len() != 24 {
            return bad(format!("avoided_cost needs 24 hourly values, got {}", self.avoided_cost.len()));
        }
        if self.avoided_cost.iter().any(|v| !(*v >= 0.0)) {
            return bad("avoided_cost values must be nonnegative".into());
        }
        let t = &self.tou;
        if !(t.peak_ratio >= 1.0) || t.peak_start >= t.peak_end || t.peak_end > 24 {
            return bad("invalid time-of-use shape".into());
        }
        let rules = self.policy_rules();
        let mut names = HashSet::new();
        for r in &rules {
            r.validate()?;
            if !names.insert(r.name.as_str()) {
                return bad(format!("policy {:?} defined twice", r.name));
            }
            if matches!(r.export, crate::rules::ExportRule::AvoidedCost) && self.avoided_cost.is_empty() {
                return bad(format!("policy {:?} needs an avoided_cost profile", r.name));
            }
        }
        self.select_policies(&self.long_run.policies)?;
        self.select_policies(&self.sweep.policies)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [traces]
        load = "load.csv"
        solar = "solar.csv"
        prices = "prices.csv"

        [calibration]
        historical_price = 0.2
    "#;

    #[test]
    fn defaults_fill_in() {
        let c = Config::from_toml(MINIMAL).unwrap();
        assert_eq!(c.scenario.samples, 200);
        assert_eq!(c.economics.environmental_price, 0.035);
        assert_eq!(c.traces.net_billing_minutes, 60);
        assert!(!c.policy_rules().is_empty());
    }

    #[test]
    fn rejects_unknown_keys() {
        let text = format!("{MINIMAL}\n[economics]\nfixed_cost = 1.0\n");
        assert!(Config::from_toml(&text).is_err());
    }

    #[test]
    fn avoided_cost_policy_needs_profile() {
        let c = Config::from_toml(MINIMAL).unwrap();
        assert!(c.validate().is_err());
        let mut with_profile = c.clone();
        with_profile.avoided_cost = vec![0.05; 24];
        with_profile.validate().unwrap();
    }

    #[test]
    fn unknown_policy_name() {
        let mut c = Config::from_toml(MINIMAL).unwrap();
        c.avoided_cost = vec![0.05; 24];
        c.long_run.policies = vec!["NEM 9.0".into()];
        assert!(c.validate().is_err());
    }
}
