//! The closed rate-setting and adoption loop, short-run sweeps and payback
//! summaries.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::build::{build_scenario_set, hourly_mean_price};
use super::config::Config;
use super::ingest::{ingest_traces, PeriodSeries};
use crate::adoption::{adoption_update, market_potential, payback_time, AdoptionParams, Payback};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, Evaluation, Population};
use crate::rate::{BreakEven, RateCase};
use crate::rules::{PolicyRule, PriceContext, RuleInYear};
use crate::scenario_set::ScenarioSet;
use crate::tariff::TariffParams;
use crate::welfare::{metrics_from, percentage_change, SmcPrice};

/// A loaded scenario: configuration, traces and the derived scenario set.
#[derive(Debug, Clone)]
pub struct Study {
    pub config: Config,
    pub seed: u64,
    pub series: PeriodSeries,
    pub set: ScenarioSet,
    pub context: PriceContext,
}

impl Study {
    /// Loads a config file and everything it references. `seed` overrides
    /// the configured seed.
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Study> {
        Self::from_config(Config::load(path)?, seed)
    }

    pub fn from_config(config: Config, seed: Option<u64>) -> Result<Study> {
        config.validate()?;
        let t = &config.traces;
        let traces = ingest_traces(&t.load, &t.solar, &t.prices)?;
        let series = traces.aggregate(t.net_billing_minutes, &t.load)?;
        let seed = seed.unwrap_or(config.seed);
        let set = build_scenario_set(&config, &series, seed)?;
        let smc_hourly = hourly_mean_price(&series)
            .into_iter()
            .map(|p| p + config.economics.smc_adder)
            .collect();
        let context = PriceContext {
            smc_hourly,
            avoided_cost_hourly: config.avoided_cost.clone(),
            tou: config.tou,
            system_kw: config.economics.system_kw,
            periods_per_year: set.periods_per_year(),
        };
        Ok(Study {
            config,
            seed,
            series,
            set,
            context,
        })
    }

    pub fn smc(&self) -> SmcPrice {
        SmcPrice::WholesalePlus(self.config.economics.smc_adder)
    }

    pub fn adoption_params(&self) -> AdoptionParams {
        self.config.adoption.params()
    }

    pub fn population(&self, rule: &PolicyRule, gamma: f64, theta: f64) -> Population {
        Population {
            gamma,
            adopter: rule.adopter(),
            cost: self.config.economics.cost_model,
            fixed_cost: theta,
        }
    }

    pub fn rule_in_year<'a>(&'a self, rule: &'a PolicyRule, year: u32) -> RuleInYear<'a> {
        RuleInYear {
            rule,
            context: &self.context,
            year,
        }
    }

    /// Break-even tariff for `rule` in `year` at adoption `gamma` and fixed cost `theta`.
    pub fn break_even(&self, rule: &PolicyRule, year: u32, gamma: f64, theta: f64) -> Result<BreakEven> {
        let [lo, hi] = self.config.economics.retail_bracket;
        RateCase {
            set: &self.set,
            population: self.population(rule, gamma, theta),
            rule: self.rule_in_year(rule, year),
            bracket: (lo, hi),
        }
        .solve()
    }

    /// Payback and market potential of a new system costing `xi` $/kW under
    /// a tariff whose evaluation is `eval`.
    pub fn outlook(&self, eval: &Evaluation, xi: f64) -> Result<Outlook> {
        let a = self.adoption_params();
        let payback = payback_time(
            eval.bill_savings,
            xi * self.config.economics.system_kw,
            a.degradation,
            a.interest,
            a.horizon_years,
        )?;
        Ok(Outlook {
            annual_savings: eval.bill_savings,
            payback,
            potential: market_potential(&a, payback),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Outlook {
    /// Expected bill savings of an adopter over one year, $.
    pub annual_savings: f64,
    pub payback: Payback,
    pub potential: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    /// Tariff in force; `None` before the first rate case.
    pub tariff: Option<TariffParams>,
    pub gamma: f64,
}

/// Fixed cost and installation cost by year.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousPath {
    /// Utility fixed cost per year, $/customer.
    pub theta: Vec<f64>,
    /// Installation cost, $/kW.
    pub xi: Vec<f64>,
}

impl ExogenousPath {
    /// `theta_n = theta0 (1 + growth)^n`, `xi_n = xi0 (1 - decay)^n` for `n = 0..=years`.
    pub fn geometric(theta0: f64, growth: f64, xi0: f64, decay: f64, years: u32) -> Self {
        let n = years as i32;
        ExogenousPath {
            theta: (0..=n).map(|k| theta0 * (1.0 + growth).powi(k)).collect(),
            xi: (0..=n).map(|k| xi0 * (1.0 - decay).powi(k)).collect(),
        }
    }

    pub fn from_config(config: &Config) -> Self {
        let e = &config.economics;
        let lr = &config.long_run;
        Self::geometric(e.fixed_cost(), lr.fixed_cost_growth, e.install_cost_per_kw, lr.install_cost_decay, lr.years)
    }

    pub fn years(&self) -> u32 {
        self.theta.len().saturating_sub(1) as u32
    }
}

/// Outcomes of one feasible rate-setting period, evaluated at the new
/// tariff and the new adoption level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearMetrics {
    pub retail: f64,
    /// Export rate; the daily mean for time-varying tariffs.
    pub export: f64,
    /// Connection charge, $/month.
    pub fixed_monthly: f64,
    /// Adopter-only charge, $/month.
    pub prosumer_charge_monthly: f64,
    pub welfare: f64,
    pub customer_surplus: f64,
    pub consumer_surplus: f64,
    pub adopter_surplus: f64,
    pub environmental: f64,
    pub utility_surplus: f64,
    /// Expected cost-shift over the year, $/customer.
    pub cost_shift: f64,
    pub annual_savings: f64,
    pub payback: Payback,
    pub potential: f64,
    #[serde(skip)]
    pub tariff: TariffParams,
}

impl YearMetrics {
    pub fn cost_shift_monthly(&self) -> f64 {
        self.cost_shift / 12.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearRecord {
    pub year: u32,
    pub theta: f64,
    pub xi: f64,
    /// Adoption level the rate was set for.
    pub gamma_prev: f64,
    /// Adoption level at the end of the period.
    pub gamma: f64,
    pub feasible: bool,
    /// Absent when no retail rate breaks even.
    pub metrics: Option<YearMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    DeathSpiral { year: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub policy: String,
    pub initial_gamma: f64,
    pub records: Vec<YearRecord>,
    pub status: RunStatus,
}

pub enum StepOutcome {
    Advanced(SystemState, YearRecord),
    DeathSpiral(YearRecord),
}

/// Rate-setting period `n`: sets the tariff for the current adoption level
/// and fixed cost, then advances adoption.
pub fn step(study: &Study, state: &SystemState, n: u32, path: &ExogenousPath, rule: &PolicyRule) -> Result<StepOutcome> {
    let (theta, xi_next) = match (path.theta.get(n as usize), path.xi.get(n as usize + 1)) {
        (Some(&t), Some(&x)) => (t, x),
        _ => return Err(Error::Input(format!("exogenous path has no entry for year {}", n + 1))),
    };
    let record = |gamma: f64, metrics: Option<YearMetrics>| YearRecord {
        year: n + 1,
        theta,
        xi: xi_next,
        gamma_prev: state.gamma,
        gamma,
        feasible: metrics.is_some(),
        metrics,
    };
    let be = match study.break_even(rule, n, state.gamma, theta) {
        Ok(be) => be,
        Err(e) if e.is_death_spiral() => return Ok(StepOutcome::DeathSpiral(record(state.gamma, None))),
        Err(e) => return Err(e),
    };
    let outlook = study.outlook(&be.evaluation, xi_next)?;
    let gamma = adoption_update(state.gamma, outlook.potential, &study.adoption_params())?;
    let eval = evaluate(&study.set, &be.tariff, &study.population(rule, gamma, theta))?;
    let m = metrics_from(&eval, gamma, study.smc(), study.config.economics.environmental_price);
    let periods = study.set.periods_per_year();
    let metrics = YearMetrics {
        retail: be.tariff.retail,
        export: be.tariff.export,
        fixed_monthly: be.tariff.fixed * periods / 12.0,
        prosumer_charge_monthly: be.tariff.prosumer_charge * periods / 12.0,
        welfare: m.social_welfare,
        customer_surplus: eval.customer_surplus,
        consumer_surplus: eval.consumer_surplus,
        adopter_surplus: eval.adopter_surplus,
        environmental: m.environmental,
        utility_surplus: eval.utility_surplus,
        cost_shift: m.cost_shift,
        annual_savings: outlook.annual_savings,
        payback: outlook.payback,
        potential: outlook.potential,
        tariff: be.tariff.clone(),
    };
    let next = SystemState {
        tariff: Some(be.tariff),
        gamma,
    };
    Ok(StepOutcome::Advanced(next, record(gamma, Some(metrics))))
}

/// Iterates [`step`] over the path, stopping at the first death spiral.
pub fn run_long_run(study: &Study, rule: &PolicyRule, initial_gamma: f64, path: &ExogenousPath) -> Result<ScenarioResult> {
    let mut state = SystemState {
        tariff: None,
        gamma: initial_gamma,
    };
    let mut records = Vec::new();
    let mut status = RunStatus::Completed;
    for n in 0..path.years() {
        match step(study, &state, n, path, rule)? {
            StepOutcome::Advanced(next, rec) => {
                state = next;
                records.push(rec);
            }
            StepOutcome::DeathSpiral(rec) => {
                status = RunStatus::DeathSpiral { year: rec.year };
                records.push(rec);
                break;
            }
        }
    }
    Ok(ScenarioResult {
        policy: rule.name.clone(),
        initial_gamma,
        records,
        status,
    })
}

/// Long runs of the configured policies, in parallel.
pub fn run_long_runs(study: &Study, rules: &[PolicyRule]) -> Result<Vec<ScenarioResult>> {
    let path = ExogenousPath::from_config(&study.config);
    let gamma0 = study.config.adoption.initial;
    rules.par_iter().map(|r| run_long_run(study, r, gamma0, &path)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetrics {
    pub retail: f64,
    pub welfare: f64,
    pub adopter_surplus: f64,
    pub consumer_surplus: f64,
    pub cost_shift: f64,
    pub payback: Payback,
    pub potential: f64,
    /// Changes against the same policy at zero adoption, %.
    pub welfare_pct: Option<f64>,
    pub retail_pct: Option<f64>,
    pub prosumer_pct: Option<f64>,
    pub consumer_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub policy: String,
    pub gamma: f64,
    /// Absent when the cell is a death spiral.
    pub metrics: Option<SweepMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub gammas: Vec<f64>,
    pub policies: Vec<String>,
    /// Cells in policy-major order.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, policy: &str, gamma_index: usize) -> Option<&SweepCell> {
        let p = self.policies.iter().position(|n| n == policy)?;
        self.cells.get(p * self.gammas.len() + gamma_index)
    }

    pub fn row(&self, policy: &str) -> Option<&[SweepCell]> {
        let p = self.policies.iter().position(|n| n == policy)?;
        let k = self.gammas.len();
        Some(&self.cells[p * k..(p + 1) * k])
    }
}

struct CellRaw {
    retail: f64,
    welfare: f64,
    adopter_surplus: f64,
    consumer_surplus: f64,
    cost_shift: f64,
    outlook: Outlook,
}

fn sweep_cell(study: &Study, rule: &PolicyRule, gamma: f64, theta: f64) -> Result<Option<CellRaw>> {
    let be = match study.break_even(rule, 0, gamma, theta) {
        Ok(be) => be,
        Err(e) if e.is_death_spiral() => return Ok(None),
        Err(e) => return Err(e),
    };
    let e = &be.evaluation;
    let m = metrics_from(e, gamma, study.smc(), study.config.economics.environmental_price);
    Ok(Some(CellRaw {
        retail: be.tariff.retail,
        welfare: m.social_welfare,
        adopter_surplus: e.adopter_surplus,
        consumer_surplus: e.consumer_surplus,
        cost_shift: m.cost_shift,
        outlook: study.outlook(e, study.config.economics.install_cost_per_kw)?,
    }))
}

/// Break-even rates and metrics over an adoption grid for each policy,
/// with the tariff held at its year-0 form.
pub fn run_short_run_sweep(study: &Study, gammas: &[f64], rules: &[PolicyRule]) -> Result<SweepResult> {
    if let Some(g) = gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::Domain(format!("adoption level {g} outside [0, 1]")));
    }
    let theta = study
        .config
        .sweep
        .fixed_cost_per_day
        .map_or(study.config.economics.fixed_cost(), |d| d * 365.0);
    let jobs: Vec<(usize, f64)> = (0..rules.len())
        .flat_map(|p| std::iter::once((p, 0.0)).chain(gammas.iter().map(move |&g| (p, g))))
        .collect();
    let raw: Vec<Option<CellRaw>> = jobs
        .par_iter()
        .map(|&(p, g)| sweep_cell(study, &rules[p], g, theta))
        .collect::<Result<_>>()?;
    let per = gammas.len() + 1;
    let pct = |v: f64, b: Option<f64>| b.and_then(|b| percentage_change(v, b).ok());
    let mut cells = Vec::with_capacity(rules.len() * gammas.len());
    for (p, rule) in rules.iter().enumerate() {
        let base = raw[p * per].as_ref();
        for (k, &gamma) in gammas.iter().enumerate() {
            let metrics = raw[p * per + 1 + k].as_ref().map(|c| SweepMetrics {
                retail: c.retail,
                welfare: c.welfare,
                adopter_surplus: c.adopter_surplus,
                consumer_surplus: c.consumer_surplus,
                cost_shift: c.cost_shift,
                payback: c.outlook.payback,
                potential: c.outlook.potential,
                welfare_pct: pct(c.welfare, base.map(|b| b.welfare)),
                retail_pct: pct(c.retail, base.map(|b| b.retail)),
                prosumer_pct: pct(c.adopter_surplus, base.map(|b| b.adopter_surplus)),
                consumer_pct: pct(c.consumer_surplus, base.map(|b| b.consumer_surplus)),
            });
            cells.push(SweepCell {
                policy: rule.name.clone(),
                gamma,
                metrics,
            });
        }
    }
    Ok(SweepResult {
        gammas: gammas.to_vec(),
        policies: rules.iter().map(|r| r.name.clone()).collect(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaybackRow {
    pub policy: String,
    pub gamma: f64,
    /// Absent when the year-0 rate case is a death spiral.
    pub retail: Option<f64>,
    pub outlook: Option<Outlook>,
}

/// Year-0 payback and market potential of each policy at the initial
/// adoption level.
pub fn payback_table(study: &Study, rules: &[PolicyRule]) -> Result<Vec<PaybackRow>> {
    let gamma = study.config.adoption.initial;
    let theta = study.config.economics.fixed_cost();
    rules
        .par_iter()
        .map(|rule| {
            let (retail, outlook) = match study.break_even(rule, 0, gamma, theta) {
                Ok(be) => (
                    Some(be.tariff.retail),
                    Some(study.outlook(&be.evaluation, study.config.economics.install_cost_per_kw)?),
                ),
                Err(e) if e.is_death_spiral() => (None, None),
                Err(e) => return Err(e),
            };
            Ok(PaybackRow {
                policy: rule.name.clone(),
                gamma,
                retail,
                outlook,
            })
        })
        .collect()
}
