//! Social welfare, bill savings and cost-shifts.

use serde::{Deserialize, Serialize};

use crate::device::Utility;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, Evaluation, Population};
use crate::prosumer::{customer_payment, CustomerKind, ThresholdPolicy};
use crate::scenario_set::ScenarioSet;
use crate::tariff::{nem_payment, TariffParams};

/// Social marginal cost of energy used to value DER output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum SmcPrice {
    Flat(f64),
    /// Wholesale price of each sample plus a non-market adder.
    WholesalePlus(f64),
}

impl SmcPrice {
    /// Expected SMC value of DER output given its energy and wholesale value.
    pub fn value_of(self, der_energy: f64, der_wholesale_value: f64) -> f64 {
        match self {
            SmcPrice::Flat(p) => p * der_energy,
            SmcPrice::WholesalePlus(adder) => der_wholesale_value + adder * der_energy,
        }
    }
}

/// Payment before DER minus payment after, both at optimal decisions.
pub fn bill_savings<U: Utility>(devices: &[U], tariff: &TariffParams, r: f64, kind: CustomerKind) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("DER output must be nonnegative, got {r}")));
    }
    let policy = ThresholdPolicy::new(devices, tariff)?;
    let (d0, _) = policy.decide_total(0.0);
    let (d, _) = policy.consumption_of(kind, r);
    Ok(nem_payment(d0, tariff) - customer_payment(kind, d, r, tariff))
}

/// `gamma * (savings - smc_value)`.
pub fn cost_shift_from(gamma: f64, savings: f64, smc_value: f64) -> f64 {
    gamma * (savings - smc_value)
}

#[derive(Debug, Clone, Copy)]
pub struct MetricInputs<'a> {
    pub set: &'a ScenarioSet,
    pub tariff: &'a TariffParams,
    pub population: Population,
    pub smc: SmcPrice,
    /// Environmental value of DER output, $/kWh.
    pub env_price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub evaluation: Evaluation,
    /// Environmental benefit of adopters' DER output.
    pub environmental: f64,
    pub social_welfare: f64,
    pub cost_shift: f64,
}

pub fn metrics(inputs: &MetricInputs) -> Result<Metrics> {
    if !(inputs.env_price >= 0.0) {
        return Err(Error::Domain("environmental price must be nonnegative".into()));
    }
    let e = evaluate(inputs.set, inputs.tariff, &inputs.population)?;
    Ok(metrics_from(&e, inputs.population.gamma, inputs.smc, inputs.env_price))
}

/// Metrics from an already computed evaluation.
pub fn metrics_from(e: &Evaluation, gamma: f64, smc: SmcPrice, env_price: f64) -> Metrics {
    let environmental = gamma * env_price * e.der_energy;
    Metrics {
        evaluation: *e,
        environmental,
        social_welfare: e.customer_surplus + e.utility_surplus + environmental,
        cost_shift: cost_shift_from(gamma, e.bill_savings, smc.value_of(e.der_energy, e.der_wholesale_value)),
    }
}

pub fn cost_shift(inputs: &MetricInputs) -> Result<f64> {
    Ok(metrics(inputs)?.cost_shift)
}

pub fn social_welfare(inputs: &MetricInputs) -> Result<f64> {
    Ok(metrics(inputs)?.social_welfare)
}

/// `(value - baseline) / |baseline| * 100`.
pub fn percentage_change(value: f64, baseline: f64) -> Result<f64> {
    if baseline == 0.0 {
        return Err(Error::UndefinedBaseline);
    }
    Ok((value - baseline) / baseline.abs() * 100.0)
}
