//! Expected surpluses and payments over a scenario set.
//!
//! Every quantity here is a sum over the `J` net-billing periods of a
//! rate-setting period of the sample-mean over DER scenarios, for a
//! population of `gamma` adopters and `1 - gamma` consumers.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::prosumer::{customer_payment, CustomerKind, ThresholdPolicy};
use crate::scenario_set::{CostModel, PeriodClass, ScenarioSet};
use crate::tariff::{nem_payment, TariffParams};

/// Class count above which classes are evaluated in parallel.
const PARALLEL_CLASSES: usize = 256;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Evaluation {
    /// Surplus of a customer without DER.
    pub consumer_surplus: f64,
    /// Surplus of a DER adopter.
    pub adopter_surplus: f64,
    /// Population-weighted customer surplus.
    pub customer_surplus: f64,
    /// Payments collected from the population.
    pub revenue: f64,
    /// Variable energy cost of serving aggregate net demand.
    pub variable_cost: f64,
    /// Fixed cost charged against the period.
    pub fixed_cost: f64,
    /// `revenue - variable_cost - fixed_cost`.
    pub utility_surplus: f64,
    /// Bill savings of an adopter relative to the same customer without DER.
    pub bill_savings: f64,
    /// Expected DER output, kWh.
    pub der_energy: f64,
    /// Expected wholesale value of DER output, $.
    pub der_wholesale_value: f64,
}

impl std::ops::AddAssign for Evaluation {
    fn add_assign(&mut self, o: Self) {
        self.consumer_surplus += o.consumer_surplus;
        self.adopter_surplus += o.adopter_surplus;
        self.customer_surplus += o.customer_surplus;
        self.revenue += o.revenue;
        self.variable_cost += o.variable_cost;
        self.fixed_cost += o.fixed_cost;
        self.utility_surplus += o.utility_surplus;
        self.bill_savings += o.bill_savings;
        self.der_energy += o.der_energy;
        self.der_wholesale_value += o.der_wholesale_value;
    }
}

/// Population and cost assumptions shared by every evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Population {
    pub gamma: f64,
    pub adopter: CustomerKind,
    pub cost: CostModel,
    /// Fixed cost over the rate-setting period, $.
    pub fixed_cost: f64,
}

impl Population {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Domain(format!("adoption fraction {} outside [0, 1]", self.gamma)));
        }
        if !self.adopter.has_der() {
            return Err(Error::Domain("adopters must be a DER customer kind".into()));
        }
        if !(self.fixed_cost >= 0.0) {
            return Err(Error::Domain(format!("fixed cost must be nonnegative, got {}", self.fixed_cost)));
        }
        Ok(())
    }
}

fn evaluate_class(class: &PeriodClass, tariff: &TariffParams, pop: &Population, periods: f64) -> Result<Evaluation> {
    let tariff = tariff.for_period(class.schedule_index);
    let policy = ThresholdPolicy::new(&class.devices, &tariff)?;
    let gamma = pop.gamma;
    let (d0, u0) = policy.decide_total(0.0);
    let p0 = nem_payment(d0, &tariff);
    let s0 = u0 - p0;

    let mut acc = Evaluation::default();
    for sample in &class.samples {
        let r = sample.der;
        let (da, ua) = policy.consumption_of(pop.adopter, r);
        let pa = customer_payment(pop.adopter, da, r, &tariff);
        let sa = ua - pa;
        let net_demand = gamma * (da - r) + (1.0 - gamma) * d0;
        let revenue = gamma * pa + (1.0 - gamma) * p0;
        let variable = pop.cost.cost(net_demand, sample.wholesale);
        let fixed = pop.fixed_cost / periods;
        acc += Evaluation {
            consumer_surplus: s0,
            adopter_surplus: sa,
            customer_surplus: gamma * sa + (1.0 - gamma) * s0,
            revenue,
            variable_cost: variable,
            fixed_cost: fixed,
            utility_surplus: revenue - variable - fixed,
            bill_savings: p0 - pa,
            der_energy: r,
            der_wholesale_value: r * sample.wholesale,
        };
    }
    let scale = class.weight / class.samples.len() as f64;
    let mut scaled = Evaluation {
        consumer_surplus: acc.consumer_surplus * scale,
        adopter_surplus: acc.adopter_surplus * scale,
        customer_surplus: acc.customer_surplus * scale,
        revenue: acc.revenue * scale,
        variable_cost: acc.variable_cost * scale,
        fixed_cost: acc.fixed_cost * scale,
        utility_surplus: acc.utility_surplus * scale,
        bill_savings: acc.bill_savings * scale,
        der_energy: acc.der_energy * scale,
        der_wholesale_value: acc.der_wholesale_value * scale,
    };
    scaled.utility_surplus = scaled.revenue - scaled.variable_cost - scaled.fixed_cost;
    Ok(scaled)
}

/// Expected outcomes of `tariff` over the whole scenario set.
pub fn evaluate(set: &ScenarioSet, tariff: &TariffParams, pop: &Population) -> Result<Evaluation> {
    pop.validate()?;
    let periods = set.periods_per_year();
    let classes = set.classes();
    let parts: Vec<Evaluation> = if classes.len() >= PARALLEL_CLASSES {
        classes
            .par_iter()
            .map(|c| evaluate_class(c, tariff, pop, periods))
            .collect::<Result<_>>()?
    } else {
        classes
            .iter()
            .map(|c| evaluate_class(c, tariff, pop, periods))
            .collect::<Result<_>>()?
    };
    // Summed in class order so parallel and sequential paths agree bit for bit.
    let mut total = Evaluation::default();
    for p in parts {
        total += p;
    }
    total.utility_surplus = total.revenue - total.variable_cost - total.fixed_cost;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceModel;
    use crate::scenario_set::DerSample;

    #[test]
    fn conservation_identity() {
        let set = ScenarioSet::single(
            vec![DeviceModel::new(1.0, 0.1, 20.0).unwrap()],
            vec![
                DerSample { der: 0.0, wholesale: 0.05 },
                DerSample { der: 7.0, wholesale: 0.08 },
                DerSample { der: 15.0, wholesale: 0.02 },
            ],
        )
        .unwrap();
        let pop = Population {
            gamma: 0.3,
            adopter: CustomerKind::ActiveProsumer,
            cost: CostModel::Wholesale,
            fixed_cost: 0.5,
        };
        let e = evaluate(&set, &TariffParams::new(0.3, 0.1, 0.2), &pop).unwrap();
        assert_eq!(e.utility_surplus, e.revenue - e.variable_cost - e.fixed_cost);
        assert!((e.fixed_cost - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_consumer_as_adopter() {
        let set = ScenarioSet::single(
            vec![DeviceModel::new(1.0, 0.1, 20.0).unwrap()],
            vec![DerSample { der: 1.0, wholesale: 0.05 }],
        )
        .unwrap();
        let pop = Population {
            gamma: 0.3,
            adopter: CustomerKind::Consumer,
            cost: CostModel::Wholesale,
            fixed_cost: 0.0,
        };
        assert!(evaluate(&set, &TariffParams::nem1(0.2), &pop).is_err());
    }
}
