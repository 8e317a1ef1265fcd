//! Break-even retail rate setting.
//!
//! The regulator fixes the export rate and fixed charges through a policy
//! rule and picks the smallest retail rate at which the utility's expected
//! surplus over the rate-setting period is zero.

use crate::device::Utility;
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, Evaluation, Population};
use crate::prosumer::{customer_payment, CustomerKind, ThresholdPolicy};
use crate::rules::TariffRule;
use crate::scenario_set::{CostModel, ScenarioSet};
use crate::tariff::{nem_payment, TariffParams};

/// Grid step of the bracket scan, $/kWh.
pub const SCAN_STEP: f64 = 0.005;

/// Population surplus in one net-billing period: `gamma` adopters with DER
/// output `r` and `1 - gamma` consumers.
pub fn customer_surplus<U: Utility>(devices: &[U], tariff: &TariffParams, gamma: f64, r: f64, adopter: CustomerKind) -> Result<f64> {
    let policy = ThresholdPolicy::new(devices, tariff)?;
    let (d0, u0) = policy.decide_total(0.0);
    let (da, ua) = policy.consumption_of(adopter, r);
    let s0 = u0 - nem_payment(d0, tariff);
    let sa = ua - customer_payment(adopter, da, r, tariff);
    Ok(gamma * sa + (1.0 - gamma) * s0)
}

/// Cost terms of one net-billing period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodCost {
    pub cost: CostModel,
    pub wholesale: f64,
    /// Fixed cost over the rate-setting period.
    pub theta: f64,
    /// Net-billing periods per rate-setting period.
    pub periods: f64,
}

/// Utility surplus in one net-billing period: payments collected minus the
/// variable cost of aggregate net demand minus the prorated fixed cost.
pub fn utility_surplus<U: Utility>(
    devices: &[U],
    tariff: &TariffParams,
    gamma: f64,
    r: f64,
    adopter: CustomerKind,
    cost: &PeriodCost,
) -> Result<f64> {
    let policy = ThresholdPolicy::new(devices, tariff)?;
    let (d0, _) = policy.decide_total(0.0);
    let (da, _) = policy.consumption_of(adopter, r);
    let revenue = gamma * customer_payment(adopter, da, r, tariff) + (1.0 - gamma) * nem_payment(d0, tariff);
    let net = gamma * (da - r) + (1.0 - gamma) * d0;
    Ok(revenue - cost.cost.cost(net, cost.wholesale) - cost.theta / cost.periods)
}

/// One break-even problem.
#[derive(Debug, Clone)]
pub struct RateCase<'a, R> {
    pub set: &'a ScenarioSet,
    /// Adoption level, adopter kind, cost model and fixed cost `theta`.
    pub population: Population,
    pub rule: R,
    /// Search interval for the retail rate, $/kWh.
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BreakEven {
    pub tariff: TariffParams,
    pub evaluation: Evaluation,
}

impl BreakEven {
    pub fn retail(&self) -> f64 {
        self.tariff.retail
    }
}

/// Absolute tolerance on expected utility surplus at a returned rate.
pub fn break_even_tolerance(theta: f64) -> f64 {
    (1e-6 * theta).max(1e-12)
}

impl<R: TariffRule> RateCase<'_, R> {
    pub fn evaluate_at(&self, retail: f64) -> Result<(TariffParams, Evaluation)> {
        let tariff = self.rule.tariff(retail);
        let eval = evaluate(self.set, &tariff, &self.population)?;
        Ok((tariff, eval))
    }

    /// Smallest retail rate in the bracket with zero expected utility surplus.
    pub fn solve(&self) -> Result<BreakEven> {
        let (lo, hi) = self.bracket;
        if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Bracket(format!("invalid bracket [{lo}, {hi}]")));
        }
        let tol = break_even_tolerance(self.population.fixed_cost);
        let at = |p: f64| -> Result<(f64, TariffParams, Evaluation)> {
            let (t, e) = self.evaluate_at(p)?;
            Ok((e.utility_surplus, t, e))
        };
        let done = |t: TariffParams, e: Evaluation| Ok(BreakEven { tariff: t, evaluation: e });

        let (f_lo, t, e) = at(lo)?;
        if f_lo.abs() <= tol {
            return done(t, e);
        }
        if f_lo > 0.0 {
            return Err(Error::Bracket(format!(
                "utility surplus {f_lo} is already positive at the bracket floor {lo}"
            )));
        }
        let steps = ((hi - lo) / SCAN_STEP).ceil() as usize;
        let (mut a, mut fa) = (lo, f_lo);
        let (mut best, mut argmax) = (f_lo, lo);
        for k in 1..=steps {
            let b = (lo + k as f64 * SCAN_STEP).min(hi);
            let (fb, t, e) = at(b)?;
            if fb > best {
                best = fb;
                argmax = b;
            }
            if fb.abs() <= tol {
                return done(t, e);
            }
            if fb > 0.0 {
                return self.bisect(a, b, fa, tol);
            }
            a = b;
            fa = fb;
        }
        Err(Error::DeathSpiral { lo, hi, best, argmax })
    }

    fn bisect(&self, mut a: f64, mut b: f64, mut fa: f64, tol: f64) -> Result<BreakEven> {
        loop {
            let m = 0.5 * (a + b);
            let (t, e) = self.evaluate_at(m)?;
            let fm = e.utility_surplus;
            if fm.abs() <= tol || b - a < 1e-12 {
                return Ok(BreakEven { tariff: t, evaluation: e });
            }
            if (fm < 0.0) == (fa < 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
    }
}

pub fn solve_break_even<R: TariffRule>(case: &RateCase<'_, R>) -> Result<BreakEven> {
    case.solve()
}

/// Expected customer surplus plus the environmental value of adopters' DER
/// output, summed over the rate-setting period.
pub fn ramsey_objective(set: &ScenarioSet, tariff: &TariffParams, population: &Population, env_price: f64) -> Result<f64> {
    let e = evaluate(set, tariff, population)?;
    Ok(e.customer_surplus + population.gamma * env_price * e.der_energy)
}
