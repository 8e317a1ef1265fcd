//! Optimal consumption of a surplus-maximizing customer under NEM X.
//!
//! The optimum is a two-threshold policy. With `d+` the aggregate demand at
//! the retail rate and `d-` the aggregate demand at the export rate, DER
//! output `r` falls into one of three zones:
//!
//! * `r < d+`: net consumer, every device at its retail-rate demand;
//! * `r > d-`: net producer, every device at its export-rate demand;
//! * otherwise net-zero: consumption tracks `r` exactly, allocated across
//!   devices by a shared marginal price `mu*` in `[export, retail]`.

use serde::{Deserialize, Serialize};

use crate::allocation::DemandCurve;
use crate::device::Utility;
use crate::error::{Error, Result};
use crate::tariff::{fit_payment_unchecked, nem_payment, TariffParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Zone {
    NetConsumption,
    NetZero,
    NetProduction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CustomerKind {
    /// Adapts consumption to DER output, billed under NEM.
    ActiveProsumer,
    /// Consumes as if it had no DER, billed under NEM.
    PassiveProsumer,
    /// No DER.
    Consumer,
    /// Billed under FiT; consumption does not depend on DER.
    FitProsumer,
}

impl CustomerKind {
    pub fn has_der(self) -> bool {
        !matches!(self, CustomerKind::Consumer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub d_plus: f64,
    pub d_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsumptionDecision {
    pub per_device: Vec<f64>,
    pub total: f64,
    pub zone: Zone,
    /// Net consumption `total - r`.
    pub net: f64,
    /// Shared marginal price; present only in the net-zero zone of an
    /// active prosumer.
    pub mu_star: Option<f64>,
}

/// Zone of DER output `r`; both threshold boundaries belong to net-zero.
pub fn zone_of(pair: &ThresholdPair, r: f64) -> Zone {
    if r < pair.d_plus {
        Zone::NetConsumption
    } else if r > pair.d_minus {
        Zone::NetProduction
    } else {
        Zone::NetZero
    }
}

fn zone_of_net(net: f64) -> Zone {
    const TOL: f64 = 1e-9;
    if net > TOL {
        Zone::NetConsumption
    } else if net < -TOL {
        Zone::NetProduction
    } else {
        Zone::NetZero
    }
}

/// Payment of a customer of `kind` consuming `consumption` with DER output
/// `generation` (ignored for consumers).
pub fn customer_payment(kind: CustomerKind, consumption: f64, generation: f64, tariff: &TariffParams) -> f64 {
    match kind {
        CustomerKind::Consumer => nem_payment(consumption, tariff),
        CustomerKind::ActiveProsumer | CustomerKind::PassiveProsumer => {
            nem_payment(consumption - generation, tariff) + tariff.prosumer_charge
        }
        CustomerKind::FitProsumer => {
            fit_payment_unchecked(consumption, generation, tariff) + tariff.prosumer_charge
        }
    }
}

/// The threshold policy for one device set and one flat tariff, with the
/// corner allocations precomputed so that repeated decisions are cheap.
#[derive(Debug, Clone)]
pub struct ThresholdPolicy<'a, U> {
    devices: &'a [U],
    curve: DemandCurve,
    plus: Vec<f64>,
    minus: Vec<f64>,
    pair: ThresholdPair,
    utility_plus: f64,
    utility_minus: f64,
    retail: f64,
    export: f64,
}

impl<'a, U: Utility> ThresholdPolicy<'a, U> {
    /// Uses the tariff's flat `(retail, export)`; callers resolve TOU
    /// schedules with [`TariffParams::for_period`] first.
    pub fn new(devices: &'a [U], tariff: &TariffParams) -> Result<Self> {
        let (retail, export) = (tariff.retail, tariff.export);
        if retail < export {
            return Err(Error::PolicyAssumption { retail, export });
        }
        let plus: Vec<f64> = devices.iter().map(|d| d.demand(retail)).collect();
        let minus: Vec<f64> = devices.iter().map(|d| d.demand(export)).collect();
        let pair = ThresholdPair {
            d_plus: plus.iter().sum(),
            d_minus: minus.iter().sum(),
        };
        let utility_of = |alloc: &[f64]| -> f64 {
            devices.iter().zip(alloc).map(|(d, &x)| d.value(x)).sum()
        };
        Ok(ThresholdPolicy {
            devices,
            curve: DemandCurve::new(devices, export, retail),
            utility_plus: utility_of(&plus),
            utility_minus: utility_of(&minus),
            plus,
            minus,
            pair,
            retail,
            export,
        })
    }

    pub fn thresholds(&self) -> ThresholdPair {
        self.pair
    }

    /// Active-prosumer decision at DER output `r`.
    pub fn decide(&self, r: f64) -> ConsumptionDecision {
        let zone = zone_of(&self.pair, r);
        let (per_device, mu_star) = match zone {
            Zone::NetConsumption => (self.plus.clone(), None),
            Zone::NetProduction => (self.minus.clone(), None),
            Zone::NetZero => {
                let mu = self.curve.solve(self.devices, r);
                let alloc = self.devices.iter().map(|d| d.demand(mu)).collect();
                (alloc, Some(mu.clamp(self.export, self.retail)))
            }
        };
        let total: f64 = per_device.iter().sum();
        ConsumptionDecision {
            net: total - r,
            total,
            zone,
            per_device,
            mu_star,
        }
    }

    /// Total consumption and utility of the active decision at `r`, without
    /// materializing the per-device allocation.
    pub fn decide_total(&self, r: f64) -> (f64, f64) {
        match zone_of(&self.pair, r) {
            Zone::NetConsumption => (self.pair.d_plus, self.utility_plus),
            Zone::NetProduction => (self.pair.d_minus, self.utility_minus),
            Zone::NetZero => {
                let mu = self.curve.solve(self.devices, r);
                self.devices.iter().fold((0.0, 0.0), |(t, u), d| {
                    let x = d.demand(mu);
                    (t + x, u + d.value(x))
                })
            }
        }
    }

    /// Consumption and utility of the decision a customer of `kind` makes.
    pub fn consumption_of(&self, kind: CustomerKind, r: f64) -> (f64, f64) {
        match kind {
            CustomerKind::ActiveProsumer => self.decide_total(r),
            _ => self.decide_total(0.0),
        }
    }

    pub fn decision(&self, kind: CustomerKind, r: f64) -> ConsumptionDecision {
        match kind {
            CustomerKind::ActiveProsumer => self.decide(r),
            CustomerKind::Consumer => self.decide(0.0),
            CustomerKind::PassiveProsumer | CustomerKind::FitProsumer => {
                let mut decision = self.decide(0.0);
                decision.net = decision.total - r;
                decision.zone = zone_of_net(decision.net);
                decision.mu_star = None;
                decision
            }
        }
    }
}

fn check_der(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("DER output must be nonnegative, got {r}")))
    }
}

/// Thresholds `(d+, d-)` of the optimal policy.
pub fn thresholds<U: Utility>(devices: &[U], tariff: &TariffParams) -> Result<ThresholdPair> {
    Ok(ThresholdPolicy::new(devices, tariff)?.thresholds())
}

pub fn optimal_consumption<U: Utility>(
    devices: &[U],
    tariff: &TariffParams,
    r: f64,
    kind: CustomerKind,
) -> Result<ConsumptionDecision> {
    check_der(r)?;
    let policy = ThresholdPolicy::new(devices, tariff)?;
    let decision = policy.decision(kind, r);
    if let Some(mu) = decision.mu_star {
        let residual = decision.total - r;
        if residual.abs() > 1e-9 * (1.0 + r) {
            return Err(Error::Invariant(format!(
                "net-zero allocation at mu={mu} misses r={r} by {residual}"
            )));
        }
    }
    Ok(decision)
}

/// Surplus `U(d*) - payment` of a customer of `kind` at DER output `r`.
pub fn surplus<U: Utility>(devices: &[U], tariff: &TariffParams, r: f64, kind: CustomerKind) -> Result<f64> {
    check_der(r)?;
    let policy = ThresholdPolicy::new(devices, tariff)?;
    let (total, utility) = policy.consumption_of(kind, r);
    Ok(utility - customer_payment(kind, total, r, tariff))
}
