//! Policy rules: how a regulator's choice of retail rate expands into a full
//! tariff (export rate, fixed charges, time-of-use shape) in a given year.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prosumer::CustomerKind;
use crate::tariff::{peak_ratio_schedule, PeriodRates, TariffParams};

/// Maps a base retail rate to the tariff it implies.
pub trait TariffRule {
    fn tariff(&self, retail: f64) -> TariffParams;
}

impl<F: Fn(f64) -> TariffParams> TariffRule for F {
    fn tariff(&self, retail: f64) -> TariffParams {
        self(retail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecrementMode {
    /// `ratio_n = initial * (1 - decrement)^n`.
    Multiplicative,
    /// `ratio_n = initial - decrement * n`.
    #[default]
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExportRule {
    /// Exports earn the retail rate.
    Retail,
    /// `export = retail - offset`.
    Offset { offset: f64 },
    /// `export = ratio_n * retail`, with the ratio falling every year until
    /// it reaches `floor`.
    Ratio {
        initial: f64,
        floor: f64,
        #[serde(default)]
        annual_decrement: f64,
        #[serde(default)]
        mode: DecrementMode,
    },
    /// Exports earn the hourly social marginal cost.
    SocialMarginalCost,
    /// Exports earn the configured hourly avoided-cost profile.
    AvoidedCost,
}

impl ExportRule {
    pub fn ratio_in_year(&self, year: u32) -> Option<f64> {
        match *self {
            ExportRule::Ratio {
                initial,
                floor,
                annual_decrement,
                mode,
            } => {
                let n = year as f64;
                let raw = match mode {
                    DecrementMode::Multiplicative => initial * (1.0 - annual_decrement).powf(n),
                    DecrementMode::Linear => initial - annual_decrement * n,
                };
                Some(raw.max(floor))
            }
            _ => None,
        }
    }

    fn is_hourly(&self) -> bool {
        matches!(self, ExportRule::SocialMarginalCost | ExportRule::AvoidedCost)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedCharges {
    /// Connection charge on every customer in year 0, $/month.
    pub connection_monthly: f64,
    /// Yearly increase of the connection charge, $/month per year.
    pub connection_step: f64,
    /// Ceiling of the connection charge, $/month.
    pub connection_cap: f64,
    /// Capacity-based charge on adopters, $/kW/month.
    pub capacity_charge: f64,
}

impl Default for FixedCharges {
    fn default() -> Self {
        FixedCharges {
            connection_monthly: 0.0,
            connection_step: 0.0,
            connection_cap: f64::INFINITY,
            capacity_charge: 0.0,
        }
    }
}

impl FixedCharges {
    pub fn connection_in_year(&self, year: u32) -> f64 {
        (self.connection_monthly + self.connection_step * year as f64).min(self.connection_cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Billing {
    #[default]
    NetMetering,
    FeedIn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyRule {
    pub name: String,
    #[serde(default)]
    pub billing: Billing,
    pub export: ExportRule,
    /// Apply the peak-ratio time-of-use shape to the retail rate.
    #[serde(default)]
    pub tou: bool,
    #[serde(default)]
    pub fixed: FixedCharges,
    /// NEM adopters keep their no-DER consumption instead of adapting it.
    #[serde(default)]
    pub passive: bool,
}

impl PolicyRule {
    pub fn adopter(&self) -> CustomerKind {
        match (self.billing, self.passive) {
            (Billing::FeedIn, _) => CustomerKind::FitProsumer,
            (Billing::NetMetering, true) => CustomerKind::PassiveProsumer,
            (Billing::NetMetering, false) => CustomerKind::ActiveProsumer,
        }
    }

    /// Whether the tariff parameters change from year to year.
    pub fn is_dynamic(&self) -> bool {
        let ratio_moves = matches!(self.export, ExportRule::Ratio { annual_decrement, .. } if annual_decrement != 0.0);
        ratio_moves || self.fixed.connection_step != 0.0
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("policy {:?}: {msg}", self.name)));
        match self.export {
            ExportRule::Offset { offset } if !(offset >= 0.0) => return bad(format!("offset {offset} must be >= 0")),
            ExportRule::Ratio {
                initial,
                floor,
                annual_decrement,
                ..
            } => {
                if !(0.0..=1.0).contains(&initial) || !(0.0..=1.0).contains(&floor) || floor > initial {
                    return bad(format!("ratio bounds need 0 <= floor <= initial <= 1, got {floor}..{initial}"));
                }
                if !(0.0..1.0).contains(&annual_decrement) {
                    return bad(format!("annual decrement {annual_decrement} outside [0, 1)"));
                }
            }
            _ => {}
        }
        let f = &self.fixed;
        if f.connection_monthly < 0.0 || f.capacity_charge < 0.0 || f.connection_cap < 0.0 {
            return bad("fixed charges must be nonnegative".into());
        }
        Ok(())
    }
}

/// Hour-of-day time-of-use shape.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TouShape {
    pub peak_ratio: f64,
    /// First peak hour (inclusive).
    pub peak_start: usize,
    /// End of the peak window (exclusive).
    pub peak_end: usize,
}

impl Default for TouShape {
    fn default() -> Self {
        TouShape {
            peak_ratio: 1.5,
            peak_start: 16,
            peak_end: 21,
        }
    }
}

/// Market data a rule needs beyond the retail rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceContext {
    /// Social marginal cost by hour of day, $/kWh.
    pub smc_hourly: Vec<f64>,
    /// Avoided-cost export rate by hour of day, $/kWh.
    pub avoided_cost_hourly: Vec<f64>,
    pub tou: TouShape,
    /// Installed DER capacity per adopter, kW.
    pub system_kw: f64,
    /// Net-billing periods per rate-setting period.
    pub periods_per_year: f64,
}

/// A policy rule pinned to a year and market context.
#[derive(Debug, Clone, Copy)]
pub struct RuleInYear<'a> {
    pub rule: &'a PolicyRule,
    pub context: &'a PriceContext,
    pub year: u32,
}

impl RuleInYear<'_> {
    fn export_for(&self, hour: usize, retail: f64) -> f64 {
        let export = match &self.rule.export {
            ExportRule::Retail => retail,
            ExportRule::Offset { offset } => retail - offset,
            r @ ExportRule::Ratio { .. } => r.ratio_in_year(self.year).unwrap_or(1.0) * retail,
            ExportRule::SocialMarginalCost => hourly(&self.context.smc_hourly, hour),
            ExportRule::AvoidedCost => hourly(&self.context.avoided_cost_hourly, hour),
        };
        export.clamp(0.0, retail.max(0.0))
    }

    pub fn per_period(&self, monthly: f64) -> f64 {
        monthly * 12.0 / self.context.periods_per_year
    }
}

fn hourly(profile: &[f64], hour: usize) -> f64 {
    if profile.is_empty() {
        0.0
    } else {
        profile[hour % profile.len()]
    }
}

impl TariffRule for RuleInYear<'_> {
    fn tariff(&self, retail: f64) -> TariffParams {
        let fixed = self.per_period(self.rule.fixed.connection_in_year(self.year));
        let prosumer_charge = self.per_period(self.rule.fixed.capacity_charge * self.context.system_kw);
        let hourly_shape = self.rule.tou || self.rule.export.is_hourly();
        let mut tariff = TariffParams::new(retail, self.export_for(0, retail), fixed).with_prosumer_charge(prosumer_charge);
        if hourly_shape {
            let schedule: Vec<PeriodRates> = if self.rule.tou {
                let tou = self.context.tou;
                peak_ratio_schedule(retail, tou.peak_ratio, tou.peak_start, tou.peak_end, |h, r| self.export_for(h, r))
            } else {
                (0..24)
                    .map(|h| PeriodRates {
                        retail,
                        export: self.export_for(h, retail),
                    })
                    .collect()
            };
            // Flat fields report the off-peak retail rate and the mean export rate.
            tariff.export = (schedule.iter().map(|p| p.export).sum::<f64>() / 24.0).min(retail);
            tariff.schedule = Some(schedule);
        }
        tariff
    }
}

fn policy(name: &str, billing: Billing, export: ExportRule, tou: bool, fixed: FixedCharges) -> PolicyRule {
    PolicyRule {
        name: name.into(),
        billing,
        export,
        tou,
        fixed,
        passive: false,
    }
}

fn ratio(initial: f64, floor: f64, annual_decrement: f64) -> ExportRule {
    ExportRule::Ratio {
        initial,
        floor,
        annual_decrement,
        mode: DecrementMode::Linear,
    }
}

/// The named short-run and long-run policies.
pub fn presets() -> Vec<PolicyRule> {
    use Billing::{FeedIn, NetMetering};
    let none = FixedCharges::default();
    let nem2 = || ExportRule::Offset { offset: 0.035 };
    vec![
        policy("NEM 1.0", NetMetering, ExportRule::Retail, false, none),
        policy("FiT 1.0", FeedIn, ExportRule::Retail, false, none),
        policy("NEM 2.0", NetMetering, nem2(), true, none),
        policy("FiT 2.0", FeedIn, nem2(), true, none),
        policy("NEM SMC", NetMetering, ExportRule::SocialMarginalCost, true, none),
        policy("FiT SMC", FeedIn, ExportRule::SocialMarginalCost, true, none),
        policy("NEM D1", NetMetering, ratio(1.0, 0.4, 0.024), false, none),
        policy("NEM D2", NetMetering, ratio(1.0, 0.3, 0.028), false, none),
        policy("NEM D3", NetMetering, ratio(1.0, 0.25, 0.03), false, none),
        policy(
            "NEM D4",
            NetMetering,
            nem2(),
            false,
            FixedCharges {
                connection_monthly: 0.0,
                connection_step: 2.0,
                connection_cap: 40.0,
                capacity_charge: 0.0,
            },
        ),
        policy(
            "NEM 3.0",
            NetMetering,
            ExportRule::AvoidedCost,
            true,
            FixedCharges {
                capacity_charge: 8.0,
                ..none
            },
        ),
    ]
}
