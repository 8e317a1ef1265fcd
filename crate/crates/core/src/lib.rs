//! Prosumer consumption, break-even rate setting and DER adoption dynamics
//! under net-metering and feed-in tariffs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adoption;
pub mod allocation;
pub mod device;
pub mod error;
pub mod evaluation;
pub mod mpc;
pub mod prosumer;
pub mod rate;
pub mod rules;
pub mod scenario;
pub mod scenario_set;
pub mod tariff;
pub mod welfare;

pub use adoption::{adoption_update, bass_cdf, bass_cdf_inverse, market_potential, payback_time, AdoptionParams, Payback};
pub use device::{calibrate, CalibrationInput, DeviceKind, DeviceModel, Utility};
pub use error::{Error, Result};
pub use evaluation::{evaluate, Evaluation, Population};
pub use prosumer::{
    optimal_consumption, surplus, thresholds, zone_of, ConsumptionDecision, CustomerKind, ThresholdPair, ThresholdPolicy, Zone,
};
pub use rate::{ramsey_objective, solve_break_even, BreakEven, RateCase};
pub use rules::{presets, Billing, DecrementMode, ExportRule, FixedCharges, PolicyRule, PriceContext, RuleInYear, TariffRule, TouShape};
pub use scenario_set::{CostModel, DerSample, PeriodClass, ScenarioSet};
pub use tariff::{fit_payment, nem_payment, payment_gap, MeterReading, PeriodRates, TariffParams};
pub use welfare::{bill_savings, percentage_change, MetricInputs, Metrics, SmcPrice};
