//! Net-metering (NEM X) and feed-in (FiT X) payment rules.
//!
//! A tariff is the triple `(retail, export, fixed)`: the import rate charged
//! on positive net consumption, the compensation rate credited on net
//! exports, and a fixed charge per net-billing period. Time-of-use variants
//! carry a per-period schedule of `(retail, export)` pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Import/export rates for one net-billing period, in $/kWh.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodRates {
    pub retail: f64,
    pub export: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffParams {
    /// Rate on net consumption, $/kWh.
    pub retail: f64,
    /// Rate on net production, $/kWh.
    pub export: f64,
    /// Fixed charge per net-billing period, $, billed to every customer.
    pub fixed: f64,
    /// Extra fixed charge per net-billing period billed only to DER adopters
    /// (capacity-based charges). Zero for uniform tariffs.
    #[serde(default)]
    pub prosumer_charge: f64,
    /// Optional time-of-use schedule, indexed cyclically by period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<PeriodRates>>,
}

impl TariffParams {
    pub fn new(retail: f64, export: f64, fixed: f64) -> Self {
        TariffParams {
            retail,
            export,
            fixed,
            prosumer_charge: 0.0,
            schedule: None,
        }
    }

    /// NEM 1.0 style tariff where exports earn the retail rate.
    pub fn nem1(retail: f64) -> Self {
        Self::new(retail, retail, 0.0)
    }

    pub fn with_prosumer_charge(mut self, charge: f64) -> Self {
        self.prosumer_charge = charge;
        self
    }

    pub fn with_schedule(mut self, schedule: Vec<PeriodRates>) -> Self {
        self.schedule = Some(schedule);
        self
    }

    /// Checks `retail >= export >= 0`.
    pub fn validate(&self) -> Result<()> {
        let check = |retail: f64, export: f64| -> Result<()> {
            if !(retail.is_finite() && export.is_finite()) || retail < 0.0 || export < 0.0 {
                return Err(Error::Domain(format!(
                    "tariff rates must be finite and nonnegative, got ({retail}, {export})"
                )));
            }
            if retail < export {
                return Err(Error::PolicyAssumption { retail, export });
            }
            Ok(())
        };
        check(self.retail, self.export)?;
        if let Some(schedule) = &self.schedule {
            if schedule.is_empty() {
                return Err(Error::Domain("empty time-of-use schedule".into()));
            }
            for rates in schedule {
                check(rates.retail, rates.export)?;
            }
        }
        Ok(())
    }

    /// The flat tariff in force during `period`.
    pub fn for_period(&self, period: usize) -> TariffParams {
        match &self.schedule {
            None => self.clone(),
            Some(schedule) => {
                let rates = schedule[period % schedule.len()];
                TariffParams {
                    retail: rates.retail,
                    export: rates.export,
                    fixed: self.fixed,
                    prosumer_charge: self.prosumer_charge,
                    schedule: None,
                }
            }
        }
    }
}

/// Builds a time-of-use schedule over 24 hourly periods: `base` off-peak,
/// `base * peak_ratio` for hours in `[peak_start, peak_end)`. The export
/// rate for each hour comes from `export_of(hour, retail)`.
pub fn peak_ratio_schedule(
    base: f64,
    peak_ratio: f64,
    peak_start: usize,
    peak_end: usize,
    mut export_of: impl FnMut(usize, f64) -> f64,
) -> Vec<PeriodRates> {
    (0..24)
        .map(|hour| {
            let retail = if (peak_start..peak_end).contains(&hour) {
                base * peak_ratio
            } else {
                base
            };
            PeriodRates {
                retail,
                export: export_of(hour, retail),
            }
        })
        .collect()
}

/// Net consumption `z = d - r` with the gross quantities it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeterReading {
    consumption: f64,
    generation: f64,
}

impl MeterReading {
    pub fn new(consumption: f64, generation: f64) -> Result<Self> {
        if !(consumption >= 0.0 && generation >= 0.0) {
            return Err(Error::Domain(format!(
                "meter quantities must be nonnegative, got d={consumption}, r={generation}"
            )));
        }
        Ok(MeterReading {
            consumption,
            generation,
        })
    }

    pub fn consumption(&self) -> f64 {
        self.consumption
    }

    pub fn generation(&self) -> f64 {
        self.generation
    }

    pub fn net(&self) -> f64 {
        self.consumption - self.generation
    }
}

/// NEM X payment on net consumption `z`. Net-zero (`z == 0`) bills on the
/// import branch, which leaves only the fixed charge.
pub fn nem_payment(net: f64, tariff: &TariffParams) -> f64 {
    let volumetric = if net >= 0.0 {
        tariff.retail * net
    } else {
        tariff.export * net
    };
    volumetric + tariff.fixed
}

/// FiT X payment: gross consumption at the retail rate, gross generation
/// credited at the export rate.
pub fn fit_payment(consumption: f64, generation: f64, tariff: &TariffParams) -> Result<f64> {
    let reading = MeterReading::new(consumption, generation)?;
    Ok(fit_payment_unchecked(reading.consumption, reading.generation, tariff))
}

pub(crate) fn fit_payment_unchecked(consumption: f64, generation: f64, tariff: &TariffParams) -> f64 {
    tariff.retail * consumption - tariff.export * generation + tariff.fixed
}

/// Amount by which the FiT bill exceeds the NEM bill for the same gross
/// quantities: `(retail - export) * min(d, r)`.
pub fn payment_gap(consumption: f64, generation: f64, tariff: &TariffParams) -> f64 {
    (tariff.retail - tariff.export) * consumption.min(generation)
}
