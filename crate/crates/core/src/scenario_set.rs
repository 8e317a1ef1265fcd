//! DER scenario sets: the sample space over which expectations are taken.
//!
//! A year of `J` net-billing periods is represented by period classes. Each
//! class stands for `weight` net-billing periods that share device models,
//! a tariff schedule slot, and an empirical distribution of
//! `(DER output, wholesale price)` samples. Sums over the year are
//! weighted sums over classes of per-class sample means.

use serde::{Deserialize, Serialize};

use crate::device::DeviceModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerSample {
    /// DER output over the net-billing period, kWh.
    pub der: f64,
    /// Wholesale energy price, $/kWh.
    pub wholesale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodClass {
    /// Number of net-billing periods per year this class stands for.
    pub weight: f64,
    /// Slot in the tariff's time-of-use schedule (hour of day).
    pub schedule_index: usize,
    pub devices: Vec<DeviceModel>,
    pub samples: Vec<DerSample>,
}

impl PeriodClass {
    pub fn mean_wholesale(&self) -> f64 {
        self.samples.iter().map(|s| s.wholesale).sum::<f64>() / self.samples.len() as f64
    }

    pub fn mean_der(&self) -> f64 {
        self.samples.iter().map(|s| s.der).sum::<f64>() / self.samples.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    classes: Vec<PeriodClass>,
}

impl ScenarioSet {
    pub fn new(classes: Vec<PeriodClass>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Input("scenario set has no period classes".into()));
        }
        for (i, c) in classes.iter().enumerate() {
            if !(c.weight > 0.0 && c.weight.is_finite()) {
                return Err(Error::Input(format!("class {i}: weight must be positive")));
            }
            if c.samples.is_empty() {
                return Err(Error::Input(format!("class {i}: no DER samples")));
            }
            if let Some(s) = c.samples.iter().find(|s| !(s.der >= 0.0) || !s.wholesale.is_finite()) {
                return Err(Error::Input(format!("class {i}: invalid sample {s:?}")));
            }
        }
        Ok(ScenarioSet { classes })
    }

    /// One net-billing period with the given devices and samples (`J = 1`).
    pub fn single(devices: Vec<DeviceModel>, samples: Vec<DerSample>) -> Result<Self> {
        Self::new(vec![PeriodClass {
            weight: 1.0,
            schedule_index: 0,
            devices,
            samples,
        }])
    }

    pub fn classes(&self) -> &[PeriodClass] {
        &self.classes
    }

    /// `J`, the number of net-billing periods per rate-setting period.
    pub fn periods_per_year(&self) -> f64 {
        self.classes.iter().map(|c| c.weight).sum()
    }

    /// Expected DER output summed over the year, kWh.
    pub fn expected_annual_der(&self) -> f64 {
        self.classes.iter().map(|c| c.weight * c.mean_der()).sum()
    }
}

/// The utility's variable cost `C(y)` of serving aggregate net demand `y`
/// per customer at wholesale price `price`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostModel {
    /// `C(y) = price * y`; net exports are resold at the wholesale price.
    #[default]
    Wholesale,
    /// `C(y) = price * max(y, 0)`; net exports earn the utility nothing.
    ExportsUncredited,
}

impl CostModel {
    pub fn cost(self, net_demand: f64, price: f64) -> f64 {
        match self {
            CostModel::Wholesale => price * net_demand,
            CostModel::ExportsUncredited => price * net_demand.max(0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_invalid() {
        assert!(ScenarioSet::new(vec![]).is_err());
        let d = DeviceModel::new(1.0, 0.1, 20.0).unwrap();
        assert!(ScenarioSet::single(vec![d], vec![]).is_err());
        assert!(ScenarioSet::single(vec![d], vec![DerSample { der: -1.0, wholesale: 0.1 }]).is_err());
    }

    #[test]
    fn cost_models() {
        assert_eq!(CostModel::Wholesale.cost(-2.0, 0.05), -0.1);
        assert_eq!(CostModel::ExportsUncredited.cost(-2.0, 0.05), 0.0);
        assert_eq!(CostModel::ExportsUncredited.cost(2.0, 0.05), 0.1);
    }
}
