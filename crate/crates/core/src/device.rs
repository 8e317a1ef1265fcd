//! Device utility models.
//!
//! Each controllable load is described by a strictly concave utility of
//! consumption. The quadratic family `U(d) = alpha*d - beta*d^2/2` is the
//! one shipped; the [`Utility`] trait is what the policy code relies on.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly concave, capped utility of consumption.
pub trait Utility {
    /// Utility of consuming `d` kWh, in $.
    fn value(&self, d: f64) -> f64;
    /// Marginal utility `V(d)`.
    fn marginal(&self, d: f64) -> f64;
    /// Inverse marginal utility `V^{-1}(p)`, unclipped.
    fn marginal_inverse(&self, price: f64) -> f64;
    /// Consumption cap, kWh.
    fn cap(&self) -> f64;

    /// Demand at `price`, clipped to `[0, cap]`.
    fn demand(&self, price: f64) -> f64 {
        self.marginal_inverse(price).min(self.cap()).max(0.0)
    }

    /// Prices `(low, high)` between which clipped demand is affine in price:
    /// demand is `cap` below `low` and zero above `high`. `None` when the
    /// demand curve is not piecewise linear.
    fn affine_range(&self) -> Option<(f64, f64)> {
        None
    }
}

impl<U: Utility + ?Sized> Utility for &U {
    fn value(&self, d: f64) -> f64 {
        (**self).value(d)
    }
    fn marginal(&self, d: f64) -> f64 {
        (**self).marginal(d)
    }
    fn marginal_inverse(&self, price: f64) -> f64 {
        (**self).marginal_inverse(price)
    }
    fn cap(&self) -> f64 {
        (**self).cap()
    }
    fn demand(&self, price: f64) -> f64 {
        (**self).demand(price)
    }
    fn affine_range(&self) -> Option<(f64, f64)> {
        (**self).affine_range()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DeviceKind {
    Hvac,
    Ev,
    #[default]
    Other,
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceKind::Hvac => "hvac",
            DeviceKind::Ev => "ev",
            DeviceKind::Other => "other",
        })
    }
}

/// Quadratic device utility `alpha*d - beta*d^2/2` on `[0, cap]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceModel {
    pub alpha: f64,
    pub beta: f64,
    pub cap: f64,
    #[serde(default)]
    pub kind: DeviceKind,
}

impl DeviceModel {
    pub fn new(alpha: f64, beta: f64, cap: f64) -> Result<Self> {
        Self::with_kind(alpha, beta, cap, DeviceKind::Other)
    }

    pub fn with_kind(alpha: f64, beta: f64, cap: f64, kind: DeviceKind) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("utility curvature must be positive, got {beta}")));
        }
        if !(cap >= 0.0 && cap.is_finite()) || !alpha.is_finite() {
            return Err(Error::Domain(format!(
                "invalid device parameters alpha={alpha}, cap={cap}"
            )));
        }
        Ok(DeviceModel {
            alpha,
            beta,
            cap,
            kind,
        })
    }

    /// A device whose cap is its satiation point `alpha / beta`.
    pub fn uncapped(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(alpha, beta, (alpha / beta).max(0.0))
    }

    /// Checked utility evaluation; `d` must lie in `[0, cap]`.
    pub fn utility(&self, d: f64) -> Result<f64> {
        if !(0.0..=self.cap).contains(&d) {
            return Err(Error::Domain(format!(
                "consumption {d} outside [0, {}]",
                self.cap
            )));
        }
        Ok(self.value(d))
    }
}

impl Utility for DeviceModel {
    fn value(&self, d: f64) -> f64 {
        self.alpha * d - 0.5 * self.beta * d * d
    }

    fn marginal(&self, d: f64) -> f64 {
        self.alpha - self.beta * d
    }

    fn marginal_inverse(&self, price: f64) -> f64 {
        (self.alpha - price) / self.beta
    }

    fn cap(&self) -> f64 {
        self.cap
    }

    fn affine_range(&self) -> Option<(f64, f64)> {
        Some((self.alpha - self.beta * self.cap, self.alpha))
    }
}

/// Historical observations used to back out quadratic utility parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationInput {
    /// Historical retail price, $/kWh.
    pub price: f64,
    /// Historical consumption at that price, kWh.
    pub demand: f64,
    /// Price elasticity of demand (negative).
    pub elasticity: f64,
}

/// Solves for `(alpha, beta)` such that the interior demand at the
/// historical price equals the historical demand with the given
/// elasticity. The cap defaults to the satiation point `alpha / beta`.
pub fn calibrate(input: &CalibrationInput) -> Result<DeviceModel> {
    calibrate_kind(input, DeviceKind::Other)
}

pub fn calibrate_kind(input: &CalibrationInput, kind: DeviceKind) -> Result<DeviceModel> {
    let CalibrationInput {
        price,
        demand,
        elasticity,
    } = *input;
    if !(elasticity < 0.0 && elasticity.is_finite()) {
        return Err(Error::Calibration(format!(
            "elasticity must be negative, got {elasticity}"
        )));
    }
    if !(price > 0.0 && price.is_finite()) || !(demand > 0.0 && demand.is_finite()) {
        return Err(Error::Calibration(format!(
            "historical price and demand must be positive, got price={price}, demand={demand}"
        )));
    }
    let alpha = -((1.0 - elasticity) / elasticity) * price;
    let beta = -price / (elasticity * demand);
    DeviceModel::with_kind(alpha, beta, alpha / beta, kind)
        .map_err(|e| Error::Calibration(e.to_string()))
}
