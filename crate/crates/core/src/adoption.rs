//! Payback time, market potential and Bass-type diffusion of DER adoption.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdoptionParams {
    /// Market size: the adoption ceiling at zero payback.
    pub market_size: f64,
    /// Sensitivity of market potential to payback time, per year (< 0).
    pub payback_sensitivity: f64,
    /// Bass innovation coefficient.
    pub innovation: f64,
    /// Bass imitation coefficient.
    pub imitation: f64,
    /// Annual DER output degradation.
    pub degradation: f64,
    /// Annual interest rate.
    pub interest: f64,
    /// Payback horizon, years.
    pub horizon_years: u32,
}

impl AdoptionParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Domain(format!("adoption parameters: {m}")));
        if !(self.market_size > 0.0 && self.market_size <= 1.0) {
            return fail("market size must be in (0, 1]");
        }
        if !(self.payback_sensitivity < 0.0) {
            return fail("payback sensitivity must be negative");
        }
        if !(self.innovation > 0.0 && self.imitation >= 0.0) {
            return fail("need innovation > 0 and imitation >= 0");
        }
        if !(0.0..1.0).contains(&self.degradation) || !(0.0..1.0).contains(&self.interest) {
            return fail("degradation and interest must be in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Payback {
    Years(u32),
    Infinite,
}

impl Payback {
    pub fn years(self) -> Option<u32> {
        match self {
            Payback::Years(y) => Some(y),
            Payback::Infinite => None,
        }
    }
}

impl fmt::Display for Payback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payback::Years(y) => write!(f, "{y}"),
            Payback::Infinite => f.write_str("inf"),
        }
    }
}

/// Smallest `t <= horizon` whose discounted, degraded cumulative savings
/// `sum_{s=0}^{t} ((1 - degradation) / (1 + interest))^s * annual_savings`
/// reach `cost`.
pub fn payback_time(annual_savings: f64, cost: f64, degradation: f64, interest: f64, horizon: u32) -> Result<Payback> {
    if !(cost > 0.0) {
        return Err(Error::Domain(format!("installation cost must be positive, got {cost}")));
    }
    if annual_savings <= 0.0 || annual_savings.is_nan() {
        return Ok(Payback::Infinite);
    }
    let factor = (1.0 - degradation) / (1.0 + interest);
    let mut total = 0.0;
    let mut weight = 1.0;
    for t in 0..=horizon {
        total += weight * annual_savings;
        if total >= cost {
            return Ok(Payback::Years(t));
        }
        weight *= factor;
    }
    Ok(Payback::Infinite)
}

/// `market_size * exp(sensitivity * payback)`; zero for infinite payback.
pub fn market_potential(params: &AdoptionParams, payback: Payback) -> f64 {
    match payback {
        Payback::Years(t) => params.market_size * (params.payback_sensitivity * t as f64).exp(),
        Payback::Infinite => 0.0,
    }
}

/// Cumulative adopted fraction `t` periods after introduction.
pub fn bass_cdf(params: &AdoptionParams, t: f64) -> f64 {
    let (p, q) = (params.innovation, params.imitation);
    let e = (-(p + q) * t).exp();
    -(-(p + q) * t).exp_m1() / (1.0 + (q / p) * e)
}

/// Periods needed to reach cumulative fraction `y`.
pub fn bass_cdf_inverse(params: &AdoptionParams, y: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&y) {
        return Err(Error::Domain(format!("Bass inverse needs y in [0, 1), got {y}")));
    }
    let (p, q) = (params.innovation, params.imitation);
    Ok(((y * q / p).ln_1p() - (-y).ln_1p()) / (p + q))
}

/// Ratio `gamma / potential` above which the update is a fixed point.
pub const SATURATION: f64 = 1.0 - 1e-9;

/// One rate-setting period of diffusion towards `potential`.
pub fn adoption_update(gamma: f64, potential: f64, params: &AdoptionParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::Domain(format!("adoption fraction {gamma} outside [0, 1]")));
    }
    if potential <= 0.0 || potential < gamma || gamma / potential >= SATURATION {
        return Ok(gamma);
    }
    let elapsed = bass_cdf_inverse(params, gamma / potential)?;
    let next = potential * bass_cdf(params, 1.0 + elapsed);
    Ok(next.clamp(gamma, potential))
}
