//! Receding-horizon consumption scheduling within one net-billing period.
//!
//! The billing period has `T` decision intervals. At interval `k` the
//! scheduler knows the DER realized so far and a forecast for the rest of
//! the period, solves the pooled threshold problem over every remaining
//! `(t, i)` device slot, and commits only the interval-`k` slice.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::allocation::DemandCurve;
use crate::device::Utility;
use crate::error::{Error, Result};
use crate::prosumer::ThresholdPolicy;
use crate::tariff::{nem_payment, TariffParams};

/// Device models per decision interval plus the tariff of the billing period.
#[derive(Debug, Clone)]
pub struct BillingWindow<U> {
    periods: Vec<Vec<U>>,
    tariff: TariffParams,
}

impl<U: Utility> BillingWindow<U> {
    pub fn new(periods: Vec<Vec<U>>, tariff: TariffParams) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::Input("billing window needs at least one interval".into()));
        }
        if tariff.schedule.is_some() {
            return Err(Error::Input("tariff must be flat within a billing window".into()));
        }
        tariff.validate()?;
        Ok(BillingWindow { periods, tariff })
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn tariff(&self) -> &TariffParams {
        &self.tariff
    }

    pub fn period(&self, t: usize) -> &[U] {
        &self.periods[t]
    }

    fn pooled(&self, from: usize) -> Vec<&U> {
        self.periods[from..].iter().flatten().collect()
    }
}

/// Running totals of what has been committed and observed so far.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SchedulerState {
    decisions: Vec<Vec<f64>>,
    realized: Vec<f64>,
    exercised_consumption: f64,
    exercised_utility: f64,
    realized_der: f64,
}

impl SchedulerState {
    pub fn new() -> Self {
        Self::default()
    }

    /// 1-based index of the next interval to decide.
    pub fn k(&self) -> usize {
        self.decisions.len() + 1
    }

    pub fn decisions(&self) -> &[Vec<f64>] {
        &self.decisions
    }

    pub fn realized(&self) -> &[f64] {
        &self.realized
    }

    pub fn exercised_consumption(&self) -> f64 {
        self.exercised_consumption
    }

    pub fn exercised_utility(&self) -> f64 {
        self.exercised_utility
    }

    pub fn realized_der(&self) -> f64 {
        self.realized_der
    }

    /// Records the interval-`k` decision and the DER that actually showed up.
    pub fn commit<U: Utility>(&mut self, window: &BillingWindow<U>, decision: Vec<f64>, realized_der: f64) -> Result<()> {
        let t = self.decisions.len();
        if t >= window.len() {
            return Err(Error::Input("billing window already fully scheduled".into()));
        }
        let devices = window.period(t);
        if decision.len() != devices.len() {
            return Err(Error::Input(format!(
                "decision has {} entries for {} devices",
                decision.len(),
                devices.len()
            )));
        }
        if !(realized_der >= 0.0) {
            return Err(Error::Domain(format!("realized DER must be nonnegative, got {realized_der}")));
        }
        for (d, x) in devices.iter().zip(&decision) {
            self.exercised_consumption += x;
            self.exercised_utility += d.value(*x);
        }
        self.realized_der += realized_der;
        self.realized.push(realized_der);
        self.decisions.push(decision);
        Ok(())
    }
}

/// Source of DER forecasts for the remaining intervals.
pub trait ForecastProvider {
    /// Forecasts for the next `remaining` intervals given realized history.
    fn forecast(&mut self, history: &[f64], remaining: usize) -> Vec<f64>;
}

/// Knows the realized trace.
#[derive(Debug, Clone)]
pub struct PerfectForecast {
    truth: Vec<f64>,
}

impl PerfectForecast {
    pub fn new(truth: Vec<f64>) -> Self {
        PerfectForecast { truth }
    }
}

impl ForecastProvider for PerfectForecast {
    fn forecast(&mut self, history: &[f64], remaining: usize) -> Vec<f64> {
        let start = history.len();
        self.truth[start..start + remaining].to_vec()
    }
}

/// Repeats the last realized value; `initial` stands in before any
/// observation (typically the last reading of the previous billing period).
#[derive(Debug, Clone)]
pub struct Persistence {
    pub initial: f64,
}

impl ForecastProvider for Persistence {
    fn forecast(&mut self, history: &[f64], remaining: usize) -> Vec<f64> {
        let last = history.last().copied().unwrap_or(self.initial);
        vec![last.max(0.0); remaining]
    }
}

/// Truth plus a constant offset, floored at zero.
#[derive(Debug, Clone)]
pub struct BiasedForecast {
    truth: Vec<f64>,
    bias: f64,
}

impl BiasedForecast {
    pub fn new(truth: Vec<f64>, bias: f64) -> Self {
        BiasedForecast { truth, bias }
    }
}

impl ForecastProvider for BiasedForecast {
    fn forecast(&mut self, history: &[f64], remaining: usize) -> Vec<f64> {
        let start = history.len();
        self.truth[start..start + remaining]
            .iter()
            .map(|r| (r + self.bias).max(0.0))
            .collect()
    }
}

/// Truth scaled by `1 + scale * u` with `u` uniform on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct ScaledNoiseForecast {
    truth: Vec<f64>,
    scale: f64,
    rng: ChaCha8Rng,
}

impl ScaledNoiseForecast {
    pub fn new(truth: Vec<f64>, scale: f64, seed: u64) -> Self {
        ScaledNoiseForecast {
            truth,
            scale,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl ForecastProvider for ScaledNoiseForecast {
    fn forecast(&mut self, history: &[f64], remaining: usize) -> Vec<f64> {
        let start = history.len();
        let truth = &self.truth[start..start + remaining];
        truth
            .iter()
            .map(|r| {
                let u: f64 = self.rng.gen_range(-1.0..=1.0);
                (r * (1.0 + self.scale * u)).max(0.0)
            })
            .collect()
    }
}

/// Decision for interval `k = state.k()` given forecasts for `k..=T`.
pub fn mpc_step<U: Utility>(state: &SchedulerState, window: &BillingWindow<U>, forecast: &[f64]) -> Result<Vec<f64>> {
    let k = state.k();
    let horizon = window.len();
    if k > horizon {
        return Err(Error::Input(format!("interval {k} beyond window of {horizon}")));
    }
    let remaining = horizon - k + 1;
    if forecast.len() != remaining {
        return Err(Error::Input(format!(
            "forecast covers {} intervals, {remaining} remain",
            forecast.len()
        )));
    }
    if forecast.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Domain("forecast DER must be nonnegative".into()));
    }

    let tariff = window.tariff();
    let pooled = window.pooled(k - 1);
    let exercised = state.exercised_consumption();
    let upper = exercised + pooled.iter().map(|d| d.demand(tariff.retail)).sum::<f64>();
    let lower = exercised + pooled.iter().map(|d| d.demand(tariff.export)).sum::<f64>();
    let expected_der = state.realized_der() + forecast.iter().sum::<f64>();

    let current = window.period(k - 1);
    let price = if expected_der <= upper {
        tariff.retail
    } else if expected_der <= lower {
        let curve = DemandCurve::new(&pooled, tariff.export, tariff.retail);
        curve.solve(&pooled, expected_der - exercised)
    } else {
        tariff.export
    };
    Ok(current.iter().map(|d| d.demand(price)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BillingOutcome {
    /// Committed decisions, one vector of device consumptions per interval.
    pub schedule: Vec<Vec<f64>>,
    /// Net consumption over the billing period.
    pub net: f64,
    /// Realized utility minus NEM payment on the billing period's net.
    pub surplus: f64,
}

fn outcome<U: Utility>(window: &BillingWindow<U>, schedule: Vec<Vec<f64>>, realized: &[f64]) -> BillingOutcome {
    let mut utility = 0.0;
    let mut consumption = 0.0;
    for (t, decision) in schedule.iter().enumerate() {
        for (d, x) in window.period(t).iter().zip(decision) {
            utility += d.value(*x);
            consumption += x;
        }
    }
    let net = consumption - realized.iter().sum::<f64>();
    BillingOutcome {
        surplus: utility - nem_payment(net, window.tariff()),
        net,
        schedule,
    }
}

fn check_realized(window_len: usize, realized: &[f64]) -> Result<()> {
    if realized.len() != window_len {
        return Err(Error::Input(format!(
            "realized trace has {} intervals, window has {window_len}",
            realized.len()
        )));
    }
    if realized.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::Domain("realized DER must be nonnegative".into()));
    }
    Ok(())
}

/// Runs the scheduler over the whole billing period, re-forecasting at
/// every interval from the realized history.
pub fn run_billing_period<U: Utility>(
    window: &BillingWindow<U>,
    realized: &[f64],
    forecaster: &mut dyn ForecastProvider,
) -> Result<BillingOutcome> {
    check_realized(window.len(), realized)?;
    let mut state = SchedulerState::new();
    for &r in realized {
        let remaining = window.len() - state.decisions().len();
        let forecast = forecaster.forecast(state.realized(), remaining);
        let decision = mpc_step(&state, window, &forecast)?;
        state.commit(window, decision, r)?;
    }
    Ok(outcome(window, state.decisions, realized))
}

/// One-shot optimum with the whole DER trace known in advance.
pub fn clairvoyant<U: Utility>(window: &BillingWindow<U>, realized: &[f64]) -> Result<BillingOutcome> {
    check_realized(window.len(), realized)?;
    let pooled = window.pooled(0);
    let policy = ThresholdPolicy::new(&pooled, window.tariff())?;
    let decision = policy.decide(realized.iter().sum());
    let mut flat = decision.per_device.into_iter();
    let schedule = (0..window.len())
        .map(|t| flat.by_ref().take(window.period(t).len()).collect())
        .collect();
    Ok(outcome(window, schedule, realized))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceModel;
    use crate::prosumer::{optimal_consumption, CustomerKind};

    fn window(t: usize) -> BillingWindow<DeviceModel> {
        let d = DeviceModel::new(1.0, 0.1, 20.0).unwrap();
        BillingWindow::new(vec![vec![d]; t], TariffParams::new(0.4, 0.1, 0.0)).unwrap()
    }

    #[test]
    fn two_interval_net_consumption_example() {
        let w = window(2);
        let state = SchedulerState::new();
        let d = mpc_step(&state, &w, &[3.0, 3.0]).unwrap();
        assert!((d[0] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn zero_der_uses_retail_demand_everywhere() {
        let w = window(3);
        let out = run_billing_period(&w, &[0.0; 3], &mut Persistence { initial: 0.0 }).unwrap();
        for decision in &out.schedule {
            assert!((decision[0] - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_interval_collapses_to_one_shot() {
        let devices = vec![
            DeviceModel::new(1.0, 0.1, 20.0).unwrap(),
            DeviceModel::new(0.5, 0.1, 20.0).unwrap(),
        ];
        let tariff = TariffParams::new(0.4, 0.1, 0.0);
        let w = BillingWindow::new(vec![devices.clone()], tariff.clone()).unwrap();
        for r in [0.0, 5.0, 7.0, 10.0, 13.0, 20.0] {
            let d = mpc_step(&SchedulerState::new(), &w, &[r]).unwrap();
            let one_shot = optimal_consumption(&devices, &tariff, r, CustomerKind::ActiveProsumer).unwrap();
            for (a, b) in d.iter().zip(&one_shot.per_device) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn perfect_and_persistence_on_constant_trace() {
        let w = window(4);
        let trace = vec![2.5; 4];
        let perfect = run_billing_period(&w, &trace, &mut PerfectForecast::new(trace.clone())).unwrap();
        let persist = run_billing_period(&w, &trace, &mut Persistence { initial: 2.5 }).unwrap();
        let best = clairvoyant(&w, &trace).unwrap();
        assert!((perfect.surplus - best.surplus).abs() < 1e-9);
        assert_eq!(perfect, persist);
    }

    #[test]
    fn biased_forecast_is_not_better_than_clairvoyant() {
        let w = window(2);
        let trace = vec![3.0, 3.0];
        let biased = run_billing_period(&w, &trace, &mut BiasedForecast::new(trace.clone(), 10.0)).unwrap();
        let best = clairvoyant(&w, &trace).unwrap();
        assert!(biased.surplus <= best.surplus + 1e-12);
        // Over-forecasting pushes the first interval into the export branch.
        assert!((biased.schedule[0][0] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn forecast_length_mismatch() {
        let w = window(3);
        assert!(matches!(
            mpc_step(&SchedulerState::new(), &w, &[1.0, 1.0]),
            Err(Error::Input(_))
        ));
        assert!(run_billing_period(&w, &[1.0], &mut Persistence { initial: 0.0 }).is_err());
    }

    #[test]
    fn committed_decisions_are_not_revised() {
        let w = window(3);
        let trace = [4.0, 0.0, 9.0];
        let mut noisy = ScaledNoiseForecast::new(trace.to_vec(), 0.5, 7);
        let mut state = SchedulerState::new();
        let mut seen: Vec<Vec<f64>> = Vec::new();
        for &r in &trace {
            let f = noisy.forecast(state.realized(), w.len() - state.decisions().len());
            let d = mpc_step(&state, &w, &f).unwrap();
            state.commit(&w, d, r).unwrap();
            assert_eq!(&state.decisions()[..seen.len()], &seen[..]);
            seen = state.decisions().to_vec();
        }
    }
}
