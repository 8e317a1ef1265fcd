//! Shared-multiplier allocation: find the price `mu` at which the
//! aggregate clipped demand `sum_i clamp(V_i^{-1}(mu), 0, cap_i)` hits a
//! target energy.
//!
//! For devices with piecewise-linear clipped demand (the quadratic family)
//! the aggregate is piecewise linear and nonincreasing in `mu`, so the root
//! is found exactly from the sorted breakpoints. Other utilities fall back
//! to bisection.

use crate::device::Utility;
use crate::error::{Error, Result};

/// Energy tolerance of the bisection fallback, kWh.
pub const BISECTION_TOLERANCE: f64 = 1e-10;

pub fn aggregate_demand<U: Utility>(devices: &[U], price: f64) -> f64 {
    devices.iter().map(|d| d.demand(price)).sum()
}

/// Aggregate demand curve on a price interval, stored as its breakpoints.
#[derive(Debug, Clone)]
pub struct DemandCurve {
    /// `(price, aggregate demand)` sorted by ascending price.
    knots: Vec<(f64, f64)>,
    piecewise: bool,
}

impl DemandCurve {
    /// Tabulates the curve on `[lo, hi]`. If any device lacks an affine
    /// range only the endpoints are kept and [`solve`](Self::solve) bisects.
    pub fn new<U: Utility>(devices: &[U], lo: f64, hi: f64) -> Self {
        let piecewise = devices.iter().all(|d| d.affine_range().is_some());
        let mut prices = vec![lo, hi];
        if piecewise {
            for (a, b) in devices.iter().filter_map(|d| d.affine_range()) {
                prices.extend([a, b].into_iter().filter(|p| *p > lo && *p < hi));
            }
        }
        prices.sort_by(f64::total_cmp);
        prices.dedup();
        let knots = prices
            .into_iter()
            .map(|p| (p, aggregate_demand(devices, p)))
            .collect();
        DemandCurve { knots, piecewise }
    }

    pub fn low_price_demand(&self) -> f64 {
        self.knots[0].1
    }

    pub fn high_price_demand(&self) -> f64 {
        self.knots[self.knots.len() - 1].1
    }

    /// Price in `[lo, hi]` at which demand equals `target`; targets outside
    /// the curve's range are pinned to the nearer endpoint.
    pub fn solve<U: Utility>(&self, devices: &[U], target: f64) -> f64 {
        let (lo, d_lo) = self.knots[0];
        let (hi, d_hi) = self.knots[self.knots.len() - 1];
        if target >= d_lo {
            return lo;
        }
        if target <= d_hi {
            return hi;
        }
        if !self.piecewise {
            return bisect(devices, target, lo, hi);
        }
        // First knot whose demand is at or below the target.
        let idx = self.knots.partition_point(|&(_, d)| d > target);
        let (a, da) = self.knots[idx - 1];
        let (b, db) = self.knots[idx];
        if da == db {
            return a;
        }
        let mu = a + (da - target) / (da - db) * (b - a);
        mu.clamp(a, b)
    }
}

/// Solves `aggregate_demand(mu) == target` for `mu` in `[lo, hi]`.
///
/// Fails when the target lies outside `[D(hi), D(lo)]` by more than the
/// energy tolerance.
pub fn solve_multiplier<U: Utility>(devices: &[U], target: f64, lo: f64, hi: f64) -> Result<f64> {
    let curve = DemandCurve::new(devices, lo, hi);
    let slack = BISECTION_TOLERANCE * (1.0 + target.abs());
    if target > curve.low_price_demand() + slack || target < curve.high_price_demand() - slack {
        return Err(Error::Invariant(format!(
            "no multiplier in [{lo}, {hi}] reaches demand {target} (range [{}, {}])",
            curve.high_price_demand(),
            curve.low_price_demand()
        )));
    }
    Ok(curve.solve(devices, target))
}

/// Bisection on the multiplier; works for any monotone demand curve.
pub fn bisect<U: Utility>(devices: &[U], target: f64, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let excess = aggregate_demand(devices, mid) - target;
        if excess.abs() <= BISECTION_TOLERANCE || hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            return mid;
        }
        if excess > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Per-device clipped demands at a common price.
pub fn allocate<U: Utility>(devices: &[U], price: f64) -> Vec<f64> {
    devices.iter().map(|d| d.demand(price)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceModel;
    use proptest::prelude::*;

    /// Square-root utility: not piecewise linear, exercises the fallback.
    struct Sqrt {
        scale: f64,
        cap: f64,
    }

    impl Utility for Sqrt {
        fn value(&self, d: f64) -> f64 {
            2.0 * self.scale * d.sqrt()
        }
        fn marginal(&self, d: f64) -> f64 {
            self.scale / d.sqrt()
        }
        fn marginal_inverse(&self, price: f64) -> f64 {
            if price <= 0.0 {
                f64::INFINITY
            } else {
                (self.scale / price).powi(2)
            }
        }
        fn cap(&self) -> f64 {
            self.cap
        }
    }

    #[test]
    fn two_device_net_zero_example() {
        let devices = [
            DeviceModel::new(1.0, 0.1, 20.0).unwrap(),
            DeviceModel::new(0.5, 0.1, 20.0).unwrap(),
        ];
        let mu = solve_multiplier(&devices, 10.0, 0.1, 0.4).unwrap();
        assert!((mu - 0.25).abs() < 1e-12);
        let alloc = allocate(&devices, mu);
        assert!((alloc[0] - 7.5).abs() < 1e-10);
        assert!((alloc[1] - 2.5).abs() < 1e-10);
    }

    #[test]
    fn out_of_range_target_is_an_invariant_error() {
        let devices = [DeviceModel::new(1.0, 0.1, 20.0).unwrap()];
        assert!(matches!(
            solve_multiplier(&devices, 12.0, 0.1, 0.4),
            Err(Error::Invariant(_))
        ));
    }

    #[test]
    fn identical_devices_share_equally() {
        let d = DeviceModel::new(0.8, 0.2, 5.0).unwrap();
        let devices = [d, d, d];
        let mu = solve_multiplier(&devices, 6.0, 0.1, 0.5).unwrap();
        let alloc = allocate(&devices, mu);
        for a in &alloc {
            assert!((a - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fallback_handles_non_quadratic() {
        let devices = [Sqrt { scale: 0.3, cap: 10.0 }, Sqrt { scale: 0.2, cap: 10.0 }];
        let target = 2.0;
        let mu = solve_multiplier(&devices, target, 0.1, 1.0).unwrap();
        assert!((aggregate_demand(&devices, mu) - target).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn exact_solver_agrees_with_bisection(
            params in prop::collection::vec((0.05f64..1.5, 0.05f64..1.0, 0.2f64..5.0), 1..6),
            lo in 0.0f64..0.3,
            width in 0.0f64..0.6,
            frac in 0.0f64..1.0,
        ) {
            let devices: Vec<_> = params.iter().map(|&(a, b, c)| DeviceModel::new(a, b, c).unwrap()).collect();
            let hi = lo + width;
            let (dmin, dmax) = (aggregate_demand(&devices, hi), aggregate_demand(&devices, lo));
            let target = dmin + frac * (dmax - dmin);
            let exact = solve_multiplier(&devices, target, lo, hi).unwrap();
            prop_assert!((aggregate_demand(&devices, exact) - target).abs() < 1e-9);
            let approx = bisect(&devices, target, lo, hi);
            let da = allocate(&devices, exact);
            let db = allocate(&devices, approx);
            for (x, y) in da.iter().zip(&db) {
                prop_assert!((x - y).abs() < 1e-6);
            }
        }
    }
}
