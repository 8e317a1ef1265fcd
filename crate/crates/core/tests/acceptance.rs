//! Acceptance suite. Run with `cargo test -p netmeter-core --test acceptance`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use netmeter::adoption::SATURATION;
use netmeter::mpc::{clairvoyant, run_billing_period, BiasedForecast, BillingWindow, PerfectForecast, Persistence, ScaledNoiseForecast};
use netmeter::prosumer::ThresholdPolicy;
use netmeter::rate::break_even_tolerance;
use netmeter::scenario::report::{self, Format, Manifest};
use netmeter::scenario::{run_long_runs, run_short_run_sweep, RunStatus, ScenarioResult, Study, SweepResult};
use netmeter::{
    adoption_update, bass_cdf, bass_cdf_inverse, fit_payment, market_potential, nem_payment, optimal_consumption, payback_time,
    payment_gap, surplus, thresholds, AdoptionParams, CostModel, CustomerKind, DerSample, DeviceModel, Error, Payback,
    Population, RateCase, ScenarioSet, TariffParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn config_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/synthetic.toml")
}

fn study() -> Study {
    Study::load(&config_path(), None).expect("synthetic study loads")
}

fn random_devices(rng: &mut ChaCha8Rng, m: usize) -> Vec<DeviceModel> {
    (0..m)
        .map(|_| DeviceModel::new(rng.gen_range(0.3..1.5), rng.gen_range(0.1..1.0), rng.gen_range(0.5..3.0)).unwrap())
        .collect()
}

fn random_tariff(rng: &mut ChaCha8Rng) -> TariffParams {
    let retail = rng.gen_range(0.05..0.6);
    TariffParams::new(retail, rng.gen_range(0.0..=retail), rng.gen_range(0.0..2.0))
}

fn payment_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        let d = rng.gen_range(0.0..10.0);
        let r = rng.gen_range(0.0..10.0);
        let retail = rng.gen_range(0.0..1.0);
        let export = rng.gen_range(0.0..1.0);
        let t = TariffParams::new(retail, export, rng.gen_range(0.0..5.0));
        let fit = fit_payment(d, r, &t).map_err(|e| e.to_string())?;
        let nem = nem_payment(d - r, &t);
        let gap = (retail - export) * d.min(r);
        let err = (fit - nem - gap).abs().max((payment_gap(d, r, &t) - gap).abs());
        worst = worst.max(err);
        ensure!(err <= 1e-12, "gap identity off by {err:e} at d={d}, r={r}, {t:?}");
        if retail >= export {
            ensure!(nem <= fit + 1e-12, "NEM {nem} above FiT {fit} at d={d}, r={r}");
        }
    }
    Ok(format!("100000 triples, worst residual {worst:.1e}"))
}

/// Best surplus over consumptions on a 0.01 grid, by dynamic programming
/// over the grid total.
fn grid_oracle(devices: &[DeviceModel], tariff: &TariffParams, r: f64) -> f64 {
    const STEP: f64 = 0.01;
    let mut best = vec![0.0f64];
    for dev in devices {
        let n = (dev.cap / STEP + 1e-9).floor() as usize;
        let values: Vec<f64> = (0..=n).map(|k| dev.alpha * (k as f64 * STEP) - 0.5 * dev.beta * (k as f64 * STEP).powi(2)).collect();
        let mut next = vec![f64::NEG_INFINITY; best.len() + n];
        for (total, b) in best.iter().enumerate() {
            for (k, v) in values.iter().enumerate() {
                let cand = b + v;
                if cand > next[total + k] {
                    next[total + k] = cand;
                }
            }
        }
        best = next;
    }
    best.iter()
        .enumerate()
        .map(|(total, u)| u - nem_payment(total as f64 * STEP - r, tariff))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn theorem_one_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_gain = 0.0f64;
    for _ in 0..1000 {
        let m = rng.gen_range(1..=4);
        let devices: Vec<DeviceModel> = (0..m)
            .map(|_| {
                let cap = rng.gen_range(50..=300) as f64 / 100.0;
                DeviceModel::new(rng.gen_range(0.3..1.5), rng.gen_range(0.1..1.0), cap).unwrap()
            })
            .collect();
        let tariff = random_tariff(&mut rng);
        let total_cap: f64 = devices.iter().map(|d| d.cap).sum();
        let r = rng.gen_range(0..=((total_cap + 1.0) * 100.0) as usize) as f64 / 100.0;
        let policy = surplus(&devices, &tariff, r, CustomerKind::ActiveProsumer).map_err(|e| e.to_string())?;
        let grid = grid_oracle(&devices, &tariff, r);
        ensure!(policy >= grid - 1e-9, "threshold policy {policy} loses to grid {grid} at r={r}");
        ensure!(policy - grid <= 1e-3, "grid gap {} exceeds 1e-3 at r={r}", policy - grid);
        worst_gain = worst_gain.max(policy - grid);
    }
    Ok(format!("1000 instances, max advantage over grid {worst_gain:.1e}"))
}

fn zone_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    const H: f64 = 1e-3;
    let mut worst_excess = 0.0f64;
    let mut points = 0usize;
    for _ in 0..50 {
        let m = rng.gen_range(1..=4);
        let devices = random_devices(&mut rng, m);
        let tariff = random_tariff(&mut rng);
        let policy = ThresholdPolicy::new(&devices, &tariff).map_err(|e| e.to_string())?;
        let pair = policy.thresholds();
        let top = devices.iter().map(|d| d.cap).sum::<f64>() + 1.0;
        let n = (top / H) as usize;
        let mut prev = policy.decide(0.0).total;
        for k in 1..=n {
            let r = k as f64 * H;
            let d = policy.decide(r).total;
            let step = d - prev;
            ensure!(step >= -1e-9, "d* decreases by {} at r={r}", -step);
            worst_excess = worst_excess.max(step - H);
            ensure!(step <= H + 1e-6, "d* jumps by {step} over a step of {H} at r={r}");
            if (pair.d_plus..=pair.d_minus).contains(&r) {
                ensure!((d - r).abs() <= 1e-9, "d*({r}) = {d} inside the net-zero zone");
            }
            prev = d;
            points += 1;
        }
        for edge in [pair.d_plus, pair.d_minus] {
            let (a, b) = (policy.decide((edge - 1e-9).max(0.0)).total, policy.decide(edge + 1e-9).total);
            ensure!((a - b).abs() < 1e-6, "jump {} at threshold {edge}", (a - b).abs());
        }

        let mut last = (f64::INFINITY, f64::NEG_INFINITY);
        for j in 0..=20 {
            let export = tariff.retail * (1.0 - j as f64 / 20.0);
            let t = TariffParams::new(tariff.retail, export, 0.0);
            let p = thresholds(&devices, &t).map_err(|e| e.to_string())?;
            ensure!(
                p.d_plus <= last.0 + 1e-12 && p.d_minus >= last.1 - 1e-12,
                "net-zero zone shrinks as the export rate falls to {export}"
            );
            last = (p.d_plus, p.d_minus);
        }
    }
    Ok(format!("50 instances, {points} grid points, max excess step {worst_excess:.1e}"))
}

fn surplus_ordering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    const FD: f64 = 1e-4;
    let mut checks = 0usize;
    for _ in 0..100 {
        let m = rng.gen_range(1..=4);
        let devices = random_devices(&mut rng, m);
        let tariff = random_tariff(&mut rng);
        let s = |r: f64, k: CustomerKind| surplus(&devices, &tariff, r, k).unwrap();
        let pair = thresholds(&devices, &tariff).map_err(|e| e.to_string())?;
        for j in 0..=60 {
            let r = j as f64 * 0.1;
            let active = s(r, CustomerKind::ActiveProsumer);
            let passive = s(r, CustomerKind::PassiveProsumer);
            let consumer = s(r, CustomerKind::Consumer);
            let fit = s(r, CustomerKind::FitProsumer);
            ensure!(active >= passive - 1e-9, "active {active} < passive {passive} at r={r}");
            ensure!(passive >= consumer - 1e-9, "passive {passive} < consumer {consumer} at r={r}");
            ensure!(active >= fit - 1e-9, "NEM active {active} < FiT {fit} at r={r}");
        }
        for _ in 0..5 {
            if pair.d_plus > 3.0 * FD {
                let r = rng.gen_range(FD..pair.d_plus - 2.0 * FD);
                let slope = (s(r + FD, CustomerKind::ActiveProsumer) - s(r - FD, CustomerKind::ActiveProsumer)) / (2.0 * FD);
                ensure!((slope - tariff.retail).abs() <= 1e-6, "slope {slope} vs retail {} at r={r}", tariff.retail);
                checks += 1;
            }
            let r = pair.d_minus + rng.gen_range(2.0 * FD..5.0);
            let slope = (s(r + FD, CustomerKind::ActiveProsumer) - s(r - FD, CustomerKind::ActiveProsumer)) / (2.0 * FD);
            ensure!((slope - tariff.export).abs() <= 1e-6, "slope {slope} vs export {} at r={r}", tariff.export);
            checks += 1;
        }
    }
    Ok(format!("100 instances, {checks} slope checks"))
}

fn mpc_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let m = rng.gen_range(1..=3);
        let devices = random_devices(&mut rng, m);
        let tariff = TariffParams { fixed: 0.0, ..random_tariff(&mut rng) };
        let r = rng.gen_range(0.0..8.0);
        let window = BillingWindow::new(vec![devices.clone()], tariff.clone()).map_err(|e| e.to_string())?;
        let out = run_billing_period(&window, &[r], &mut PerfectForecast::new(vec![r])).map_err(|e| e.to_string())?;
        let direct = optimal_consumption(&devices, &tariff, r, CustomerKind::ActiveProsumer).map_err(|e| e.to_string())?;
        for (a, b) in out.schedule[0].iter().zip(&direct.per_device) {
            ensure!((a - b).abs() <= 1e-10, "T=1 decision {a} vs single-period {b}");
        }
        let s = surplus(&devices, &tariff, r, CustomerKind::ActiveProsumer).map_err(|e| e.to_string())?;
        ensure!((out.surplus - s).abs() <= 1e-10, "T=1 surplus {} vs {s}", out.surplus);
    }

    let mut noisy = 0usize;
    for trial in 0..200 {
        let t_len = rng.gen_range(1..=4);
        let periods: Vec<Vec<DeviceModel>> = (0..t_len)
            .map(|_| {
                let m = rng.gen_range(1..=3);
                random_devices(&mut rng, m)
            })
            .collect();
        let tariff = TariffParams { fixed: 0.0, ..random_tariff(&mut rng) };
        let realized: Vec<f64> = (0..t_len).map(|_| rng.gen_range(0.0..4.0)).collect();
        let window = BillingWindow::new(periods.clone(), tariff.clone()).map_err(|e| e.to_string())?;
        let best = clairvoyant(&window, &realized).map_err(|e| e.to_string())?;
        let pooled: Vec<DeviceModel> = periods.iter().flatten().copied().collect();
        let oracle = surplus(&pooled, &tariff, realized.iter().sum(), CustomerKind::ActiveProsumer).map_err(|e| e.to_string())?;
        ensure!((best.surplus - oracle).abs() <= 1e-9, "clairvoyant {} vs pooled optimum {oracle}", best.surplus);
        let perfect = run_billing_period(&window, &realized, &mut PerfectForecast::new(realized.clone())).map_err(|e| e.to_string())?;
        ensure!(
            (perfect.surplus - oracle).abs() <= 1e-9,
            "perfect-forecast MPC {} vs optimum {oracle} (T={t_len})",
            perfect.surplus
        );
        let forecasters: Vec<Box<dyn netmeter::mpc::ForecastProvider>> = vec![
            Box::new(ScaledNoiseForecast::new(realized.clone(), 0.5, trial)),
            Box::new(BiasedForecast::new(realized.clone(), rng.gen_range(-1.0..1.0))),
            Box::new(Persistence { initial: rng.gen_range(0.0..4.0) }),
        ];
        for mut f in forecasters {
            let out = run_billing_period(&window, &realized, f.as_mut()).map_err(|e| e.to_string())?;
            ensure!(out.surplus <= oracle + 1e-9, "forecast-driven MPC {} beats clairvoyant {oracle}", out.surplus);
            noisy += 1;
        }
    }
    Ok(format!("200 collapse, 200 perfect-forecast, {noisy} noisy trials"))
}

fn rate_setter() -> Outcome {
    let set = ScenarioSet::single(vec![DeviceModel::new(1.0, 0.1, 20.0).unwrap()], vec![DerSample { der: 0.0, wholesale: 0.1 }])
        .map_err(|e| e.to_string())?;
    let case = |theta: f64| RateCase {
        set: &set,
        population: Population {
            gamma: 0.0,
            adopter: CustomerKind::ActiveProsumer,
            cost: CostModel::Wholesale,
            fixed_cost: theta,
        },
        rule: TariffParams::nem1,
        bracket: (0.0, 1.0),
    };
    // Revenue net of cost is (p - 0.1)(10 - 10p); break-even takes the smaller root.
    let root = |theta: f64| (1.1 - (1.21 - 4.0 * (0.1 + 0.1 * theta)).sqrt()) / 2.0;
    let be = case(0.8).solve().map_err(|e| e.to_string())?;
    ensure!((be.retail() - 0.2).abs() <= 1e-6, "theta 0.8 gives {}", be.retail());
    ensure!((root(0.8) - 0.2).abs() < 1e-12, "oracle root {}", root(0.8));
    match case(2.5).solve() {
        Err(Error::DeathSpiral { .. }) => {}
        other => return Err(format!("theta 2.5 gave {other:?}")),
    }
    let mut audited = 0;
    for k in 1..=40 {
        let theta = k as f64 * 0.05;
        let be = case(theta).solve().map_err(|e| e.to_string())?;
        let residual = be.evaluation.utility_surplus.abs();
        ensure!(residual <= 1e-6 * theta, "residual {residual:e} at theta {theta}");
        ensure!((be.retail() - root(theta)).abs() <= 1e-6, "theta {theta}: {} vs {}", be.retail(), root(theta));
        audited += 1;
    }
    let study = study();
    let theta = study.config.economics.fixed_cost();
    for rule in study.config.policy_rules() {
        let be = study.break_even(&rule, 0, 0.2, theta).map_err(|e| format!("{}: {e}", rule.name))?;
        let residual = be.evaluation.utility_surplus.abs();
        ensure!(residual <= 1e-6 * theta, "{}: residual {residual:e}", rule.name);
        ensure!(residual <= break_even_tolerance(theta), "{}: residual above solver tolerance", rule.name);
        audited += 1;
    }
    Ok(format!("pi+ = {:.9}, {audited} break-even residuals audited", be.retail()))
}

fn potentials(sweep: &SweepResult, policy: &str) -> Vec<Option<f64>> {
    sweep.row(policy).unwrap().iter().map(|c| c.metrics.as_ref().map(|m| m.potential)).collect()
}

fn table_one() -> Outcome {
    let study = study();
    let rules = study.config.select_policies(&study.config.sweep.policies).map_err(|e| e.to_string())?;
    let sweep = run_short_run_sweep(&study, &study.config.sweep.gammas, &rules).map_err(|e| e.to_string())?;

    let (nem1, fit1) = (potentials(&sweep, "NEM 1.0"), potentials(&sweep, "FiT 1.0"));
    ensure!(nem1 == fit1, "NEM 1.0 {nem1:?} differs from FiT 1.0 {fit1:?}");

    let (nem2, fit2) = (potentials(&sweep, "NEM 2.0"), potentials(&sweep, "FiT 2.0"));
    for (i, (a, b)) in nem2.iter().zip(&fit2).enumerate() {
        if let (Some(a), Some(b)) = (a, b) {
            ensure!(a >= b, "NEM 2.0 {a} < FiT 2.0 {b} at gamma {}", sweep.gammas[i]);
        }
    }

    let (nem_smc, fit_smc) = (potentials(&sweep, "NEM SMC"), potentials(&sweep, "FiT SMC"));
    for (i, cell) in sweep.row("FiT SMC").unwrap().iter().enumerate() {
        if let Some(m) = &cell.metrics {
            if m.payback == Payback::Infinite {
                ensure!(m.potential == 0.0, "FiT SMC potential {} with no payback", m.potential);
            }
            if let Some(a) = nem_smc[i] {
                ensure!(a >= m.potential, "NEM SMC {a} < FiT SMC {} at gamma {}", m.potential, sweep.gammas[i]);
            }
        }
    }
    ensure!(fit_smc.iter().flatten().all(|&p| p == 0.0), "FiT SMC potentials {fit_smc:?}");

    for policy in ["NEM 1.0", "FiT 1.0", "NEM 2.0", "FiT 2.0"] {
        let feasible: Vec<f64> = potentials(&sweep, policy).into_iter().flatten().collect();
        ensure!(feasible.windows(2).all(|w| w[1] >= w[0]), "{policy} potential not nondecreasing: {feasible:?}");
    }

    let mut spiral_from = Vec::new();
    for policy in ["NEM 1.0", "FiT 1.0"] {
        let row = potentials(&sweep, policy);
        let first = row.iter().position(|p| p.is_none());
        let Some(first) = first else {
            return Err(format!("{policy} never spirals on the grid"));
        };
        ensure!(row[first..].iter().all(|p| p.is_none()), "{policy} recovers after a death spiral");
        spiral_from.push(sweep.gammas[first]);
    }
    Ok(format!("1.0 policies spiral from gamma {:.2}", spiral_from[0]))
}

fn spiral_year(r: &ScenarioResult) -> Option<u32> {
    match r.status {
        RunStatus::DeathSpiral { year } => Some(year),
        RunStatus::Completed => None,
    }
}

fn cost_shifts(r: &ScenarioResult) -> Vec<f64> {
    r.records.iter().filter_map(|rec| rec.metrics.as_ref().map(|m| m.cost_shift)).collect()
}

fn long_run() -> Outcome {
    let study = study();
    let rules = study.config.select_policies(&study.config.long_run.policies).map_err(|e| e.to_string())?;
    let results = run_long_runs(&study, &rules).map_err(|e| e.to_string())?;
    let get = |name: &str| results.iter().find(|r| r.policy == name).ok_or(format!("{name} missing"));

    let (nem1, nem2, nem3) = (get("NEM 1.0")?, get("NEM 2.0")?, get("NEM 3.0")?);
    let y1 = spiral_year(nem1).ok_or("NEM 1.0 never becomes infeasible")?;
    if let Some(y2) = spiral_year(nem2) {
        ensure!(y1 < y2, "NEM 1.0 spirals in year {y1}, NEM 2.0 in year {y2}");
    }

    let peak1 = cost_shifts(nem1).into_iter().fold(0.0, f64::max);
    let worst3 = cost_shifts(nem3).into_iter().map(f64::abs).fold(0.0, f64::max);
    ensure!(worst3 < 0.05 * peak1, "NEM 3.0 |cost shift| {worst3} vs NEM 1.0 peak {peak1}");
    let terminal = |r: &ScenarioResult| r.records.last().map(|x| x.gamma).unwrap_or(r.initial_gamma);
    for r in &results {
        if r.policy != "NEM 3.0" {
            ensure!(terminal(nem3) < terminal(r), "NEM 3.0 terminal gamma {} not below {} ({})", terminal(nem3), terminal(r), r.policy);
        }
    }

    let mut declines = Vec::new();
    for name in ["NEM D2", "NEM D3"] {
        let psi = cost_shifts(get(name)?);
        let peak = psi.iter().cloned().enumerate().fold((0, f64::NEG_INFINITY), |a, (i, v)| if v > a.1 { (i, v) } else { a });
        ensure!(peak.0 > 0, "{name} cost shift never rises: {psi:?}");
        let after = psi[peak.0..].windows(2).position(|w| w[1] < w[0]);
        let Some(k) = after else {
            return Err(format!("{name} cost shift never declines after its peak: {psi:?}"));
        };
        declines.push(format!("{name} peaks in year {} and falls in year {}", peak.0 + 1, peak.0 + k + 2));
    }
    Ok(format!("NEM 1.0 spirals in year {y1}; {}", declines.join("; ")))
}

fn adoption_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10_000 {
        let params = AdoptionParams {
            market_size: rng.gen_range(0.05..1.0),
            payback_sensitivity: rng.gen_range(-0.5..-0.01),
            innovation: rng.gen_range(0.001..0.2),
            imitation: rng.gen_range(0.0..1.0),
            degradation: 0.005,
            interest: 0.02,
            horizon_years: 25,
        };
        let gamma = rng.gen_range(0.0..0.999);
        let potential = rng.gen_range(0.0..=1.0);
        let next = adoption_update(gamma, potential, &params).map_err(|e| e.to_string())?;
        ensure!(next >= gamma, "update decreased {gamma} to {next}");
        ensure!(next <= gamma.max(potential) && next <= 1.0, "update {next} exceeds max({gamma}, {potential})");
    }

    let bass = AdoptionParams {
        market_size: 0.3,
        payback_sensitivity: -0.1,
        innovation: 0.5,
        imitation: 0.5,
        degradation: 0.0,
        interest: 0.0,
        horizon_years: 25,
    };
    ensure!(bass_cdf(&bass, 0.0) == 0.0, "bass_cdf(0) != 0");
    ensure!((bass_cdf(&bass, 1.0) - 0.5f64.tanh()).abs() <= 1e-12, "p = q tanh case");
    for k in 0..=999 {
        let y = k as f64 / 1000.0;
        let back = bass_cdf(&bass, bass_cdf_inverse(&bass, y).map_err(|e| e.to_string())?);
        ensure!((back - y).abs() <= 1e-12, "round trip {y} -> {back}");
    }
    ensure!(bass_cdf_inverse(&bass, 1.0).is_err(), "inverse accepts y = 1");
    ensure!(SATURATION < 1.0, "saturation guard");

    let pb = |s: f64, c: f64, nu: f64| payback_time(s, c, nu, 0.0, 25).map_err(|e| e.to_string());
    ensure!(pb(100.0, 250.0, 0.0)? == Payback::Years(2), "payback 100/250");
    ensure!(pb(100.0, 250.0, 0.1)? == Payback::Years(2), "payback with degradation");
    ensure!(pb(0.0, 250.0, 0.0)? == Payback::Infinite, "payback without savings");

    let eta = market_potential(&bass, Payback::Years(5));
    ensure!((eta - 0.3 * (-0.5f64).exp()).abs() <= 1e-12, "market potential {eta}");
    ensure!((market_potential(&bass, Payback::Years(0)) - 0.3).abs() <= 1e-12, "zero payback");
    ensure!(market_potential(&bass, Payback::Infinite) == 0.0, "infinite payback");
    Ok("10000 updates, 1000 round trips".into())
}

fn write_long_run(study: &Study, dir: &Path) -> std::result::Result<Vec<PathBuf>, String> {
    let rules = study.config.select_policies(&study.config.long_run.policies).map_err(|e| e.to_string())?;
    let results = run_long_runs(study, &rules).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for format in [Format::Csv, Format::JsonLines] {
        outputs.push(report::long_run_table(&results).write(dir, "long_run", format).map_err(|e| e.to_string())?);
        outputs.push(report::cost_shift_table(&results).write(dir, "cost_shift", format).map_err(|e| e.to_string())?);
        outputs.push(report::adoption_table(&results).write(dir, "adoption", format).map_err(|e| e.to_string())?);
    }
    let t = &study.config.traces;
    let manifest = Manifest::new("run", study.seed, &config_path(), &[&t.load, &t.solar, &t.prices], &outputs).map_err(|e| e.to_string())?;
    outputs.push(manifest.write(dir).map_err(|e| e.to_string())?);
    Ok(outputs)
}

fn determinism() -> Outcome {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = write_long_run(&study(), a.path())?;
    let second = write_long_run(&study(), b.path())?;
    ensure!(first.len() == second.len(), "different output sets");
    let mut bytes = 0;
    for (x, y) in first.iter().zip(&second) {
        let (bx, by) = (fs::read(x).unwrap(), fs::read(y).unwrap());
        ensure!(bx == by, "{} differs between runs", x.file_name().unwrap().to_string_lossy());
        bytes += bx.len();
    }
    Ok(format!("{} files, {bytes} bytes identical", first.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("payment identity", payment_identity, Duration::from_secs(5)),
        ("threshold policy vs grid oracle", theorem_one_oracle, Duration::from_secs(60)),
        ("zone structure", zone_structure, Duration::from_secs(10)),
        ("surplus ordering", surplus_ordering, Duration::MAX),
        ("receding-horizon scheduling", mpc_suite, Duration::from_secs(60)),
        ("rate setter", rate_setter, Duration::MAX),
        ("short-run sweep orderings", table_one, Duration::from_secs(300)),
        ("long-run mechanisms", long_run, Duration::from_secs(300)),
        ("adoption dynamics", adoption_suite, Duration::MAX),
        ("determinism", determinism, Duration::MAX),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let label = format!("{:>2} {name}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > *limit => Err(format!("took {elapsed:.2?}, limit {limit:.0?}")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {label} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {label} ({elapsed:.2?}): {why}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
