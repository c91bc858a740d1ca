use polyflow::metric_core::RefineOptions;
use polyflow::scenarios::{run_epidemic, EpidemicParams, Profile, Series, TimeSpec};

fn params() -> EpidemicParams {
    EpidemicParams {
        rho_s: 0.6,
        rho_v: Profile::Cells((0..400).map(|k| if k < 200 { 0.4 } else { 0.1 }).collect()),
        theta: 0.2,
        mu: 0.0,
        vaccination: Series::Steps {
            times: vec![0.0, 0.4],
            values: vec![0.1, 0.05],
        },
        t_star: 1.0,
        s0: 0.7,
        i0: 0.2,
        r0: 0.0,
        v0: Profile::Cells((0..400).map(|k| 0.05 + 0.05 * (k as f64 / 400.0)).collect()),
        r: 1.0,
        cells: 400,
        n_sub: 10,
    }
}

fn time() -> TimeSpec {
    TimeSpec {
        t0: 0.0,
        horizon: 1.5,
        macro_step: 0.25,
    }
}

fn opts() -> RefineOptions {
    RefineOptions {
        j0: 2,
        j_max: 8,
        tol: 1e-7,
    }
}

/// Piecewise-linear interpolation of the recorded infected population.
fn interp(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    let k = ts.partition_point(|s| *s <= t).clamp(1, ts.len() - 1);
    let (a, b) = (ts[k - 1], ts[k]);
    ys[k - 1] + (ys[k] - ys[k - 1]) * (t - a) / (b - a)
}

#[test]
fn vaccinated_profile_matches_the_characteristic_formula() {
    let p = params();
    let run = run_epidemic(&p, &time(), opts()).unwrap();
    let ts = run.trajectory.column("t").unwrap();
    let is = run.trajectory.column("I").unwrap();
    let t = time().end();
    let dx = 1.0 / 400.0;
    let rho_v = |a: f64| if a < 0.5 { 0.4 } else { 0.1 };
    let v0 = |a: f64| {
        let k = ((a / dx).floor() as usize).min(399);
        0.05 + 0.05 * (k as f64 / 400.0)
    };
    let inflow = |s: f64| if s <= 0.4 { 0.1 } else { 0.05 };
    let mut err = 0.0;
    for (k, v) in run.state.w.values().iter().enumerate() {
        let tau = (k as f64 + 0.5) * dx;
        // Along the characteristic the age at time s is tau - t + s.
        let (start, datum) = if t <= tau {
            (0.0, v0(tau - t))
        } else {
            (t - tau, inflow(t - tau))
        };
        let n = 4000;
        let h = (t - start) / n as f64;
        let exponent: f64 = (0..n)
            .map(|j| {
                let s = start + (j as f64 + 0.5) * h;
                rho_v(tau - t + s) * interp(&ts, &is, s) * h
            })
            .sum();
        err += (v - datum * (-exponent).exp()).abs() * dx;
    }
    assert!(err <= 1e-3, "L1 error {err}");
}

#[test]
fn total_population_is_conserved_without_deaths() {
    let run = run_epidemic(&params(), &time(), opts()).unwrap();
    let total = run.trajectory.column("total").unwrap();
    let drift = (total.last().unwrap() - total[0]).abs() / time().horizon;
    assert!(drift <= 1e-4, "drift {drift}");
    assert!(run.trajectory.warnings.is_empty());
}

#[test]
fn deaths_are_the_only_loss() {
    let mut p = params();
    p.mu = 0.1;
    let run = run_epidemic(&p, &time(), opts()).unwrap();
    let t = run.trajectory.column("t").unwrap();
    let i = run.trajectory.column("I").unwrap();
    let total = run.trajectory.column("total").unwrap();
    let deaths: f64 = t
        .windows(2)
        .zip(i.windows(2))
        .map(|(t, i)| 0.05 * (t[1] - t[0]) * (i[0] + i[1]))
        .sum();
    let balance = (total.last().unwrap() - total[0] + deaths).abs() / total[0];
    assert!(balance <= 1e-4 * time().horizon, "balance {balance}");
}
