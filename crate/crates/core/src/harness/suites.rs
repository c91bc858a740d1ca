//! Verification suites. Each one evaluates a family of estimates on small
//! deterministic problems and returns one [`Check`] per inequality.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::report::Check;
use crate::claw::{claw_solve, claw_trace, kruzkov_residual, ParamFlux};
use crate::error::Result;
use crate::ibvp::{ibvp_solve_with, IbvpBounds, IbvpCoefficients, IbvpOptions, IbvpProcess};
use crate::measure_law::{
    measure_domain_bound, measure_trace, weak_residual, MeasureBounds, MeasureCoefficients,
    TestFunction,
};
use crate::metric_core::{
    coupling_bounds, euler_polygonal, refine_to_process, CoupledState, LocalFlow, Metric, Process,
    RefineOptions,
};
use crate::ode::{ode_solve, OdeField};
use crate::renewal::{
    ivp_domain_bounds, renewal_solve_with, RenewalBounds, RenewalCoefficients, SolveOptions,
};
use crate::scenarios::{rotation_exact, rotation_flow, RotationParams};
use crate::spaces::{
    bv_estimate_checks, flat_distance, AtomicMeasure, BvTimeSeries, Grid, GridFunction,
};
use crate::transport::Projection;

/// Assigns the elapsed time of a group evenly to its checks.
fn timed(f: impl FnOnce() -> Result<Vec<Check>>) -> Result<Vec<Check>> {
    let start = Instant::now();
    let checks = f()?;
    let each = start.elapsed().as_secs_f64() / checks.len().max(1) as f64;
    Ok(checks.into_iter().map(|c| c.timed(each)).collect())
}

/// `d(restarted, direct) <= 5 * single-level tolerance`.
fn semigroup(name: &str, gap: f64, single: f64) -> Check {
    Check::bound(
        format!("{name}.semigroup"),
        "semigroup law of the process under restart",
        gap,
        5.0 * single,
        1e-12,
    )
}

/// Tangency, stability and semigroup checks on the rotation system
/// `u' = w`, `w' = -u` over `[0, 1]`, plus the semigroup law of the ODE
/// solver alone.
pub fn core_suite(seed: u64) -> Result<Vec<Check>> {
    let mut out = timed(|| {
        let flow = rotation_flow(&RotationParams::default(), 0.0, 1.0)?;
        let bounds = coupling_bounds(&flow.on_u.constants(), &flow.on_w.constants());
        let x = CoupledState::new(vec![1.0], vec![0.0]);
        let mut checks = Vec::new();
        for j in 3..=8 {
            let tau = 0.5f64.powi(j);
            let f = flow.evaluate(tau, 0.0, &x)?;
            let (u, w) = rotation_exact(tau);
            let lhs = ((f.u[0] - u).abs() + (f.w[0] - w).abs()) / tau;
            checks.push(Check::bound(
                format!("core.tangency.j{j}"),
                "tangency of process and local flow",
                lhs,
                bounds.tangency_rhs(tau),
                0.0,
            ));
        }
        Ok(checks)
    })?;

    out.extend(timed(|| {
        let flow = rotation_flow(&RotationParams::default(), 0.0, 1.0)?;
        let bounds = coupling_bounds(&flow.on_u.constants(), &flow.on_w.constants());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut point = || {
            CoupledState::new(
                vec![rng.gen_range(-1.0..1.0)],
                vec![rng.gen_range(-1.0..1.0)],
            )
        };
        let mut checks = Vec::new();
        for k in 0..20 {
            let (a, b) = (point(), point());
            let eps = 1.0 / 64.0;
            let fa = euler_polygonal(&flow, 1.0, 0.0, &a, eps)?;
            let fb = euler_polygonal(&flow, 1.0, 0.0, &b, eps)?;
            checks.push(Check::bound(
                format!("core.stability.pair{k:02}"),
                "Lipschitz stability of Euler polygonals",
                fa.distance(&fb),
                bounds.stability_factor(1.0) * a.distance(&b) * (1.0 + 1e-6),
                0.0,
            ));
        }
        Ok(checks)
    })?);

    out.extend(timed(|| {
        let flow = rotation_flow(&RotationParams::default(), 0.0, 1.0)?;
        let x = CoupledState::new(vec![1.0], vec![0.0]);
        let opts = RefineOptions {
            j0: 2,
            j_max: 20,
            tol: 1e-4,
        };
        let direct = refine_to_process(&flow, 1.0, 0.0, &x, opts)?;
        let half = refine_to_process(&flow, 0.5, 0.0, &x, opts)?;
        let restarted = refine_to_process(&flow, 0.5, 0.5, &half.state, opts)?;
        Ok(vec![semigroup(
            "core.coupled",
            direct.state.distance(&restarted.state),
            opts.tol,
        )])
    })?);

    out.extend(timed(|| {
        let field = OdeField::new(
            |t, u, w: &f64| vec![w * u[1] + t.sin(), -u[0] * u[0] * 0.5],
            2.0,
            2.0,
            8.0,
        )?;
        let u0 = [0.5, -0.3];
        let w = 1.2;
        let direct = ode_solve(&field, 0.0, 1.0, &u0, &w, 8)?;
        let fine = ode_solve(&field, 0.0, 1.0, &u0, &w, 16)?;
        let mid = ode_solve(&field, 0.0, 0.5, &u0, &w, 8)?;
        let restarted = ode_solve(&field, 0.5, 1.0, &mid, &w, 8)?;
        Ok(vec![semigroup(
            "core.ode",
            direct.distance(&restarted),
            direct.distance(&fine),
        )])
    })?);
    Ok(out)
}

fn burgers() -> ParamFlux<()> {
    ParamFlux::new(|u, _| 0.5 * u * u, 2.0, vec![0.0]).expect("finite certificate")
}

/// Random data on 20 cells embedded in a 120-cell box.
fn random_block(rng: &mut ChaCha8Rng) -> GridFunction {
    let g = Grid::line(-3.0, 3.0, 120).expect("valid grid");
    let mut vals = vec![0.0; 120];
    for v in &mut vals[50..70] {
        *v = rng.gen_range(-2.0..2.0);
    }
    GridFunction::from_values(g, vals).expect("matching length")
}

/// Burgers Riemann problems at `dx = 1/400`, and contraction, TVD,
/// conservation and entropy over random pairs.
pub fn claw_suite(seed: u64) -> Result<Vec<Check>> {
    let mut out = timed(|| {
        let f = burgers();
        let g = Grid::line(-4.0, 4.0, 3200)?;
        let ax = *g.axis(0);
        let dx = ax.dx;
        let window =
            |lo: f64, hi: f64| (0..ax.n).filter(move |&i| ax.center(i) > lo && ax.center(i) < hi);

        let u0 = GridFunction::indicator(g.clone(), -2.0, 0.0);
        let u = claw_solve(&f, &u0, &(), 0.0, 1.0, 0.9)?;
        let exact = GridFunction::indicator(g.clone(), -1.0, 0.5);
        let shock: f64 = window(-0.5, 3.0)
            .map(|i| (u.values()[i] - exact.values()[i]).abs() * dx)
            .sum();

        let u0 = GridFunction::indicator(g.clone(), 0.0, 2.0);
        let u = claw_solve(&f, &u0, &(), 0.0, 1.0, 0.9)?;
        let prim = |x: f64| {
            if x <= 0.0 {
                0.0
            } else if x <= 1.0 {
                0.5 * x * x
            } else {
                x - 0.5
            }
        };
        let rare: f64 = window(-1.0, 1.5)
            .map(|i| (u.values()[i] - (prim(ax.edge(i + 1)) - prim(ax.edge(i))) / dx).abs() * dx)
            .sum();
        Ok(vec![
            Check::bound(
                "claw.burgers_shock",
                "Riemann problem: shock",
                shock,
                2.0 * dx,
                0.0,
            ),
            Check::bound(
                "claw.burgers_rarefaction",
                "Riemann problem: rarefaction",
                rare,
                5.0 * dx * dx.ln().abs(),
                0.0,
            ),
        ])
    })?;

    out.extend(timed(|| {
        let f = burgers();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut contraction, mut tvd, mut drift, mut entropy) =
            (f64::INFINITY, f64::INFINITY, 0.0f64, f64::INFINITY);
        let mut worst = [(0.0, 0.0); 2];
        for _ in 0..50 {
            let (a, b) = (random_block(&mut rng), random_block(&mut rng));
            let sa = claw_solve(&f, &a, &(), 0.0, 0.4, 0.9)?;
            let sb = claw_solve(&f, &b, &(), 0.0, 0.4, 0.9)?;
            let (l, r) = (sa.l1_distance(&sb)?, a.l1_distance(&b)?);
            if r - l < contraction {
                contraction = r - l;
                worst[0] = (l, r);
            }
            let (l, r) = (sa.total_variation_extended(), a.total_variation_extended());
            if r - l < tvd {
                tvd = r - l;
                worst[1] = (l, r);
            }
            drift = drift.max((sa.integral() - a.integral()).abs());
            let k = rng.gen_range(-2.0..2.0);
            let trace = claw_trace(&f, &a, &(), 0.0, 0.4, 0.9)?;
            let (cell, weighted) = kruzkov_residual(&f, &trace, &(), k, |_, x| (-(x * x)).exp());
            entropy = entropy.min(cell).min(weighted);
        }
        Ok(vec![
            Check::bound(
                "claw.contraction",
                "L1 contraction of entropy solutions",
                worst[0].0,
                worst[0].1,
                1e-10,
            ),
            Check::bound(
                "claw.tvd",
                "total variation diminishing",
                worst[1].0,
                worst[1].1,
                1e-10,
            ),
            Check::bound(
                "claw.conservation",
                "conservation of the integral",
                drift,
                0.0,
                1e-12,
            ),
            Check::bound(
                "claw.entropy",
                "Kruzkov entropy inequalities",
                -entropy,
                0.0,
                1e-10,
            ),
        ])
    })?);

    out.extend(timed(|| {
        let f = burgers();
        let g = Grid::line(-4.0, 4.0, 3200)?;
        let u0 = GridFunction::indicator(g, -2.0, 0.0);
        let direct = claw_solve(&f, &u0, &(), 0.0, 0.8, 0.9)?;
        let mid = claw_solve(&f, &u0, &(), 0.0, 0.4, 0.9)?;
        let restarted = claw_solve(&f, &mid, &(), 0.4, 0.8, 0.9)?;
        Ok(vec![semigroup(
            "claw",
            direct.l1_distance(&restarted)?,
            2.0 * u0.grid().axis(0).dx,
        )])
    })?);
    Ok(out)
}

/// `int |f''|` by the midpoint rule on `[a, b]` with second differences.
fn second_derivative_l1(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| {
            let x = a + (i as f64 + 0.5) * h;
            ((f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)).abs() * h
        })
        .sum()
}

/// Smallest radius whose three domain functions at `t = 0` dominate the
/// given norms; `unit` are the domain functions for `R = 1`.
fn tight_radius(norms: [f64; 3], unit: [f64; 3], offsets: [f64; 3]) -> f64 {
    (0..3)
        .map(|k| (norms[k] + offsets[k]) / unit[k])
        .fold(0.0, f64::max)
}

/// Exact solutions of the whole-space solver at `dx = 1/400`, domain
/// margins along a trajectory, and restart consistency.
pub fn renewal_suite() -> Result<Vec<Check>> {
    let line = || Grid::line(-1.0, 3.0, 1600);
    let dx = 1.0 / 400.0;
    let mut out = timed(|| {
        let translate = RenewalCoefficients::new(
            1,
            |_, _, _: &()| [1.0, 0.0],
            |_, _, _| 0.0,
            |_, _, _| 0.0,
            RenewalBounds {
                v_inf: 1.0,
                ..Default::default()
            },
        )?;
        let u0 = GridFunction::indicator(line()?, 0.0, 1.0);
        let exact = GridFunction::indicator(line()?, 0.5, 1.5);
        let u = renewal_solve_with(&translate, &u0, &(), 0.0, 0.5, &SolveOptions::new(10))?;
        let decay = RenewalCoefficients::new(
            1,
            |_, _, _: &()| [0.0, 0.0],
            |_, _, _| -1.0,
            |_, _, _| 0.0,
            RenewalBounds {
                m_inf: 1.0,
                ..Default::default()
            },
        )?;
        let bump = GridFunction::from_fn(line()?, |x| {
            if (0.0..2.0).contains(&x[0]) {
                (x[0] * (2.0 - x[0])).powi(2)
            } else {
                0.0
            }
        });
        let d = renewal_solve_with(&decay, &bump, &(), 0.0, 0.7, &SolveOptions::new(10))?;
        let exact_decay = bump.map(|v| v * (-0.7f64).exp());
        Ok(vec![
            Check::bound(
                "renewal.translation",
                "exact solution: translation",
                u.l1_distance(&exact)?,
                2.0 * dx,
                0.0,
            ),
            Check::bound(
                "renewal.decay",
                "exact solution: linear decay",
                d.l1_distance(&exact_decay)?,
                1e-3,
                0.0,
            ),
        ])
    })?;

    out.extend(timed(|| {
        let a = 0.5;
        let v = move |x: f64| a * (-x * x).exp();
        let m = |x: f64| -0.3 * (-x * x).exp();
        let bounds = RenewalBounds {
            v1: 1.01 * second_derivative_l1(v, -8.0, 8.0, 20000),
            v_lip: a * 2f64.sqrt() * (-0.5f64).exp(),
            v_inf: a,
            m_inf: 0.3 + 0.6,
            m_lip: 0.6,
            ..Default::default()
        };
        let coef = RenewalCoefficients::new(
            1,
            move |_, x: &[f64; 2], _: &()| [v(x[0]), 0.0],
            move |_, x, _| m(x[0]),
            |_, _, _| 0.0,
            bounds,
        )?;
        let u0 = GridFunction::from_fn(line()?, |x| {
            if (0.0..1.0).contains(&x[0]) {
                1.0 + 0.5 * (3.0 * x[0]).sin()
            } else {
                0.0
            }
        });
        let horizon = 0.25;
        let unit = ivp_domain_bounds(0.0, 1.0, horizon, &bounds)?;
        let radius = tight_radius(
            [u0.l1_norm(), u0.linf_norm(), u0.total_variation()],
            [unit.alpha1, unit.alpha_inf, unit.alpha_tv],
            [0.0; 3],
        );
        let opts = SolveOptions::cell_average(10);
        let mut worst = f64::INFINITY;
        let mut u = u0.clone();
        let steps = 10;
        for k in 0..=steps {
            let t = horizon * k as f64 / steps as f64;
            if k > 0 {
                u = renewal_solve_with(
                    &coef,
                    &u,
                    &(),
                    horizon * (k - 1) as f64 / steps as f64,
                    t,
                    &opts,
                )?;
            }
            let b = ivp_domain_bounds(t, radius, horizon, &bounds)?;
            worst = worst.min(b.margins(&u).into_iter().fold(f64::INFINITY, f64::min));
        }
        let slack = 10.0 * dx * u0.total_variation();
        let direct = renewal_solve_with(&coef, &u0, &(), 0.0, horizon, &SolveOptions::new(10))?;
        let mid = renewal_solve_with(&coef, &u0, &(), 0.0, 0.5 * horizon, &SolveOptions::new(10))?;
        let restarted = renewal_solve_with(
            &coef,
            &mid,
            &(),
            0.5 * horizon,
            horizon,
            &SolveOptions::new(10),
        )?;
        Ok(vec![
            Check::bound(
                "renewal.domain_margins",
                "invariant domain of the renewal process",
                0.0 - worst,
                0.0,
                slack,
            ),
            semigroup("renewal", direct.l1_distance(&restarted)?, 2.0 * dx),
        ])
    })?);
    Ok(out)
}

/// Inflow solutions of the boundary-value solver at `dx = 1/400`, domain
/// margins with a jumping boundary datum, and restart consistency.
pub fn ibvp_suite() -> Result<Vec<Check>> {
    let dx = 1.0 / 400.0;
    let mut out = timed(|| {
        let coef = |m: f64| {
            IbvpCoefficients::new(
                |_, _| 1.0,
                move |_, _, _: &()| m,
                |_, _, _| 0.0,
                BvTimeSeries::constant(1.0),
                IbvpBounds {
                    v_min: 1.0,
                    v_max: 1.0,
                    v_inf: 1.0,
                    m_inf: m.abs(),
                    b_inf: 1.0,
                    ..Default::default()
                },
            )
        };
        let g = Grid::line(0.0, 3.0, 1200)?;
        let u0 = GridFunction::zeros(g.clone());
        let opts = IbvpOptions::new(10);
        let fill = ibvp_solve_with(&coef(0.0)?, &u0, &(), 0.0, 1.0, &opts)?;
        let decay = ibvp_solve_with(&coef(-1.0)?, &u0, &(), 0.0, 1.0, &opts)?;
        let exact_decay =
            GridFunction::from_fn(g.clone(), |x| if x[0] < 1.0 { (-x[0]).exp() } else { 0.0 });
        Ok(vec![
            Check::bound(
                "ibvp.inflow_fill",
                "exact solution: boundary inflow",
                fill.l1_distance(&GridFunction::indicator(g, 0.0, 1.0))?,
                2.0 * dx,
                0.0,
            ),
            Check::bound(
                "ibvp.inflow_decay",
                "exact solution: decaying inflow",
                decay.l1_distance(&exact_decay)?,
                1e-3,
                0.0,
            ),
        ])
    })?;

    out.extend(timed(|| {
        let b = BvTimeSeries::new(vec![0.0, 0.3], vec![1.0, 0.5])?;
        let bounds = IbvpBounds {
            v_min: 1.0,
            v_max: 1.2,
            v_inf: 1.2,
            v_lip: 0.2,
            m_inf: 0.3,
            b1: 1.0,
            b_inf: 1.0,
            ..Default::default()
        };
        let coef = IbvpCoefficients::new(
            |_, x: f64| 1.0 + 0.2 * x.sin().powi(2),
            |_, _, _: &()| -0.3,
            |_, _, _| 0.0,
            b.clone(),
            bounds,
        )?;
        let g = Grid::line(0.0, 4.0, 1600)?;
        let u0 = GridFunction::indicator(g, 0.5, 1.5);
        let horizon = 0.5;
        // Radius making the three bounds tight at t = 0.
        let k = bounds.m_inf + bounds.v_lip;
        let jump0 = (b.eval(0.0)? - u0.values()[0]).abs();
        let radius = [
            (u0.l1_norm() + bounds.v_max * bounds.b_inf * horizon)
                / (-bounds.m_inf * horizon).exp(),
            u0.linf_norm() / (-bounds.m_inf * horizon).exp(),
            (u0.total_variation()
                + jump0
                + bounds.b_inf * k * horizon
                + b.total_variation(0.0, horizon))
                / ((1.0 - k * horizon) * (k * horizon).exp()),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let opts = IbvpOptions {
            n_sub: 10,
            projection: Projection::CellAverage,
            open_outflow: false,
        };
        let process = IbvpProcess::new(coef.clone(), opts, 0.0, horizon, radius)?;
        let mut worst = f64::INFINITY;
        let mut u = u0.clone();
        let steps = 10;
        for s in 0..=steps {
            let t = horizon * s as f64 / steps as f64;
            if s > 0 {
                u = ibvp_solve_with(
                    &coef,
                    &u,
                    &(),
                    horizon * (s - 1) as f64 / steps as f64,
                    t,
                    &opts,
                )?;
            }
            worst = worst.min(
                process
                    .margins(t, &u)?
                    .into_iter()
                    .fold(f64::INFINITY, f64::min),
            );
        }
        let slack = 10.0 * dx * u0.total_variation();
        let point = IbvpOptions::new(10);
        let direct = ibvp_solve_with(&coef, &u0, &(), 0.0, horizon, &point)?;
        let mid = ibvp_solve_with(&coef, &u0, &(), 0.0, 0.5 * horizon, &point)?;
        let restarted = ibvp_solve_with(&coef, &mid, &(), 0.5 * horizon, horizon, &point)?;
        Ok(vec![
            Check::bound(
                "ibvp.domain_margins",
                "invariant domain of the boundary-value process",
                0.0 - worst,
                0.0,
                slack,
            ),
            semigroup("ibvp", direct.l1_distance(&restarted)?, 2.0 * dx),
        ])
    })?);
    Ok(out)
}

/// Coefficients with every ingredient switched on: variable speed, signed
/// death rate and state-dependent offspring at a fixed site.
pub fn measure_fixture() -> MeasureCoefficients<()> {
    MeasureCoefficients::new(
        |t, _, _, x| 0.5 * (1.0 + t).recip() * (1.0 - (-x).exp()),
        |_, _, _, x| 0.3 * x.sin(),
        |_, _, _, y| AtomicMeasure::new(vec![(1.0, 0.2 + 0.1 * y.cos())]).expect("finite atom"),
        MeasureBounds {
            b: 0.5,
            c: 0.3,
            e: 0.3,
            l_hat: 0.0,
        },
    )
}

fn three_atoms() -> AtomicMeasure {
    AtomicMeasure::new(vec![(0.5, 1.0), (1.5, 0.5), (3.0, 0.25)]).expect("valid atoms")
}

/// Weak-formulation order, the mass bound and flat-distance examples.
pub fn measure_suite() -> Result<Vec<Check>> {
    let mut out = timed(|| {
        let c = measure_fixture();
        let mu0 = three_atoms();
        let test = TestFunction::poly_cutoff(2, 1);
        let mut res = Vec::new();
        for dt in [0.02, 0.01, 0.005] {
            let tr = measure_trace(&c, &mu0, &(), 0.0, 0.5, dt)?;
            res.push(weak_residual(&c, &tr, &(), &test).abs());
        }
        let order = (res[1] / res[2]).log2().min((res[0] / res[1]).log2());
        Ok(vec![Check::bound(
            "measure.weak_order",
            "weak formulation residual, first order in dt",
            0.9,
            order,
            0.0,
        )])
    })?;

    out.extend(timed(|| {
        let c = measure_fixture();
        let mu0 = three_atoms();
        let horizon = 0.5;
        let (b, cc, e) = (c.bounds.b, c.bounds.c, c.bounds.e);
        let radius = mu0.mass() / measure_domain_bound(0.0, horizon, 1.0, b, cc, e);
        let dt = 0.01;
        let mut worst = f64::INFINITY;
        let mut at = (0.0, 0.0);
        for (t, mu) in measure_trace(&c, &mu0, &(), 0.0, horizon, dt)? {
            let bound = measure_domain_bound(t, horizon, radius, b, cc, e) * (1.0 + dt);
            if bound - mu.mass() < worst {
                worst = bound - mu.mass();
                at = (mu.mass(), bound);
            }
        }
        let direct = measure_trace(&c, &mu0, &(), 0.0, horizon, dt)?;
        let fine = measure_trace(&c, &mu0, &(), 0.0, horizon, 0.5 * dt)?;
        let mid = measure_trace(&c, &mu0, &(), 0.0, 0.5 * horizon, dt)?;
        let restarted = measure_trace(&c, &mid[mid.len() - 1].1, &(), 0.5 * horizon, horizon, dt)?;
        let end = |tr: &[(f64, AtomicMeasure)]| tr[tr.len() - 1].1.clone();
        Ok(vec![
            Check::bound(
                "measure.mass_bound",
                "mass bound of the invariant domain",
                at.0,
                at.1,
                0.0,
            ),
            semigroup(
                "measure",
                flat_distance(&end(&direct), &end(&restarted), 0),
                flat_distance(&end(&direct), &end(&fine), 0),
            ),
        ])
    })?);

    out.extend(timed(|| {
        let d = |a: &AtomicMeasure, b: &AtomicMeasure| flat_distance(a, b, 0);
        let dirac = |x: f64| AtomicMeasure::dirac(x, 1.0).expect("finite atom");
        let mu = three_atoms();
        let examples = [
            ("measure.flat_identical", d(&mu, &mu), 0.0),
            (
                "measure.flat_near_diracs",
                d(&dirac(0.2), &dirac(1.45)),
                1.25,
            ),
            ("measure.flat_far_diracs", d(&dirac(0.0), &dirac(5.0)), 2.0),
        ];
        Ok(examples
            .into_iter()
            .map(|(name, got, want)| {
                Check::bound(
                    name,
                    "flat distance examples",
                    (got - want).abs(),
                    0.0,
                    1e-6,
                )
            })
            .collect())
    })?);
    Ok(out)
}

/// Random piecewise-constant data: `k` random jumps on a 60-cell line.
fn random_steps(rng: &mut ChaCha8Rng, grid: &Grid, lo: f64, hi: f64) -> GridFunction {
    let n = grid.len();
    let jumps = rng.gen_range(1..8);
    let mut cuts: Vec<usize> = (0..jumps).map(|_| rng.gen_range(0..n)).collect();
    cuts.sort_unstable();
    let mut values = vec![0.0; n];
    let mut level = rng.gen_range(lo..hi);
    let mut next = cuts.into_iter().peekable();
    for (i, v) in values.iter_mut().enumerate() {
        while next.peek() == Some(&i) {
            next.next();
            level = rng.gen_range(lo..hi);
        }
        *v = level;
    }
    GridFunction::from_values(grid.clone(), values).expect("matching length")
}

/// Elementary BV inequalities on 100 random pairs, reporting the pair with
/// the smallest margin for each inequality.
pub fn bv_suite(seed: u64) -> Result<Vec<Check>> {
    timed(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid::line(-1.0, 2.0, 60)?;
        let mut worst: Vec<Option<(String, f64, f64, f64)>> = vec![None; 5];
        for _ in 0..100 {
            let u = random_steps(&mut rng, &grid, -2.0, 2.0);
            let w = random_steps(&mut rng, &grid, -2.0, 2.0);
            let delta = random_steps(&mut rng, &grid, 0.0, 0.3);
            for (k, c) in bv_estimate_checks(&u, &w, &delta)?.into_iter().enumerate() {
                if worst[k].as_ref().is_none_or(|w| c.margin < w.3) {
                    worst[k] = Some((c.name, c.lhs, c.rhs, c.margin));
                }
            }
        }
        Ok(worst
            .into_iter()
            .flatten()
            .map(|(name, lhs, rhs, _)| {
                Check::bound(
                    format!("bv.{name}"),
                    "elementary estimates on BV functions",
                    lhs,
                    rhs,
                    1e-12,
                )
            })
            .collect())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bv_suite_is_reproducible() {
        let a = bv_suite(7).unwrap();
        let b = bv_suite(7).unwrap();
        assert_eq!(a.len(), 5);
        let strip = |v: Vec<Check>| v.into_iter().map(|c| c.timed(0.0)).collect::<Vec<_>>();
        assert_eq!(strip(a), strip(b));
    }

    #[test]
    fn tight_radius_attains_the_largest_ratio() {
        assert_eq!(
            tight_radius([1.0, 2.0, 3.0], [0.5, 1.0, 1.0], [0.0; 3]),
            3.0
        );
    }
}
