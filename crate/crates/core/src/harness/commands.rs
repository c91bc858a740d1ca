use std::path::Path;
use std::time::Instant;

use super::config::{RotationConfig, ScenarioConfig, ScenarioSpec, SCHEMA_VERSION};
use super::report::{Check, ConvergenceTable, RunSummary, VerificationReport};
use super::suites;
use crate::error::{Error, Result};
use crate::metric_core::{Coupled, CoupledState, LocalFlow, Metric, Process, RefineOptions};
use crate::scenarios::{
    march, march_at_level, rotation_flow, run_epidemic, run_epidemic_at_level, run_predator_prey,
    run_predator_prey_at_level, translation_flow, Drift, EpidemicSetup, MarchStats, Node, TimeSpec,
};
use crate::spaces::GridFunction;
use crate::trajectory::Trajectory;
use crate::transport::Projection;

/// Columns shared by every trajectory after the state columns.
const NORM_COLUMNS: [&str; 6] = [
    "l1",
    "linf",
    "tv",
    "alpha1_margin",
    "alphainf_margin",
    "alphatv_margin",
];

/// Outcome of one scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub trajectory: Trajectory,
    /// Final density for scenarios with a distributed component.
    pub final_field: Option<GridFunction>,
    /// Final finite-dimensional state, by column name.
    pub final_state: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub stats: MarchStats,
}

type PairState = CoupledState<Vec<f64>, Vec<f64>>;

fn columns<'a>(state: &[&'a str]) -> Vec<&'a str> {
    let mut c = vec!["t"];
    c.extend_from_slice(state);
    c.extend(NORM_COLUMNS);
    c
}

/// Row of a two-component finite-dimensional state. The margin columns hold
/// the distance to the boundary of the domain ball.
fn pair_row(t: f64, u: f64, w: f64, ball_margin: f64) -> Vec<f64> {
    vec![
        t,
        u,
        w,
        u.abs() + w.abs(),
        u.abs().max(w.abs()),
        0.0,
        ball_margin,
        ball_margin,
        ball_margin,
    ]
}

fn run_rotation(c: &RotationConfig, time: &TimeSpec, opts: RefineOptions) -> Result<ScenarioRun> {
    let cert = c.certificates();
    let mut traj = Trajectory::new(&columns(&["u", "w"]));
    let x0 = CoupledState::new(vec![c.u0], vec![c.w0]);
    let visit = |n: Node<'_, PairState>| {
        let flow = rotation_flow(&cert, n.t_start, n.tau)?;
        let margin = flow
            .on_u
            .domain_radius(n.t)
            .min(flow.on_w.domain_radius(n.t))
            - n.state.u[0].abs().max(n.state.w[0].abs());
        traj.push(pair_row(n.t, n.state.u[0], n.state.w[0], margin))
    };
    let (x, stats) = march(time, x0, opts, |t, tau| rotation_flow(&cert, t, tau), visit)?;
    let (u, w) = c.exact(time.t0, time.end());
    let error = (x.u[0] - u).abs() + (x.w[0] - w).abs();
    let worst_margin = min_column(&traj, "alpha1_margin");
    let checks = vec![
        Check::bound(
            "scenario.rotation.error",
            "polygonal against the closed-form solution",
            error,
            4.0 * stats.macro_steps as f64 * stats.max_gap,
            opts.tol,
        ),
        Check::bound(
            "scenario.rotation.domain",
            "iterates stay in the domain ball",
            -worst_margin,
            0.0,
            1e-12,
        ),
    ];
    Ok(ScenarioRun {
        final_field: None,
        final_state: vec![("u".into(), x.u[0]), ("w".into(), x.w[0])],
        trajectory: traj,
        checks,
        stats,
    })
}

fn min_column(traj: &Trajectory, name: &str) -> f64 {
    traj.column(name)
        .unwrap_or_default()
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Marches a pair of scalar drifts with the given speeds.
fn run_drift(
    flow: impl Fn(f64) -> Coupled<Drift, Drift>,
    time: &TimeSpec,
    opts: RefineOptions,
) -> Result<(Trajectory, CoupledState<f64, f64>, MarchStats)> {
    let mut traj = Trajectory::new(&columns(&["u", "w"]));
    let visit = |n: Node<'_, CoupledState<f64, f64>>| {
        traj.push(pair_row(n.t, n.state.u, n.state.w, f64::INFINITY))
    };
    let (x, stats) = march(
        time,
        CoupledState::new(0.0, 0.0),
        opts,
        |_, tau| Ok(flow(tau)),
        visit,
    )?;
    Ok((traj, x, stats))
}

fn zero_flow(horizon: f64) -> Coupled<Drift, Drift> {
    let still = Drift {
        speed: 0.0,
        horizon,
    };
    Coupled::new(still, still).with_names("u", "w")
}

fn run_translation(time: &TimeSpec, opts: RefineOptions) -> Result<ScenarioRun> {
    let (traj, x, stats) = run_drift(translation_flow, time, opts)?;
    let error = (x.u - time.horizon).abs() + (x.w + time.horizon).abs();
    Ok(ScenarioRun {
        checks: vec![Check::bound(
            "scenario.translation.error",
            "polygonal of an exact flow is exact",
            error,
            0.0,
            1e-12,
        )],
        final_field: None,
        final_state: vec![("u".into(), x.u), ("w".into(), x.w)],
        trajectory: traj,
        stats,
    })
}

/// Every left side vanishes, so each margin equals its right side.
fn run_zero(time: &TimeSpec, opts: RefineOptions) -> Result<ScenarioRun> {
    let (traj, x, stats) = run_drift(zero_flow, time, opts)?;
    let flow = zero_flow(time.horizon);
    let bounds =
        crate::metric_core::coupling_bounds(&flow.on_u.constants(), &flow.on_w.constants());
    let tau = time.macro_step.min(time.horizon);
    let x0 = CoupledState::new(0.0, 0.0);
    let step = flow.evaluate(tau, time.t0, &x0)?;
    let exact = CoupledState::new(
        flow.on_u.solve(time.t0 + tau, time.t0, &0.0, &0.0)?,
        flow.on_w.solve(time.t0 + tau, time.t0, &0.0, &0.0)?,
    );
    let checks = vec![
        Check::bound(
            "scenario.zero.displacement",
            "the zero flow keeps its initial point",
            x.u.abs() + x.w.abs(),
            opts.tol,
            0.0,
        ),
        Check::bound(
            "scenario.zero.tangency",
            "tangency of process and local flow",
            step.distance(&exact) / tau,
            bounds.tangency_rhs(tau),
            0.0,
        ),
    ];
    Ok(ScenarioRun {
        checks,
        final_field: None,
        final_state: vec![("u".into(), x.u), ("w".into(), x.w)],
        trajectory: traj,
        stats,
    })
}

/// Runs the configured scenario with the refinement schedule of the config.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun> {
    let (time, opts) = (&cfg.time, cfg.refine);
    match &cfg.scenario {
        ScenarioSpec::Rotation(c) => run_rotation(c, time, opts),
        ScenarioSpec::Translation => run_translation(time, opts),
        ScenarioSpec::Zero => run_zero(time, opts),
        ScenarioSpec::PredatorPrey(p) => {
            let grid = cfg.grid()?;
            let run = run_predator_prey(p, &grid, time, opts)?;
            let traj = run.trajectory;
            let mass = traj.column("mass").unwrap_or_default();
            let m0 = mass.first().copied().unwrap_or(0.0);
            let mut checks = Vec::new();
            if p.eta_scale == 0.0 {
                let drift = mass.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
                checks.push(Check::bound(
                    "scenario.predator_prey.mass_conservation",
                    "prey mass without predation",
                    drift,
                    1e-3 * m0.abs(),
                    0.0,
                ));
            } else {
                let rise = mass.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
                checks.push(Check::bound(
                    "scenario.predator_prey.mass_monotone",
                    "predation only removes prey",
                    rise,
                    0.0,
                    1e-10 * m0.abs().max(1.0),
                ));
            }
            let margin = ["alpha1_margin", "alphainf_margin", "alphatv_margin"]
                .iter()
                .map(|c| min_column(&traj, c))
                .fold(f64::INFINITY, f64::min);
            let rho0 = p.initial_prey(&grid);
            checks.push(Check::bound(
                "scenario.predator_prey.domain_margins",
                "invariant domain of the prey process",
                -margin,
                0.0,
                10.0 * grid.min_dx() * rho0.total_variation(),
            ));
            let reach = traj
                .rows
                .iter()
                .map(|r| r[1..=p.dim].iter().map(|v| v * v).sum::<f64>().sqrt())
                .fold(0.0, f64::max);
            checks.push(Check::bound(
                "scenario.predator_prey.predator_ball",
                "predator stays in its domain ball",
                reach,
                run.predator_radius,
                0.0,
            ));
            let mut final_state = vec![("p1".to_string(), run.predator[0])];
            if p.dim == 2 {
                final_state.push(("p2".into(), run.predator[1]));
            }
            Ok(ScenarioRun {
                trajectory: traj,
                final_field: Some(run.prey),
                final_state,
                checks,
                stats: run.stats,
            })
        }
        ScenarioSpec::Epidemic(p) => {
            let run = run_epidemic(p, time, opts)?;
            let traj = run.trajectory;
            let col = |n: &str| traj.column(n).unwrap_or_default();
            let (t, i, total, s) = (col("t"), col("I"), col("total"), col("S"));
            let removed: f64 = (1..t.len())
                .map(|k| 0.5 * (t[k] - t[k - 1]) * p.mu * (i[k] + i[k - 1]))
                .sum();
            let (first, last) = (total[0], total[total.len() - 1]);
            let balance = (last - first + removed).abs() / (time.horizon * first.abs().max(1e-12));
            let lowest = s.iter().chain(&i).copied().fold(f64::INFINITY, f64::min);
            let margin = ["alpha1_margin", "alphainf_margin", "alphatv_margin"]
                .iter()
                .map(|c| min_column(&traj, c))
                .fold(f64::INFINITY, f64::min);
            let grid = p.grid()?;
            let v0 = p.v0.on(&grid, "params.v0")?;
            let checks = vec![
                Check::bound(
                    "scenario.epidemic.balance",
                    "population balance, relative drift per unit time",
                    balance,
                    1e-4,
                    0.0,
                ),
                Check::bound(
                    "scenario.epidemic.nonnegative",
                    "S and I stay nonnegative",
                    -lowest,
                    0.0,
                    1e-9,
                ),
                Check::bound(
                    "scenario.epidemic.domain_margins",
                    "invariant domain of the vaccinated density",
                    -margin,
                    0.0,
                    10.0 * grid.min_dx() * v0.total_variation_extended(),
                ),
            ];
            Ok(ScenarioRun {
                final_field: Some(run.state.w.clone()),
                final_state: vec![
                    ("S".into(), run.state.u[0]),
                    ("I".into(), run.state.u[1]),
                    ("R".into(), run.recovered),
                ],
                trajectory: traj,
                checks,
                stats: run.stats,
            })
        }
    }
}

/// Runs the scenario and writes `trajectory.csv`, `final_state.csv` and
/// `summary.json` into `out` (default: the config's output directory, then
/// the working directory).
pub fn run(cfg: &ScenarioConfig, out: Option<&Path>) -> Result<RunSummary> {
    let start = Instant::now();
    let result = run_scenario(cfg)?;
    let runtime_s = start.elapsed().as_secs_f64();
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| ".".into());
    std::fs::create_dir_all(&dir)?;
    result.trajectory.save_csv(dir.join("trajectory.csv"))?;
    match &result.final_field {
        Some(f) => f.save_csv(dir.join("final_state.csv"))?,
        None => {
            let mut w = csv::Writer::from_path(dir.join("final_state.csv"))
                .map_err(|e| Error::Io(e.to_string()))?;
            w.write_record(["name", "value"])
                .map_err(|e| Error::Io(e.to_string()))?;
            for (name, v) in &result.final_state {
                w.write_record([name.clone(), v.to_string()])
                    .map_err(|e| Error::Io(e.to_string()))?;
            }
            w.flush()?;
        }
    }
    let mut checks = result.checks;
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    let summary = RunSummary {
        schema: SCHEMA_VERSION,
        scenario: cfg.scenario.id().to_string(),
        runtime_s,
        checks,
        warnings: result.trajectory.warnings.clone(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("summaries serialize");
    std::fs::write(dir.join("summary.json"), json)?;
    Ok(summary)
}

/// Errors at levels `j0, ..., j0 + levels - 1` of the fixed-level polygonal,
/// against the closed form where one exists and otherwise against the level
/// `j0 + levels`.
pub fn converge(cfg: &ScenarioConfig, levels: u32) -> Result<ConvergenceTable> {
    if levels < 3 {
        return Err(Error::config(
            "levels",
            format!("need at least 3, got {levels}"),
        ));
    }
    let j0 = cfg.refine.j0;
    let range: Vec<u32> = (j0..j0 + levels).collect();
    let time = &cfg.time;
    let id = cfg.scenario.id();
    let rows = |macro_step: f64, errors: Vec<f64>| -> Vec<(u32, f64, f64)> {
        let tau = macro_step.min(time.horizon);
        range
            .iter()
            .zip(errors)
            .map(|(&j, e)| (j, tau / 2f64.powi(j as i32), e))
            .collect()
    };
    match &cfg.scenario {
        ScenarioSpec::Rotation(c) => {
            let cert = c.certificates();
            let (u, w) = c.exact(time.t0, time.end());
            let mut errors = Vec::new();
            for &j in &range {
                let x0 = CoupledState::new(vec![c.u0], vec![c.w0]);
                let (x, _) = march_at_level(
                    time,
                    x0,
                    j,
                    |t, tau| rotation_flow(&cert, t, tau),
                    |_| Ok(()),
                )?;
                errors.push((x.u[0] - u).abs() + (x.w[0] - w).abs());
            }
            Ok(ConvergenceTable::new(
                id,
                "closed form",
                &rows(time.macro_step, errors),
            ))
        }
        ScenarioSpec::Translation | ScenarioSpec::Zero => {
            let flow = match cfg.scenario {
                ScenarioSpec::Translation => translation_flow,
                _ => zero_flow,
            };
            let speed = flow(1.0).on_u.speed;
            let mut errors = Vec::new();
            for &j in &range {
                let (x, _) = march_at_level(
                    time,
                    CoupledState::new(0.0, 0.0),
                    j,
                    |_, tau| Ok(flow(tau)),
                    |_| Ok(()),
                )?;
                errors
                    .push((x.u - speed * time.horizon).abs() + (x.w + speed * time.horizon).abs());
            }
            Ok(ConvergenceTable::new(
                id,
                "closed form",
                &rows(time.macro_step, errors),
            ))
        }
        ScenarioSpec::Epidemic(p) => {
            let setup = EpidemicSetup::new(p, time)?;
            let at = |j: u32| {
                let mut s = setup.clone();
                if s.aligned_levels.is_some_and(|k| j > k) {
                    s.ibvp.projection = Projection::CellAverage;
                }
                run_epidemic_at_level(&s, j).map(|r| r.state)
            };
            let reference = at(j0 + levels)?;
            let mut errors = Vec::new();
            for &j in &range {
                errors.push(at(j)?.distance(&reference));
            }
            Ok(ConvergenceTable::new(
                id,
                "finest level",
                &rows(setup.macro_step, errors),
            ))
        }
        ScenarioSpec::PredatorPrey(p) => {
            let grid = cfg.grid()?;
            let at = |j: u32| run_predator_prey_at_level(p, &grid, time, j);
            let reference = at(j0 + levels)?;
            let finest = CoupledState::new(reference.prey, reference.predator);
            let mut errors = Vec::new();
            for &j in &range {
                let r = at(j)?;
                errors.push(CoupledState::new(r.prey, r.predator).distance(&finest));
            }
            Ok(ConvergenceTable::new(
                id,
                "finest level",
                &rows(reference.macro_step, errors),
            ))
        }
    }
}

/// Runs the selected suites and the scenario's own checks.
pub fn verify(cfg: &ScenarioConfig) -> Result<VerificationReport> {
    let suites_run = cfg.suites();
    let mut checks = Vec::new();
    for s in &suites_run {
        checks.extend(match s.as_str() {
            "bv" => suites::bv_suite(cfg.seed)?,
            "claw" => suites::claw_suite(cfg.seed)?,
            "core" => suites::core_suite(cfg.seed)?,
            "ibvp" => suites::ibvp_suite()?,
            "measure" => suites::measure_suite()?,
            "renewal" => suites::renewal_suite()?,
            "scenario" => run_scenario(cfg)?.checks,
            other => {
                return Err(Error::config(
                    "verify.suites",
                    format!("unknown suite `{other}`"),
                ))
            }
        });
    }
    Ok(VerificationReport::new(
        cfg.scenario.id(),
        cfg.seed,
        suites_run,
        checks,
    ))
}

/// Process exit status for a failed command: 2 when an iterate left its
/// domain, 3 for configurations the certificates reject, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::DomainExit { .. }
        | Error::MassBlowup { .. }
        | Error::SupportClearanceViolated(_) => 2,
        Error::Config { .. }
        | Error::KernelOutOfBox(_)
        | Error::InadmissibleHorizon(_)
        | Error::NegativeRadius { .. }
        | Error::StepTooLarge { .. }
        | Error::HorizonExceeded { .. } => 3,
        _ => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(kind: &str, time: &str) -> ScenarioConfig {
        ScenarioConfig::from_json(&format!(
            r#"{{"schema": 1, "scenario": {{"kind": "{kind}"}}, "time": {time}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn translation_converges_exactly() {
        let cfg = config("translation", r#"{"horizon": 1.0, "macro_step": 0.25}"#);
        let t = converge(&cfg, 3).unwrap();
        assert!(t.exact);
        assert!(t.to_csv().contains("exact"));
    }

    #[test]
    fn rotation_is_first_order() {
        let mut cfg = config("rotation", r#"{"horizon": 1.0, "macro_step": 1.0}"#);
        cfg.refine.j0 = 3;
        let t = converge(&cfg, 5).unwrap();
        let order = t.fitted_order.unwrap();
        assert!((0.9..=1.5).contains(&order), "{order}");
    }

    #[test]
    fn converge_needs_three_levels() {
        let cfg = config("translation", r#"{"horizon": 1.0, "macro_step": 0.25}"#);
        assert!(matches!(converge(&cfg, 2), Err(Error::Config { .. })));
    }

    #[test]
    fn zero_margins_equal_right_sides() {
        let mut cfg = config("zero", r#"{"horizon": 1.0, "macro_step": 0.5}"#);
        cfg.verify.suites = vec!["scenario".into()];
        let r = verify(&cfg).unwrap();
        assert!(r.all_pass());
        for c in &r.checks {
            assert_eq!(c.lhs, 0.0);
            assert_eq!(c.margin, c.rhs);
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::config("grid.dx", "negative")), 3);
        let exit = Error::DomainExit {
            component: None,
            step: None,
            time: 0.0,
        };
        assert_eq!(exit_code(&exit), 2);
        assert_eq!(exit_code(&Error::Io("x".into())), 1);
    }
}
