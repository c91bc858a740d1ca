//! Susceptible, infected and recovered populations with a vaccination
//! pipeline: `V(t, tau)` counts individuals dosed at time `t - tau`, who
//! join `R` at the immunization delay `tau = T*`.
//!
//! `(S, I)` solve an ODE parametrized by `V`; `V` solves a boundary-value
//! problem on `[0, T*]` with unit speed, rate `-rho_V(tau) I` and inflow
//! `p(t)`. `R` does not feed back and is integrated after the fact.

use serde::{Deserialize, Serialize};

use super::driver::{march, march_at_level, MarchStats, TimeSpec};
use crate::error::{Error, Result};
use crate::ibvp::{IbvpBounds, IbvpCoefficients, IbvpOptions, IbvpProcess};
use crate::metric_core::{Coupled, CoupledState, RefineOptions};
use crate::ode::{OdeField, OdeProcess};
use crate::spaces::{BvTimeSeries, Grid, GridFunction};
use crate::trajectory::Trajectory;
use crate::transport::Projection;

/// A function of age: a constant, or one value per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    Cells(Vec<f64>),
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Constant(0.0)
    }
}

impl Profile {
    pub fn on(&self, grid: &Grid, field: &str) -> Result<GridFunction> {
        match self {
            Profile::Constant(c) => Ok(GridFunction::from_fn(grid.clone(), |_| *c)),
            Profile::Cells(v) => GridFunction::from_values(grid.clone(), v.clone()).map_err(|_| {
                Error::config(
                    field,
                    format!("expected {} cell values, got {}", grid.len(), v.len()),
                )
            }),
        }
    }
}

/// A function of time: a constant, or a left-continuous step function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Series {
    Constant(f64),
    Steps { times: Vec<f64>, values: Vec<f64> },
}

impl Default for Series {
    fn default() -> Self {
        Series::Constant(0.0)
    }
}

impl Series {
    pub fn to_series(&self, field: &str) -> Result<BvTimeSeries> {
        match self {
            Series::Constant(c) if c.is_finite() => Ok(BvTimeSeries::constant(*c)),
            Series::Constant(_) => Err(Error::config(field, "must be finite")),
            Series::Steps { times, values } => BvTimeSeries::new(times.clone(), values.clone())
                .map_err(|e| Error::config(field, e.to_string())),
        }
    }
}

fn default_cells() -> usize {
    400
}

fn default_n_sub() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpidemicParams {
    /// Infectivity of the susceptibles.
    pub rho_s: f64,
    /// Infectivity of the vaccinated, by time since the dose.
    #[serde(default)]
    pub rho_v: Profile,
    /// Recovery rate.
    pub theta: f64,
    /// Mortality rate.
    pub mu: f64,
    /// Vaccination rate `p(t)`.
    #[serde(default)]
    pub vaccination: Series,
    /// Immunization delay.
    pub t_star: f64,
    pub s0: f64,
    pub i0: f64,
    #[serde(default)]
    pub r0: f64,
    #[serde(default)]
    pub v0: Profile,
    /// Bound on the initial data.
    pub r: f64,
    #[serde(default = "default_cells")]
    pub cells: usize,
    #[serde(default = "default_n_sub")]
    pub n_sub: usize,
}

impl EpidemicParams {
    pub fn grid(&self) -> Result<Grid> {
        if self.cells == 0 {
            return Err(Error::config("params.cells", "must be at least 1"));
        }
        if !(self.t_star > 0.0 && self.t_star.is_finite()) {
            return Err(Error::config("params.t_star", "must be positive"));
        }
        Grid::line(0.0, self.t_star, self.cells)
    }

    /// Checks the coefficients and the admissibility of the initial data:
    /// `S, I, R in [0, r]`, `V >= 0` and `TV(V) + sup V <= r`.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        for (name, v) in [
            ("params.rho_s", self.rho_s),
            ("params.theta", self.theta),
            ("params.mu", self.mu),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be nonnegative, got {v}")));
            }
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(Error::config("params.r", "must be positive"));
        }
        for (name, v) in [
            ("params.s0", self.s0),
            ("params.i0", self.i0),
            ("params.r0", self.r0),
        ] {
            if !(0.0..=self.r).contains(&v) {
                return Err(Error::config(
                    name,
                    format!("must lie in [0, r = {}], got {v}", self.r),
                ));
            }
        }
        if self.n_sub == 0 {
            return Err(Error::config("params.n_sub", "must be at least 1"));
        }
        let rho_v = self.rho_v.on(&grid, "params.rho_v")?;
        if rho_v.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::config("params.rho_v", "must be finite"));
        }
        let v0 = self.v0.on(&grid, "params.v0")?;
        if v0.values().iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::config("params.v0", "must be nonnegative"));
        }
        let size = v0.total_variation() + v0.linf_norm();
        if size > self.r * (1.0 + 1e-12) {
            return Err(Error::config(
                "params.v0",
                format!("TV + sup = {size} exceeds r = {}", self.r),
            ));
        }
        let p = self.vaccination.to_series("params.vaccination")?;
        if p.values().iter().any(|v| *v < 0.0) {
            return Err(Error::config("params.vaccination", "must be nonnegative"));
        }
        Ok(())
    }
}

pub type EpidemicFlow = Coupled<OdeProcess<GridFunction>, IbvpProcess<Vec<f64>>>;
pub type EpidemicState = CoupledState<Vec<f64>, GridFunction>;

/// Certificates, radii and step sizes of one epidemic run.
#[derive(Clone)]
pub struct EpidemicSetup {
    pub params: EpidemicParams,
    pub time: TimeSpec,
    pub grid: Grid,
    pub rho_v: GridFunction,
    pub vaccination: BvTimeSeries,
    pub field: OdeField<GridFunction>,
    pub coef: IbvpCoefficients<Vec<f64>>,
    /// Radius of the `(S, I)` ball.
    pub ode_radius: f64,
    /// Radius of the `V` domain.
    pub v_radius: f64,
    pub macro_step: f64,
    /// Deepest level at which polygonal steps are whole multiples of the
    /// cell size, when the macro step is aligned to the grid.
    pub aligned_levels: Option<u32>,
    pub ibvp: IbvpOptions,
}

impl EpidemicSetup {
    pub fn new(params: &EpidemicParams, time: &TimeSpec) -> Result<Self> {
        params.validate()?;
        time.validate()?;
        let grid = params.grid()?;
        let rho_v = params.rho_v.on(&grid, "params.rho_v")?;
        let v0 = params.v0.on(&grid, "params.v0")?;
        let p = params.vaccination.to_series("params.vaccination")?;
        let (t0, t1) = (time.t0, time.end());
        if p.start() > t0 {
            return Err(Error::config(
                "params.vaccination",
                format!("undefined at t0 = {t0}"),
            ));
        }
        let p_inf = p.sup_norm(t0, t1)?;
        let p_l1 = p.l1_norm(t0, t1)?;
        let p_tv = p.total_variation(t0, t1);
        let dx = grid.axis(0).dx;

        let u0 = [params.s0, params.i0];
        let ode_radius = 4.0 * params.r.max(u0[0].hypot(u0[1]));
        let rv_inf = rho_v.linf_norm();
        let m_inf = (rv_inf + rho_v.total_variation()) * ode_radius;
        let mut tau = time.macro_step.min(time.horizon);
        if m_inf > 0.0 {
            tau = tau.min(0.5 / m_inf);
        }
        // Generous bounds on the L1 norm, sup norm and variation of V along
        // the run, doubled twice for the room needed at the start of every
        // macro step.
        let base = params.r + v0.l1_norm() + params.t_star * p_inf + p_tv + 2.0 * p_inf;
        let v_radius = 4.0 * (base + p_inf * tau * (1.0 + m_inf) + p_tv);

        let r = ode_radius;
        let drift = params.rho_s * r + rv_inf * v_radius + params.theta + params.mu;
        let f_inf = (params.rho_s * r * r + p_inf).hypot(drift * r);
        let f_lip = (3.0 * (params.rho_s * r).powi(2) + drift * drift)
            .sqrt()
            .max(rv_inf * r);
        if f_inf > 0.0 {
            tau = tau.min(ode_radius / (2.0 * f_inf));
        }

        let steps = time.horizon / dx;
        let whole = (steps - steps.round()).abs() < 1e-9 * steps.max(1.0);
        let (macro_step, aligned_levels, projection) = if whole && tau >= 2.0 * dx {
            let n = steps.round() as u64;
            let mut k = (tau / dx).log2().floor() as u32;
            while k > 0 && !n.is_multiple_of(1u64 << k) {
                k -= 1;
            }
            if k > 0 {
                (dx * (1u64 << k) as f64, Some(k), Projection::PointSample)
            } else {
                (tau, None, Projection::CellAverage)
            }
        } else {
            (tau, None, Projection::CellAverage)
        };

        let rho_s = params.rho_s;
        let (theta, mu) = (params.theta, params.mu);
        let pf = p.clone();
        let rv = rho_v.clone();
        let field = OdeField::new(
            move |t, u, v: &GridFunction| {
                let exposure: f64 = rv
                    .values()
                    .iter()
                    .zip(v.values())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    * dx;
                let pt = pf.eval(t).unwrap_or(f64::NAN);
                vec![
                    -rho_s * u[0] * u[1] - pt,
                    (rho_s * u[0] + exposure - theta - mu) * u[1],
                ]
            },
            f_lip,
            f_inf,
            ode_radius,
        )?;
        let last = params.t_star - 0.5 * dx;
        let rv = rho_v.clone();
        let bounds = IbvpBounds {
            v_min: 1.0,
            v_max: 1.0,
            v_inf: 1.0,
            v_lip: 0.0,
            m_inf,
            m_lip: rho_v.l1_norm(),
            b1: p_l1,
            b_inf: p_inf,
            ..Default::default()
        };
        let coef = IbvpCoefficients::new(
            |_, _| 1.0,
            move |_, x, w: &Vec<f64>| -rv.lookup(&[x[0].clamp(0.0, last)]) * w[1],
            |_, _, _| 0.0,
            p.clone(),
            bounds,
        )?;
        Ok(Self {
            params: params.clone(),
            time: TimeSpec {
                macro_step,
                ..*time
            },
            grid,
            rho_v,
            vaccination: p,
            field,
            coef,
            ode_radius,
            v_radius,
            macro_step,
            aligned_levels,
            ibvp: IbvpOptions {
                n_sub: params.n_sub,
                projection,
                open_outflow: true,
            },
        })
    }

    pub fn initial_state(&self) -> Result<EpidemicState> {
        Ok(CoupledState::new(
            vec![self.params.s0, self.params.i0],
            self.params.v0.on(&self.grid, "params.v0")?,
        ))
    }

    /// The coupled flow of the macro step `[t_start, t_start + tau]`.
    pub fn flow(&self, t_start: f64, tau: f64) -> Result<EpidemicFlow> {
        let ode = OdeProcess::new(self.field.clone(), t_start, tau, self.params.n_sub)?;
        let ibvp = IbvpProcess::new(self.coef.clone(), self.ibvp, t_start, tau, self.v_radius)?;
        Ok(Coupled::new(ode, ibvp).with_names("SI", "V"))
    }

    /// Refinement options limited to the aligned levels, if any.
    pub fn refine_options(&self, opts: RefineOptions) -> RefineOptions {
        match self.aligned_levels {
            Some(k) if opts.j_max > k => {
                let j_max = k.max(1);
                RefineOptions {
                    j0: opts.j0.min(j_max - 1),
                    j_max,
                    tol: opts.tol,
                }
            }
            _ => opts,
        }
    }
}

/// Mass leaving through `a = T*` during a step of length `dt`, a whole
/// number of cells, with `I` frozen at `i`: the piecewise-constant profile
/// is carried out of the box and decays at the rate of its own cell.
fn exit_flux(v: &[f64], rho: &[f64], i: f64, dt: f64, dx: f64) -> f64 {
    let m = ((dt / dx).round() as usize).min(v.len());
    (0..m)
        .map(|j| {
            let k = v.len() - 1 - j;
            let rate = rho[k] * i;
            let (a, b) = (j as f64 * dx, (j + 1) as f64 * dx);
            let window = if rate.abs() < 1e-12 {
                dx
            } else {
                ((-rate * a).exp() - (-rate * b).exp()) / rate
            };
            v[k] * window
        })
        .sum()
}

/// Outcome of [`run_epidemic`].
#[derive(Debug, Clone)]
pub struct EpidemicRun {
    pub trajectory: Trajectory,
    pub state: EpidemicState,
    pub recovered: f64,
    pub stats: MarchStats,
    pub macro_step: f64,
}

/// Runs the coupled `(S, I)`-`V` system, then integrates
/// `R' = theta I + V(t, T*)`: the first term by the trapezoidal rule over the
/// nodes, the second by the exact exit flux when steps are whole cells.
pub fn run_epidemic(
    params: &EpidemicParams,
    time: &TimeSpec,
    opts: RefineOptions,
) -> Result<EpidemicRun> {
    let setup = EpidemicSetup::new(params, time)?;
    run_setup(&setup, Some(setup.refine_options(opts)), 0)
}

/// [`run_epidemic`] with every macro step's polygonal at the single level
/// `eps = tau / 2^level`.
pub fn run_epidemic_at_level(setup: &EpidemicSetup, level: u32) -> Result<EpidemicRun> {
    run_setup(setup, None, level)
}

fn run_setup(
    setup: &EpidemicSetup,
    opts: Option<RefineOptions>,
    level: u32,
) -> Result<EpidemicRun> {
    let params = &setup.params;
    let theta = params.theta;
    let mut traj = Trajectory::new(&[
        "t",
        "S",
        "I",
        "R",
        "v_exit",
        "v_mass",
        "total",
        "l1",
        "linf",
        "tv",
        "alpha1_margin",
        "alphainf_margin",
        "alphatv_margin",
    ]);
    let mut recovered = params.r0;
    let mut prev: Option<(f64, f64, f64, Vec<f64>)> = None;
    let dx = setup.grid.axis(0).dx;
    let aligned =
        setup.ibvp.projection == Projection::PointSample && setup.aligned_levels.is_some();
    let mut negative = false;
    let x0 = setup.initial_state()?;
    let build = |t_start, tau| setup.flow(t_start, tau);
    let mut visit = |node: super::driver::Node<'_, EpidemicState>| {
        let (s, i) = (node.state.u[0], node.state.u[1]);
        let v = &node.state.w;
        let exit = v.values().last().copied().unwrap_or(0.0);
        if let Some((t_prev, i_prev, exit_prev, v_prev)) = prev.take() {
            let dt = node.t - t_prev;
            let outflow = if aligned {
                exit_flux(&v_prev, setup.rho_v.values(), i_prev, dt, dx)
            } else {
                0.5 * dt * (exit_prev + exit)
            };
            recovered += 0.5 * dt * theta * (i_prev + i) + outflow;
        }
        prev = Some((node.t, i, exit, v.values().to_vec()));
        if (s < -1e-9 || i < -1e-9) && !negative {
            negative = true;
            traj.warn(format!("NegativeState: S = {s}, I = {i} at t = {}", node.t));
        }
        let process = IbvpProcess {
            coef: setup.coef.clone(),
            opts: setup.ibvp,
            t_start: node.t_start,
            horizon: node.tau,
            radius: setup.v_radius,
            slack: 0.0,
        };
        let m = process.margins(node.t, v)?;
        let mass = v.integral();
        traj.push(vec![
            node.t,
            s,
            i,
            recovered,
            exit,
            mass,
            s + i + recovered + mass,
            v.l1_norm(),
            v.linf_norm(),
            v.total_variation(),
            m[0],
            m[1],
            m[2],
        ])
    };
    let (state, stats) = match opts {
        Some(o) => march(&setup.time, x0, o, build, &mut visit)?,
        None => march_at_level(&setup.time, x0, level, build, &mut visit)?,
    };
    Ok(EpidemicRun {
        trajectory: traj,
        state,
        recovered,
        stats,
        macro_step: setup.macro_step,
    })
}
