//! Balance laws on the half line with an inflow boundary:
//!
//! `u_t + (v u)_x = m u + q` for `x > 0`, `u(t, 0) = b(t)`, with `v >= v_min > 0`.
//!
//! Cells to the right of the boundary characteristic `sigma(t) = X(t; t0, 0)`
//! are reached by characteristics from the initial datum, the others by
//! characteristics entering through `x = 0` at the crossing time `T(0; t, x)`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_core::{Process, ProcessConstants};
use crate::renewal::DomainBounds;
use crate::spaces::{BvTimeSeries, GridFunction};
use crate::transport::{characteristic, trace_back, Along, BackwardTrace, Projection, Velocity};

type SpeedFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type VelFn<W> = dyn Fn(f64, &[f64; 2], &W) -> [f64; 2] + Send + Sync;
type ScalarFn<W> = dyn Fn(f64, &[f64; 2], &W) -> f64 + Send + Sync;

/// Certificates of the boundary-value problem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IbvpBounds {
    pub v_min: f64,
    pub v_max: f64,
    pub v_inf: f64,
    pub v_lip: f64,
    pub m_inf: f64,
    pub m_lip: f64,
    pub q1: f64,
    pub q_inf: f64,
    pub q_lip: f64,
    pub b1: f64,
    pub b_inf: f64,
}

/// Speed `v(t, x)`, rate `m(t, x, w)`, source `q(t, x, w)` and boundary
/// datum `b`. Points are `[x, 0]` to share the characteristics code with the
/// whole-space solver.
pub struct IbvpCoefficients<W> {
    speed: Arc<SpeedFn>,
    v: Arc<VelFn<W>>,
    m: Arc<ScalarFn<W>>,
    q: Arc<ScalarFn<W>>,
    pub boundary: BvTimeSeries,
    pub bounds: IbvpBounds,
}

impl<W> Clone for IbvpCoefficients<W> {
    fn clone(&self) -> Self {
        Self {
            speed: Arc::clone(&self.speed),
            v: Arc::clone(&self.v),
            m: Arc::clone(&self.m),
            q: Arc::clone(&self.q),
            boundary: self.boundary.clone(),
            bounds: self.bounds,
        }
    }
}

impl<W: 'static> IbvpCoefficients<W> {
    pub fn new(
        speed: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        m: impl Fn(f64, &[f64; 2], &W) -> f64 + Send + Sync + 'static,
        q: impl Fn(f64, &[f64; 2], &W) -> f64 + Send + Sync + 'static,
        boundary: BvTimeSeries,
        bounds: IbvpBounds,
    ) -> Result<Self> {
        if !(bounds.v_min > 0.0) {
            return Err(Error::config(
                "v_min",
                "inflow speed must be strictly positive",
            ));
        }
        if bounds.v_max < bounds.v_min {
            return Err(Error::config("v_max", "must not be below v_min"));
        }
        let speed: Arc<SpeedFn> = Arc::new(speed);
        let s = Arc::clone(&speed);
        Ok(Self {
            speed,
            v: Arc::new(move |t, x: &[f64; 2], _: &W| [s(t, x[0]), 0.0]),
            m: Arc::new(m),
            q: Arc::new(q),
            boundary,
            bounds,
        })
    }
}

impl<W> IbvpCoefficients<W> {
    pub fn speed(&self, t: f64, x: f64) -> f64 {
        (self.speed)(t, x)
    }

    pub fn rate(&self, t: f64, x: f64, w: &W) -> f64 {
        (self.m)(t, &[x, 0.0], w)
    }

    fn along(&self, dx: f64) -> Along<'_, W> {
        Along {
            v: &*self.v,
            m: &*self.m,
            q: &*self.q,
            dim: 1,
            fd: [0.5 * dx, 0.0],
        }
    }

    /// Samples `v_min <= v <= v_max` on the given points.
    pub fn audit_speed(&self, times: &[f64], xs: &[f64]) -> bool {
        times.iter().all(|&t| {
            xs.iter().all(|&x| {
                let v = self.speed(t, x);
                v >= self.bounds.v_min && v <= self.bounds.v_max
            })
        })
    }
}

fn rk4_time<F: Fn(f64, f64) -> f64 + ?Sized>(v: &F, tau: f64, xi: f64, h: f64) -> f64 {
    let k1 = 1.0 / v(tau, xi);
    let k2 = 1.0 / v(tau + 0.5 * h * k1, xi + 0.5 * h);
    let k3 = 1.0 / v(tau + 0.5 * h * k2, xi + 0.5 * h);
    let k4 = 1.0 / v(tau + h * k3, xi + h);
    tau + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// Time at which the characteristic through `(t, x)` left the boundary,
/// from `dt/dx = 1 / v(t, x)` integrated by RK4 in `x` from `x` down to 0.
pub fn boundary_crossing_time(
    v: &(dyn Fn(f64, f64) -> f64 + Send + Sync),
    t: f64,
    x: f64,
    t0: f64,
    n_sub: usize,
) -> Result<f64> {
    if x <= 0.0 {
        return Ok(t);
    }
    let n = n_sub.max(1);
    let h = -x / n as f64;
    let mut tau = t;
    for k in 0..n {
        tau = rk4_time(v, tau, x + k as f64 * h, h);
    }
    let tol = 1e-10 * (1.0 + t.abs());
    if tau < t0 - tol {
        return Err(Error::NoCrossing { t, x, t0 });
    }
    Ok(tau.max(t0))
}

/// Trace from `(t, x)` to the boundary, parametrized by position, with
/// the midpoint rule in `x` for the exponent and the source.
fn trace_to_boundary<W>(
    c: &IbvpCoefficients<W>,
    fd: f64,
    t: f64,
    x: f64,
    w: &W,
    n_sub: usize,
) -> (f64, BackwardTrace) {
    let mut out = BackwardTrace {
        foot: [0.0, 0.0],
        log_e: 0.0,
        log_m: 0.0,
        source: 0.0,
    };
    if x <= 0.0 {
        return (t, out);
    }
    let n = n_sub.max(1);
    let h = -x / n as f64;
    let len = h.abs();
    let v = &*c.speed;
    let mut tau = t;
    for k in 0..n {
        let xi = x + k as f64 * h;
        let tm = rk4_time(v, tau, xi, 0.5 * h);
        let xm = xi + 0.5 * h;
        let p = [xm, 0.0];
        let vm = v(tm, xm);
        let dvdx = (v(tm, xm + fd) - v(tm, xm - fd)) / (2.0 * fd);
        let m = (c.m)(tm, &p, w);
        let g = (m - dvdx) / vm;
        let q = (c.q)(tm, &p, w);
        if q != 0.0 {
            out.source += q / vm * (out.log_e + 0.5 * g * len).exp() * len;
        }
        out.log_e += g * len;
        out.log_m += m / vm * len;
        tau = rk4_time(v, tm, xm, 0.5 * h);
    }
    (tau, out)
}

/// Discretization parameters of [`ibvp_solve_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbvpOptions {
    pub n_sub: usize,
    pub projection: Projection,
    /// Let mass leave through the right end of the box instead of requiring
    /// support clearance there.
    pub open_outflow: bool,
}

impl IbvpOptions {
    pub fn new(n_sub: usize) -> Self {
        Self {
            n_sub,
            projection: Projection::PointSample,
            open_outflow: false,
        }
    }
}

/// Solves from `t0` to `t` on the grid of `u0`, which must start at `x = 0`.
pub fn ibvp_solve<W: Sync>(
    coef: &IbvpCoefficients<W>,
    u0: &GridFunction,
    w: &W,
    t0: f64,
    t: f64,
    n_sub: usize,
) -> Result<GridFunction> {
    ibvp_solve_with(coef, u0, w, t0, t, &IbvpOptions::new(n_sub))
}

pub fn ibvp_solve_with<W: Sync>(
    coef: &IbvpCoefficients<W>,
    u0: &GridFunction,
    w: &W,
    t0: f64,
    t: f64,
    opts: &IbvpOptions,
) -> Result<GridFunction> {
    if !(t >= t0) {
        return Err(Error::InvalidArgument(format!(
            "final time {t} precedes {t0}"
        )));
    }
    let grid = u0.grid();
    if grid.dim() != 1 || grid.axis(0).origin != 0.0 {
        return Err(Error::GridMismatch(
            "boundary problems live on a 1D grid starting at 0".into(),
        ));
    }
    if t == t0 {
        return Ok(u0.clone());
    }
    coef.boundary.eval(t0)?;
    let ax = *grid.axis(0);
    if !opts.open_outflow {
        let reach = coef.bounds.v_max.max(coef.bounds.v_inf) * (t - t0);
        let right = (0..ax.n)
            .rev()
            .find(|&i| u0.values()[i] != 0.0)
            .map_or(f64::INFINITY, |i| ax.end() - ax.edge(i + 1));
        if right + 1e-12 < reach {
            return Err(Error::SupportClearanceViolated(format!(
                "boundary datum support is {right} from the right end, {reach} required"
            )));
        }
    }
    let n_sub = opts.n_sub.max(1);
    let vel: &Velocity<W> = &*coef.v;
    let sigma = characteristic(vel, 1, t0, [0.0, 0.0], t, w, n_sub)[0];
    let along = coef.along(ax.dx);
    let fd = 0.5 * ax.dx;

    let cells: Vec<(bool, BackwardTrace)> = (0..ax.n)
        .into_par_iter()
        .map(|i| {
            let x = ax.center(i);
            if x >= sigma {
                (true, trace_back(&along, t, [x, 0.0], t0, w, n_sub))
            } else {
                let (cross, mut tr) = trace_to_boundary(coef, fd, t, x, w, n_sub);
                tr.foot = [cross.max(t0), f64::NAN];
                (false, tr)
            }
        })
        .collect();

    let values: Vec<f64> = match opts.projection {
        Projection::PointSample => cells
            .iter()
            .map(|(interior, tr)| {
                if *interior {
                    Ok(u0.lookup(&tr.foot) * tr.log_e.exp() + tr.source)
                } else {
                    Ok(coef.boundary.eval(tr.foot[0])? * tr.log_e.exp() + tr.source)
                }
            })
            .collect::<Result<_>>()?,
        Projection::CellAverage => {
            let steps = 2 * n_sub;
            let feet: Vec<(bool, f64)> = (0..=ax.n)
                .into_par_iter()
                .map(|i| {
                    let x = ax.edge(i);
                    if x >= sigma {
                        (true, characteristic(vel, 1, t, [x, 0.0], t0, w, steps)[0])
                    } else {
                        let cross =
                            boundary_crossing_time(&*coef.speed, t, x, t0, steps).unwrap_or(t0);
                        (false, cross)
                    }
                })
                .collect();
            let mut out = Vec::with_capacity(ax.n);
            for (i, (_, tr)) in cells.iter().enumerate() {
                let (a, b) = (feet[i], feet[i + 1]);
                let mass = match (a.0, b.0) {
                    (true, true) => u0.interval_integral(a.1, b.1),
                    (false, false) => inflow(coef, b.1, a.1)?,
                    (false, true) => u0.interval_integral(0.0, b.1) + inflow(coef, t0, a.1)?,
                    (true, false) => 0.0,
                };
                out.push(mass / ax.dx * tr.log_m.exp() + tr.source);
            }
            out
        }
    };
    GridFunction::from_values(grid.clone(), values)
}

/// Solution formula at an arbitrary point `x` of the box, with the initial
/// datum sampled at the foot of the characteristic. At `x = sigma(t)` the
/// interior branch is taken.
pub fn ibvp_point_value<W>(
    coef: &IbvpCoefficients<W>,
    u0: &GridFunction,
    w: &W,
    t0: f64,
    t: f64,
    x: f64,
    n_sub: usize,
) -> Result<f64> {
    if t == t0 {
        let ax = u0.grid().axis(0);
        let y = x.min(ax.end() - 0.5 * ax.dx);
        return Ok(u0.lookup(&[y]));
    }
    let vel: &Velocity<W> = &*coef.v;
    let sigma = characteristic(vel, 1, t0, [0.0, 0.0], t, w, n_sub)[0];
    let dx = u0.grid().axis(0).dx;
    if x >= sigma {
        let tr = trace_back(&coef.along(dx), t, [x, 0.0], t0, w, n_sub);
        let ax = u0.grid().axis(0);
        let y = tr.foot[0].min(ax.end() - 0.5 * ax.dx);
        Ok(u0.lookup(&[y]) * tr.log_e.exp() + tr.source)
    } else {
        let (cross, tr) = trace_to_boundary(coef, 0.5 * dx, t, x, w, n_sub);
        Ok(coef.boundary.eval(cross.max(t0))? * tr.log_e.exp() + tr.source)
    }
}

/// `int_{s0}^{s1} v(s, 0) b(s) ds`, exact in `b` and three-point
/// Gauss-Legendre in `v` on each constant piece of `b`.
fn inflow<W>(coef: &IbvpCoefficients<W>, s0: f64, s1: f64) -> Result<f64> {
    if s1 <= s0 {
        return Ok(0.0);
    }
    let mut cuts = vec![s0];
    cuts.extend(
        coef.boundary
            .times()
            .iter()
            .copied()
            .filter(|&s| s > s0 && s < s1),
    );
    cuts.push(s1);
    let nodes = [
        (-(0.6f64).sqrt(), 5.0 / 9.0),
        (0.0, 8.0 / 9.0),
        ((0.6f64).sqrt(), 5.0 / 9.0),
    ];
    let mut sum = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let bv = coef.boundary.eval(mid)?;
        let vint: f64 = nodes
            .iter()
            .map(|(z, wt)| wt * coef.speed(mid + half * z, 0.0))
            .sum::<f64>()
            * half;
        sum += bv * vint;
    }
    Ok(sum)
}

/// Invariant-domain bounds of the boundary-value process on `[0, T]`, with
/// `b` on the same time axis:
///
/// * `alpha_1 = R e^{-M (T - t)} - (v_max B_inf + Q_1)(T - t) e^{M t}`
/// * `alpha_inf = R e^{-M (T - t)} - Q_inf (T - t)`
/// * `alpha_TV = R (1 - K (T - t)) e^{K (T - t)} - 2 Q_inf (1 + K t)(T - t) e^{K t}
///    - B_inf K (T - t) e^{K t} - TV(b; [t, T]) e^{K t}`
///
/// with `M = M_inf`, `K = M_inf + V_L`.
pub fn ibvp_domain_bounds(
    t: f64,
    radius: f64,
    horizon: f64,
    c: &IbvpBounds,
    boundary: &BvTimeSeries,
) -> Result<DomainBounds> {
    domain_bounds_with_tv(t, radius, horizon, c, boundary.total_variation(t, horizon))
}

fn domain_bounds_with_tv(
    t: f64,
    radius: f64,
    horizon: f64,
    c: &IbvpBounds,
    tv_b: f64,
) -> Result<DomainBounds> {
    if !(horizon > 0.0) || t < 0.0 || t > horizon * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "time {t} outside [0, {horizon}]"
        )));
    }
    let rem = horizon - t;
    let m = c.m_inf;
    let k = c.m_inf + c.v_lip;
    let b = DomainBounds {
        alpha1: radius * (-m * rem).exp() - (c.v_max * c.b_inf + c.q1) * rem * (m * t).exp(),
        alpha_inf: radius * (-m * rem).exp() - c.q_inf * rem,
        alpha_tv: radius * (1.0 - k * rem) * (k * rem).exp()
            - 2.0 * c.q_inf * (1.0 + k * t) * rem * (k * t).exp()
            - c.b_inf * k * rem * (k * t).exp()
            - tv_b * (k * t).exp(),
    };
    for (name, a) in [
        ("alpha_1", b.alpha1),
        ("alpha_inf", b.alpha_inf),
        ("alpha_tv", b.alpha_tv),
    ] {
        if !(a > 0.0) {
            return Err(Error::InadmissibleHorizon(format!(
                "{name}({t}) = {a} is not positive"
            )));
        }
    }
    Ok(b)
}

/// Lipschitz constants of the boundary-value process:
///
/// * `C_u = M_inf`
/// * `C_t = [v_max (B_1 + 2R + R (M_inf + V_L) T) + M_inf R + Q_1] e^{M_inf T}`
/// * `C_w = [B_inf M_L + v_max Q_L + v_max Q_inf M_L T / 2 + M_L R + Q_L + M_L Q_inf T / 2] e^{M_inf T}`
pub fn ibvp_lipschitz_constants(
    c: &IbvpBounds,
    horizon: f64,
    radius: f64,
) -> Result<ProcessConstants> {
    let (t, r) = (horizon, radius);
    let e = (c.m_inf * t).exp();
    let c_t = (c.v_max * (c.b1 + 2.0 * r + r * (c.m_inf + c.v_lip) * t) + c.m_inf * r + c.q1) * e;
    let c_w = (c.b_inf * c.m_lip
        + c.v_max * c.q_lip
        + 0.5 * c.v_max * c.q_inf * c.m_lip * t
        + c.m_lip * r
        + c.q_lip
        + 0.5 * c.m_lip * c.q_inf * t)
        * e;
    ProcessConstants::new(c.m_inf, c_t, c_w, horizon)
}

/// The boundary-value solver as a process on `[t_start, t_start + T]`.
pub struct IbvpProcess<W> {
    pub coef: IbvpCoefficients<W>,
    pub opts: IbvpOptions,
    pub t_start: f64,
    pub horizon: f64,
    pub radius: f64,
    pub slack: f64,
}

impl<W> IbvpProcess<W> {
    pub fn new(
        coef: IbvpCoefficients<W>,
        opts: IbvpOptions,
        t_start: f64,
        horizon: f64,
        radius: f64,
    ) -> Result<Self> {
        let p = Self {
            coef,
            opts,
            t_start,
            horizon,
            radius,
            slack: 0.0,
        };
        p.bounds_at(t_start)?;
        Ok(p)
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    pub fn bounds_at(&self, t: f64) -> Result<DomainBounds> {
        let s = (t - self.t_start).clamp(0.0, self.horizon);
        let tv_b = self
            .coef
            .boundary
            .total_variation(self.t_start + s, self.t_start + self.horizon);
        domain_bounds_with_tv(s, self.radius, self.horizon, &self.coef.bounds, tv_b)
    }

    /// `alpha - measured` for the L1 norm, the sup norm and
    /// `TV(u) + |b(t) - u(0+)|`.
    pub fn margins(&self, t: f64, u: &GridFunction) -> Result<[f64; 3]> {
        let b = self.bounds_at(t)?;
        let trace = u.values().first().copied().unwrap_or(0.0);
        let jump = (self.coef.boundary.eval(t)? - trace).abs();
        Ok([
            b.alpha1 - u.l1_norm(),
            b.alpha_inf - u.linf_norm(),
            b.alpha_tv - (u.total_variation() + jump),
        ])
    }
}

impl<W: Sync> Process for IbvpProcess<W> {
    type State = GridFunction;
    type Param = W;

    fn solve(&self, t: f64, t0: f64, x: &GridFunction, w: &W) -> Result<GridFunction> {
        ibvp_solve_with(&self.coef, x, w, t0, t, &self.opts)
    }

    fn constants(&self) -> ProcessConstants {
        ibvp_lipschitz_constants(&self.coef.bounds, self.horizon, self.radius)
            .expect("certificates are finite")
    }

    fn in_domain(&self, t: f64, x: &GridFunction) -> bool {
        self.margins(t, x)
            .map(|m| m.iter().all(|v| *v >= -self.slack))
            .unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::{renewal_solve, RenewalBounds, RenewalCoefficients};
    use crate::spaces::Grid;

    fn unit_bounds() -> IbvpBounds {
        IbvpBounds {
            v_min: 1.0,
            v_max: 1.0,
            v_inf: 1.0,
            ..Default::default()
        }
    }

    fn coef(m: f64, b: f64) -> IbvpCoefficients<()> {
        IbvpCoefficients::new(
            |_, _| 1.0,
            move |_, _, _| m,
            |_, _, _| 0.0,
            BvTimeSeries::constant(b),
            IbvpBounds {
                m_inf: m.abs(),
                b_inf: b.abs(),
                ..unit_bounds()
            },
        )
        .unwrap()
    }

    #[test]
    fn crossing_time_examples() {
        let one = |_: f64, _: f64| 1.0;
        assert!((boundary_crossing_time(&one, 1.0, 0.3, 0.0, 4).unwrap() - 0.7).abs() < 1e-15);
        let two = |_: f64, _: f64| 2.0;
        assert_eq!(boundary_crossing_time(&two, 1.0, 1.0, 0.0, 4).unwrap(), 0.5);
        let near = boundary_crossing_time(&one, 1.0, 1.0 - 1e-13, 0.0, 4).unwrap();
        assert!(near < 1e-12);
        assert!(matches!(
            boundary_crossing_time(&one, 1.0, 1.5, 0.0, 4),
            Err(Error::NoCrossing { .. })
        ));
    }

    #[test]
    fn inflow_fills_the_boundary_layer() {
        let g = Grid::line(0.0, 3.0, 1200).unwrap();
        let u0 = GridFunction::zeros(g.clone());
        let exact = GridFunction::indicator(g, 0.0, 1.0);
        let u = ibvp_solve(&coef(0.0, 1.0), &u0, &(), 0.0, 1.0, 10).unwrap();
        assert!(u.l1_distance(&exact).unwrap() <= 2.0 / 400.0);
        assert_eq!(u.values()[0], 1.0);
    }

    #[test]
    fn decaying_inflow_profile() {
        let g = Grid::line(0.0, 3.0, 1200).unwrap();
        let u0 = GridFunction::zeros(g.clone());
        let u = ibvp_solve(&coef(-1.0, 1.0), &u0, &(), 0.0, 1.0, 10).unwrap();
        let exact = GridFunction::from_fn(g, |x| if x[0] < 1.0 { (-x[0]).exp() } else { 0.0 });
        assert!(u.l1_distance(&exact).unwrap() <= 1e-3);
    }

    #[test]
    fn interior_branch_matches_the_whole_space_solver() {
        let speed = |_: f64, x: f64| 1.0 + 0.2 * (x * 0.7).sin().powi(2);
        let m = |t: f64, x: &[f64; 2], _: &()| -0.3 * x[0].cos() * (1.0 + t);
        let ib = IbvpCoefficients::new(
            speed,
            m,
            |_, _, _| 0.0,
            BvTimeSeries::constant(0.0),
            IbvpBounds {
                v_min: 1.0,
                v_max: 1.2,
                v_inf: 1.2,
                ..Default::default()
            },
        )
        .unwrap();
        let re = RenewalCoefficients::new(
            1,
            move |t, x: &[f64; 2], _: &()| [speed(t, x[0]), 0.0],
            m,
            |_, _, _| 0.0,
            RenewalBounds {
                v_inf: 1.2,
                ..Default::default()
            },
        )
        .unwrap();
        let g = Grid::line(0.0, 4.0, 400).unwrap();
        let u0 = GridFunction::from_fn(g, |x| {
            if (1.0..2.0).contains(&x[0]) {
                1.0 + x[0]
            } else {
                0.0
            }
        });
        let a = ibvp_solve(&ib, &u0, &(), 0.0, 0.5, 8).unwrap();
        let b = renewal_solve(&re, &u0, &(), 0.0, 0.5, 8).unwrap();
        let sigma = characteristic(&*ib.v, 1, 0.0, [0.0, 0.0], 0.5, &(), 8)[0];
        let ax = *g_axis(&a);
        for i in 0..ax.n {
            if ax.center(i) >= sigma {
                assert_eq!(a.values()[i], b.values()[i]);
            } else {
                assert_eq!(a.values()[i], 0.0);
            }
        }
    }

    fn g_axis(u: &GridFunction) -> &crate::spaces::Axis {
        u.grid().axis(0)
    }

    #[test]
    fn cell_average_mass_balance() {
        let speed = |t: f64, x: f64| 1.0 + 0.3 * (t + x).sin().abs();
        let b = BvTimeSeries::new(vec![0.0, 0.3, 0.6], vec![1.0, 2.0, 0.5]).unwrap();
        let coef = IbvpCoefficients::new(
            speed,
            |_, _, _: &()| 0.0,
            |_, _, _| 0.0,
            b,
            IbvpBounds {
                v_min: 1.0,
                v_max: 1.3,
                v_inf: 1.3,
                ..Default::default()
            },
        )
        .unwrap();
        let g = Grid::line(0.0, 4.0, 800).unwrap();
        let u0 = GridFunction::indicator(g, 0.5, 1.5);
        let opts = IbvpOptions {
            n_sub: 10,
            projection: Projection::CellAverage,
            open_outflow: false,
        };
        let u = ibvp_solve_with(&coef, &u0, &(), 0.0, 1.0, &opts).unwrap();
        let influx = inflow(&coef, 0.0, 1.0).unwrap();
        let expected = u0.integral() + influx;
        assert!(((u.integral() - expected) / expected).abs() < 1e-3);
    }

    #[test]
    fn domain_bound_examples() {
        let zero = BvTimeSeries::constant(0.0);
        let b = ibvp_domain_bounds(0.2, 1.5, 1.0, &IbvpBounds::default(), &zero).unwrap();
        assert_eq!((b.alpha1, b.alpha_inf, b.alpha_tv), (1.5, 1.5, 1.5));
        let c = IbvpBounds {
            m_inf: 0.3,
            q1: 0.1,
            ..Default::default()
        };
        assert_eq!(
            ibvp_domain_bounds(2.0, 4.0, 2.0, &c, &zero).unwrap().alpha1,
            4.0
        );
        let k = IbvpBounds {
            m_inf: std::f64::consts::LN_2,
            ..Default::default()
        };
        let b = ibvp_domain_bounds(0.0, 1.0, 1.0, &k, &BvTimeSeries::constant(3.0)).unwrap();
        assert!((b.alpha_tv - (1.0 - std::f64::consts::LN_2) * 2.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_variation_enters_the_tv_bound() {
        let b = BvTimeSeries::new(vec![0.0, 0.5], vec![0.0, 0.25]).unwrap();
        let early = ibvp_domain_bounds(0.0, 1.0, 1.0, &IbvpBounds::default(), &b).unwrap();
        let late = ibvp_domain_bounds(0.75, 1.0, 1.0, &IbvpBounds::default(), &b).unwrap();
        assert!((early.alpha_tv - 0.75).abs() < 1e-15);
        assert_eq!(late.alpha_tv, 1.0);
    }

    #[test]
    fn lipschitz_constant_examples() {
        let c = ibvp_lipschitz_constants(&IbvpBounds::default(), 1.0, 1.0).unwrap();
        assert_eq!((c.c_u, c.c_t, c.c_w), (0.0, 0.0, 0.0));
        let m = IbvpBounds {
            m_inf: 1.0,
            ..Default::default()
        };
        let c = ibvp_lipschitz_constants(&m, 1.0, 1.0).unwrap();
        assert_eq!(c.c_u, 1.0);
        assert!((c.c_t - 1f64.exp()).abs() < 1e-15);
        let q = IbvpBounds {
            q_lip: 1.0,
            v_max: 1.0,
            ..Default::default()
        };
        assert_eq!(ibvp_lipschitz_constants(&q, 1.0, 0.0).unwrap().c_w, 2.0);
    }

    #[test]
    fn zero_inflow_speed_is_rejected() {
        let r = IbvpCoefficients::<()>::new(
            |_, _| 1.0,
            |_, _, _| 0.0,
            |_, _, _| 0.0,
            BvTimeSeries::constant(0.0),
            IbvpBounds::default(),
        );
        assert!(matches!(r, Err(Error::Config { .. })));
    }
}
