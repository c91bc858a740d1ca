//! Balance laws `u_t + div(v u) = m u + q` on the whole space (1D or 2D),
//! solved through the explicit characteristics formula
//!
//! `u(t, x) = u0(X(t0; t, x)) E(t0, t, x) + int_{t0}^t q(s, X(s; t, x)) E(s, t, x) ds`
//!
//! with `E(s, t, x) = exp int_s^t (m - div v)(r, X(r; t, x)) dr`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_core::{Process, ProcessConstants};
use crate::spaces::{Grid, GridFunction};
use crate::transport::{characteristic, trace_back, Along, Projection};

type VelFn<W> = dyn Fn(f64, &[f64; 2], &W) -> [f64; 2] + Send + Sync;
type ScalarFn<W> = dyn Fn(f64, &[f64; 2], &W) -> f64 + Send + Sync;

/// Certificates of the velocity, the rate `m` and the source `q`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RenewalBounds {
    pub v1: f64,
    pub v_lip: f64,
    pub v_inf: f64,
    pub m_inf: f64,
    pub m_lip: f64,
    pub q_inf: f64,
    pub q1: f64,
    pub q_lip: f64,
}

/// Coefficients `v, m, q` of the balance law, parametrized by `w`.
pub struct RenewalCoefficients<W> {
    pub dim: usize,
    v: Arc<VelFn<W>>,
    m: Arc<ScalarFn<W>>,
    q: Arc<ScalarFn<W>>,
    pub bounds: RenewalBounds,
}

impl<W> Clone for RenewalCoefficients<W> {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            v: Arc::clone(&self.v),
            m: Arc::clone(&self.m),
            q: Arc::clone(&self.q),
            bounds: self.bounds,
        }
    }
}

impl<W> RenewalCoefficients<W> {
    pub fn new(
        dim: usize,
        v: impl Fn(f64, &[f64; 2], &W) -> [f64; 2] + Send + Sync + 'static,
        m: impl Fn(f64, &[f64; 2], &W) -> f64 + Send + Sync + 'static,
        q: impl Fn(f64, &[f64; 2], &W) -> f64 + Send + Sync + 'static,
        bounds: RenewalBounds,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::config("dim", "must be 1 or 2"));
        }
        Ok(Self {
            dim,
            v: Arc::new(v),
            m: Arc::new(m),
            q: Arc::new(q),
            bounds,
        })
    }

    pub fn velocity(&self, t: f64, x: &[f64; 2], w: &W) -> [f64; 2] {
        (self.v)(t, x, w)
    }

    pub fn rate(&self, t: f64, x: &[f64; 2], w: &W) -> f64 {
        (self.m)(t, x, w)
    }

    pub fn source(&self, t: f64, x: &[f64; 2], w: &W) -> f64 {
        (self.q)(t, x, w)
    }

    pub(crate) fn along(&self, grid: &Grid) -> Along<'_, W> {
        let fd = match grid.dim() {
            1 => [0.5 * grid.axis(0).dx, 0.0],
            _ => [0.5 * grid.axis(0).dx, 0.5 * grid.axis(1).dx],
        };
        Along {
            v: &*self.v,
            m: &*self.m,
            q: &*self.q,
            dim: self.dim,
            fd,
        }
    }

    /// Sampled bounds on a grid at the given times and parameters:
    /// `sup |v|`, the largest finite-difference partial derivative of `v`,
    /// `|m|_inf + TV(m)` and `|q|_1`, maximized over the samples.
    pub fn audit(&self, grid: &Grid, times: &[f64], params: &[W]) -> RenewalAudit {
        let mut a = RenewalAudit::default();
        let h = 0.5 * grid.min_dx();
        for &t in times {
            for w in params {
                for k in 0..grid.len() {
                    let x = grid.center(k);
                    let v = self.velocity(t, &x, w);
                    a.v_inf = a.v_inf.max(v[0].hypot(v[1]));
                    for c in 0..self.dim {
                        let (mut xp, mut xm) = (x, x);
                        xp[c] += h;
                        xm[c] -= h;
                        let (vp, vm) = (self.velocity(t, &xp, w), self.velocity(t, &xm, w));
                        for d in 0..self.dim {
                            a.v_lip = a.v_lip.max(((vp[d] - vm[d]) / (2.0 * h)).abs());
                        }
                    }
                }
                let m = GridFunction::from_fn(grid.clone(), |x| self.rate(t, x, w));
                a.m_inf = a.m_inf.max(m.linf_norm() + m.total_variation());
                let q = GridFunction::from_fn(grid.clone(), |x| self.source(t, x, w));
                a.q1 = a.q1.max(q.l1_norm());
            }
        }
        let b = &self.bounds;
        a.passed = a.v_inf <= b.v_inf && a.v_lip <= b.v_lip && a.m_inf <= b.m_inf && a.q1 <= b.q1;
        a
    }
}

/// Outcome of [`RenewalCoefficients::audit`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RenewalAudit {
    pub v_inf: f64,
    pub v_lip: f64,
    pub m_inf: f64,
    pub q1: f64,
    pub passed: bool,
}

/// Discretization parameters of the characteristics solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// RK4 substeps per characteristic and per solve.
    pub n_sub: usize,
    pub projection: Projection,
}

impl SolveOptions {
    pub fn new(n_sub: usize) -> Self {
        Self {
            n_sub,
            projection: Projection::PointSample,
        }
    }

    pub fn cell_average(n_sub: usize) -> Self {
        Self {
            n_sub,
            projection: Projection::CellAverage,
        }
    }
}

/// Solves from `t0` to `t` on the grid of `u0` with point sampling of the
/// datum at the feet of the characteristics.
pub fn renewal_solve<W: Sync>(
    coef: &RenewalCoefficients<W>,
    u0: &GridFunction,
    w: &W,
    t0: f64,
    t: f64,
    n_sub: usize,
) -> Result<GridFunction> {
    renewal_solve_with(coef, u0, w, t0, t, &SolveOptions::new(n_sub))
}

pub fn renewal_solve_with<W: Sync>(
    coef: &RenewalCoefficients<W>,
    u0: &GridFunction,
    w: &W,
    t0: f64,
    t: f64,
    opts: &SolveOptions,
) -> Result<GridFunction> {
    if !(t >= t0) {
        return Err(Error::InvalidArgument(format!(
            "final time {t} precedes {t0}"
        )));
    }
    let grid = u0.grid();
    if grid.dim() != coef.dim {
        return Err(Error::GridMismatch(format!(
            "{}D datum for {}D coefficients",
            grid.dim(),
            coef.dim
        )));
    }
    if t == t0 {
        return Ok(u0.clone());
    }
    u0.check_clearance(coef.bounds.v_inf * (t - t0), "renewal datum")?;
    let along = coef.along(grid);
    let n_sub = opts.n_sub.max(1);
    let traces: Vec<_> = (0..grid.len())
        .into_par_iter()
        .map(|k| trace_back(&along, t, grid.center(k), t0, w, n_sub))
        .collect();
    let values = match opts.projection {
        Projection::PointSample => traces
            .iter()
            .map(|tr| u0.lookup(&tr.foot) * tr.log_e.exp() + tr.source)
            .collect(),
        Projection::CellAverage => {
            let preimage = preimage_integrals(coef, u0, w, t0, t, 2 * n_sub);
            traces
                .iter()
                .zip(preimage)
                .map(|(tr, mass)| mass * tr.log_m.exp() + tr.source)
                .collect()
        }
    };
    GridFunction::from_values(grid.clone(), values)
}

/// Average of `u0` over the preimage at `t0` of every cell at time `t`.
pub(crate) fn preimage_integrals<W: Sync>(
    coef: &RenewalCoefficients<W>,
    u0: &GridFunction,
    w: &W,
    t0: f64,
    t: f64,
    steps: usize,
) -> Vec<f64> {
    let grid = u0.grid();
    let v = &*coef.v;
    let ax = *grid.axis(0);
    let vol = grid.cell_volume();
    if grid.dim() == 1 {
        let feet: Vec<f64> = (0..=ax.n)
            .into_par_iter()
            .map(|i| characteristic(v, 1, t, [ax.edge(i), 0.0], t0, w, steps)[0])
            .collect();
        return (0..ax.n)
            .map(|i| u0.interval_integral(feet[i], feet[i + 1]) / vol)
            .collect();
    }
    let ay = *grid.axis(1);
    let nodes = (ax.n + 1) * (ay.n + 1);
    let feet: Vec<[f64; 2]> = (0..nodes)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % (ax.n + 1), k / (ax.n + 1));
            characteristic(v, 2, t, [ax.edge(i), ay.edge(j)], t0, w, steps)
        })
        .collect();
    let node = |i: usize, j: usize| feet[i + (ax.n + 1) * j];
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = grid.unflatten(k);
            let quad = [
                node(i, j),
                node(i + 1, j),
                node(i + 1, j + 1),
                node(i, j + 1),
            ];
            u0.polygon_integral(&quad) / vol
        })
        .collect()
}

/// Values of the invariant-domain functions at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainBounds {
    pub alpha1: f64,
    pub alpha_inf: f64,
    pub alpha_tv: f64,
}

impl DomainBounds {
    fn admissible(self, t: f64) -> Result<Self> {
        for (name, a) in [
            ("alpha_1", self.alpha1),
            ("alpha_inf", self.alpha_inf),
            ("alpha_tv", self.alpha_tv),
        ] {
            if !(a > 0.0) {
                return Err(Error::InadmissibleHorizon(format!(
                    "{name}({t}) = {a} is not positive"
                )));
            }
        }
        Ok(self)
    }

    /// Margins `alpha - measured` for the L1 norm, sup norm and variation.
    pub fn margins(&self, u: &GridFunction) -> [f64; 3] {
        [
            self.alpha1 - u.l1_norm(),
            self.alpha_inf - u.linf_norm(),
            self.alpha_tv - u.total_variation(),
        ]
    }
}

fn check_time(t: f64, horizon: f64) -> Result<()> {
    if !(horizon > 0.0) || t < 0.0 || t > horizon * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "time {t} outside [0, {horizon}]"
        )));
    }
    Ok(())
}

/// Invariant-domain bounds of the renewal process on `[0, T]`:
///
/// * `alpha_1 = R e^{-M (T - t)} - Q_1 (T - t) e^{M t}`
/// * `alpha_inf = R e^{-(M + V_L)(T - t)} - Q_inf e^{(M + V_L) t} (T - t)`
/// * `alpha_TV = R e^{-(M + V_L)(T - t)} (1 - (M + V_1)(T - t))
///    - Q_inf e^{(M + V_L) t} (1 + (M + V_1) t)(T - t)`
///
/// with `M = M_inf`.
pub fn ivp_domain_bounds(
    t: f64,
    radius: f64,
    horizon: f64,
    b: &RenewalBounds,
) -> Result<DomainBounds> {
    check_time(t, horizon)?;
    let rem = horizon - t;
    let m = b.m_inf;
    let mv = b.m_inf + b.v_lip;
    let m1 = b.m_inf + b.v1;
    DomainBounds {
        alpha1: radius * (-m * rem).exp() - b.q1 * rem * (m * t).exp(),
        alpha_inf: radius * (-mv * rem).exp() - b.q_inf * (mv * t).exp() * rem,
        alpha_tv: radius * (-mv * rem).exp() * (1.0 - m1 * rem)
            - b.q_inf * (mv * t).exp() * (1.0 + m1 * t) * rem,
    }
    .admissible(t)
}

/// Lipschitz constants of the renewal process:
///
/// * `C_u = M_inf`
/// * `C_t = V_inf R e^{(M + 2 V_L) T} + Q_1 e^{M T} + (M + V_L) R e^{(M + V_L) T}`
/// * `C_w = [V_L (2R + Q_inf)(1 + (V_1 + M) T) + Q_L + (M_L + V_L)(R + Q_inf T)] e^{(M + V_L) T}`
pub fn ivp_lipschitz_constants(
    b: &RenewalBounds,
    horizon: f64,
    radius: f64,
) -> Result<ProcessConstants> {
    let (m, t, r) = (b.m_inf, horizon, radius);
    let c_t = b.v_inf * r * ((m + 2.0 * b.v_lip) * t).exp()
        + b.q1 * (m * t).exp()
        + (m + b.v_lip) * r * ((m + b.v_lip) * t).exp();
    let c_w = (b.v_lip * (2.0 * r + b.q_inf) * (1.0 + (b.v1 + m) * t)
        + (b.q_lip + (b.m_lip + b.v_lip) * (r + b.q_inf * t)))
        * ((m + b.v_lip) * t).exp();
    ProcessConstants::new(m, c_t, c_w, horizon)
}

/// Both sides of the shift estimate
/// `int |u(X(t; t0, x)) - u(x)| dx <= (V_inf / V_L)(e^{V_L |t - t0|} - 1) TV(u)`,
/// the left one by a `per_cell`-point midpoint rule in each direction.
pub fn shift_estimate_check<W>(
    coef: &RenewalCoefficients<W>,
    u: &GridFunction,
    w: &W,
    t0: f64,
    t: f64,
    n_sub: usize,
    per_cell: usize,
) -> (f64, f64) {
    let grid = u.grid();
    let per = per_cell.max(1);
    let sub = |ax: &crate::spaces::Axis, i: usize, s: usize| {
        ax.edge(i) + (s as f64 + 0.5) * ax.dx / per as f64
    };
    let mut lhs = 0.0;
    let weight = grid.cell_volume() / (per.pow(grid.dim() as u32)) as f64;
    for k in 0..grid.len() {
        let (i, j) = grid.unflatten(k);
        for a in 0..per {
            for b in 0..(if grid.dim() == 2 { per } else { 1 }) {
                let x = if grid.dim() == 1 {
                    [sub(grid.axis(0), i, a), 0.0]
                } else {
                    [sub(grid.axis(0), i, a), sub(grid.axis(1), j, b)]
                };
                let y = characteristic(&*coef.v, coef.dim, t0, x, t, w, n_sub);
                lhs += (u.lookup(&y) - u.values()[k]).abs() * weight;
            }
        }
    }
    let span = (t - t0).abs();
    let b = &coef.bounds;
    let factor = if b.v_lip > 0.0 {
        b.v_inf / b.v_lip * (b.v_lip * span).exp_m1()
    } else {
        b.v_inf * span
    };
    (lhs, factor * u.total_variation())
}

/// The renewal solver as a process on `[t_start, t_start + T]` with domain
/// given by the `alpha` bounds for radius `R`. `slack` loosens the domain
/// predicate to absorb discretization error.
pub struct RenewalProcess<W> {
    pub coef: RenewalCoefficients<W>,
    pub opts: SolveOptions,
    pub t_start: f64,
    pub horizon: f64,
    pub radius: f64,
    pub slack: f64,
}

impl<W> RenewalProcess<W> {
    pub fn new(
        coef: RenewalCoefficients<W>,
        opts: SolveOptions,
        t_start: f64,
        horizon: f64,
        radius: f64,
    ) -> Result<Self> {
        ivp_domain_bounds(0.0, radius, horizon, &coef.bounds)?;
        Ok(Self {
            coef,
            opts,
            t_start,
            horizon,
            radius,
            slack: 0.0,
        })
    }

    pub fn with_slack(mut self, slack: f64) -> Self {
        self.slack = slack;
        self
    }

    pub fn bounds_at(&self, t: f64) -> Result<DomainBounds> {
        let s = (t - self.t_start).clamp(0.0, self.horizon);
        ivp_domain_bounds(s, self.radius, self.horizon, &self.coef.bounds)
    }
}

impl<W: Sync> Process for RenewalProcess<W> {
    type State = GridFunction;
    type Param = W;

    fn solve(&self, t: f64, t0: f64, x: &GridFunction, w: &W) -> Result<GridFunction> {
        renewal_solve_with(&self.coef, x, w, t0, t, &self.opts)
    }

    fn constants(&self) -> ProcessConstants {
        ivp_lipschitz_constants(&self.coef.bounds, self.horizon, self.radius)
            .expect("certificates are finite")
    }

    fn in_domain(&self, t: f64, x: &GridFunction) -> bool {
        match self.bounds_at(t) {
            Ok(b) => b.margins(x).iter().all(|m| *m >= -self.slack),
            Err(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(v: f64, m: f64, q: f64) -> RenewalCoefficients<()> {
        RenewalCoefficients::new(
            1,
            move |_, _, _| [v, 0.0],
            move |_, _, _| m,
            move |_, _, _| q,
            RenewalBounds {
                v_inf: v.abs(),
                m_inf: m.abs(),
                ..Default::default()
            },
        )
        .unwrap()
    }

    fn line() -> Grid {
        Grid::line(-1.0, 3.0, 1600).unwrap()
    }

    #[test]
    fn translation_of_an_indicator() {
        let u0 = GridFunction::indicator(line(), 0.0, 1.0);
        let exact = GridFunction::indicator(line(), 0.5, 1.5);
        for opts in [SolveOptions::new(10), SolveOptions::cell_average(10)] {
            let u =
                renewal_solve_with(&constant(1.0, 0.0, 0.0), &u0, &(), 0.0, 0.5, &opts).unwrap();
            assert!(u.l1_distance(&exact).unwrap() <= 2.0 / 400.0);
        }
    }

    #[test]
    fn pure_decay() {
        let u0 = GridFunction::from_fn(line(), |x| {
            (-(x[0] - 1.0).powi(2) * 8.0).exp() * f64::from(x[0].abs() < 2.0)
        });
        let u0 = u0.map(|v| if v < 1e-12 { 0.0 } else { v });
        let u = renewal_solve(&constant(0.0, -1.0, 0.0), &u0, &(), 0.0, 0.7, 10).unwrap();
        let exact = u0.map(|v| v * (-0.7f64).exp());
        assert!(u.l1_distance(&exact).unwrap() <= 1e-6);
    }

    #[test]
    fn source_on_the_unit_interval() {
        let q = |_: f64, x: &[f64; 2], _: &()| if (0.0..1.0).contains(&x[0]) { 1.0 } else { 0.0 };
        let coef = RenewalCoefficients::new(
            1,
            |_, _, _| [0.0, 0.0],
            |_, _, _| 0.0,
            q,
            RenewalBounds {
                q1: 1.0,
                q_inf: 3.0,
                ..Default::default()
            },
        )
        .unwrap();
        let u0 = GridFunction::indicator(line(), 0.25, 0.5);
        let u = renewal_solve(&coef, &u0, &(), 0.0, 0.6, 10).unwrap();
        let exact = u0
            .lin_comb(1.0, &GridFunction::indicator(line(), 0.0, 1.0), 0.6)
            .unwrap();
        assert!(u.l1_distance(&exact).unwrap() <= 1e-3);
    }

    #[test]
    fn identity_at_the_initial_time() {
        let u0 = GridFunction::indicator(line(), 0.0, 1.0);
        assert_eq!(
            renewal_solve(&constant(1.0, 0.3, 0.2), &u0, &(), 1.0, 1.0, 4).unwrap(),
            u0
        );
    }

    #[test]
    fn clearance_is_enforced() {
        let u0 = GridFunction::indicator(line(), 0.0, 2.9);
        let r = renewal_solve(&constant(1.0, 0.0, 0.0), &u0, &(), 0.0, 0.5, 4);
        assert!(matches!(r, Err(Error::SupportClearanceViolated(_))));
    }

    #[test]
    fn cell_average_conserves_mass_under_compression() {
        let coef = RenewalCoefficients::new(
            1,
            |_, x: &[f64; 2], _: &()| [-0.5 * x[0], 0.0],
            |_, _, _| 0.0,
            |_, _, _| 0.0,
            RenewalBounds {
                v_inf: 1.0,
                v_lip: 0.5,
                ..Default::default()
            },
        )
        .unwrap();
        let u0 = GridFunction::indicator(line(), 0.0, 1.3);
        let u =
            renewal_solve_with(&coef, &u0, &(), 0.0, 0.4, &SolveOptions::cell_average(8)).unwrap();
        assert!((u.integral() - u0.integral()).abs() < 1e-12);
    }

    #[test]
    fn domain_bound_examples() {
        let zero = RenewalBounds::default();
        let b = ivp_domain_bounds(0.3, 2.0, 1.0, &zero).unwrap();
        assert_eq!((b.alpha1, b.alpha_inf, b.alpha_tv), (2.0, 2.0, 2.0));
        let some = RenewalBounds {
            m_inf: 0.4,
            v_lip: 0.2,
            q1: 0.1,
            q_inf: 0.1,
            ..Default::default()
        };
        let b = ivp_domain_bounds(1.5, 3.0, 1.5, &some).unwrap();
        assert_eq!((b.alpha1, b.alpha_inf), (3.0, 3.0));
        let ln2 = RenewalBounds {
            m_inf: std::f64::consts::LN_2,
            ..Default::default()
        };
        let b = ivp_domain_bounds(0.0, 1.0, 1.0, &ln2).unwrap();
        assert!((b.alpha1 - 0.5).abs() < 1e-15);
        let big = RenewalBounds {
            q1: 10.0,
            ..Default::default()
        };
        assert!(matches!(
            ivp_domain_bounds(0.0, 1.0, 1.0, &big),
            Err(Error::InadmissibleHorizon(_))
        ));
    }

    #[test]
    fn lipschitz_constant_examples() {
        let c = ivp_lipschitz_constants(&RenewalBounds::default(), 1.0, 1.0).unwrap();
        assert_eq!((c.c_u, c.c_t, c.c_w), (0.0, 0.0, 0.0));
        let m = RenewalBounds {
            m_inf: 1.0,
            ..Default::default()
        };
        assert_eq!(ivp_lipschitz_constants(&m, 1.0, 0.0).unwrap().c_u, 1.0);
        let q = RenewalBounds {
            q1: 0.7,
            ..Default::default()
        };
        assert_eq!(ivp_lipschitz_constants(&q, 2.0, 0.0).unwrap().c_t, 0.7);
    }
}
