//! Parametrized ODE processes `u' = f(t, u, w)` with `w` frozen, solved by
//! fixed-step classical RK4 inside invariant balls.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_core::{Process, ProcessConstants};
use crate::spaces::GridFunction;

type RhsFn<W> = dyn Fn(f64, &[f64], &W) -> Vec<f64> + Send + Sync;

/// Right-hand side with its certificates: joint Lipschitz constant `F_L`,
/// sup bound `F_inf` and the radius `R` of the ball it is certified on.
pub struct OdeField<W> {
    f: Arc<RhsFn<W>>,
    pub f_lip: f64,
    pub f_inf: f64,
    pub radius: f64,
}

impl<W> Clone for OdeField<W> {
    fn clone(&self) -> Self {
        Self {
            f: Arc::clone(&self.f),
            f_lip: self.f_lip,
            f_inf: self.f_inf,
            radius: self.radius,
        }
    }
}

impl<W> OdeField<W> {
    pub fn new(
        f: impl Fn(f64, &[f64], &W) -> Vec<f64> + Send + Sync + 'static,
        f_lip: f64,
        f_inf: f64,
        radius: f64,
    ) -> Result<Self> {
        for (name, v) in [("f_lip", f_lip), ("f_inf", f_inf)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(
                    name,
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        if !(radius > 0.0) {
            return Err(Error::config(
                "radius",
                format!("must be positive, got {radius}"),
            ));
        }
        Ok(Self {
            f: Arc::new(f),
            f_lip,
            f_inf,
            radius,
        })
    }

    pub fn eval(&self, t: f64, u: &[f64], w: &W) -> Vec<f64> {
        (self.f)(t, u, w)
    }

    /// Longest admissible horizon `R / (2 F_inf)`.
    pub fn max_horizon(&self) -> f64 {
        if self.f_inf == 0.0 {
            f64::INFINITY
        } else {
            self.radius / (2.0 * self.f_inf)
        }
    }

    /// `(C_u, C_t, C_w) = (F_L, F_inf, F_L e^{F_L T})` on horizon `T`.
    pub fn constants(&self, horizon: f64) -> Result<ProcessConstants> {
        ProcessConstants::new(
            self.f_lip,
            self.f_inf,
            self.f_lip * (self.f_lip * horizon).exp(),
            horizon,
        )
    }

    /// Randomized check of the certificates on sampled triples.
    pub fn audit<R: Rng>(
        &self,
        rng: &mut R,
        samples: usize,
        times: (f64, f64),
        mut sample_u: impl FnMut(&mut R) -> Vec<f64>,
        mut sample_w: impl FnMut(&mut R) -> W,
        dist_w: impl Fn(&W, &W) -> f64,
    ) -> FieldAudit {
        let mut audit = FieldAudit::default();
        for _ in 0..samples {
            let t = rng.gen_range(times.0..=times.1);
            let (u1, u2) = (sample_u(rng), sample_u(rng));
            let (w1, w2) = (sample_w(rng), sample_w(rng));
            let f1 = self.eval(t, &u1, &w1);
            let f2 = self.eval(t, &u2, &w2);
            audit.max_norm = audit.max_norm.max(norm(&f1)).max(norm(&f2));
            let d = dist(&u1, &u2) + dist_w(&w1, &w2);
            if d > 0.0 {
                audit.max_lip_ratio = audit.max_lip_ratio.max(dist(&f1, &f2) / d);
            }
            audit.samples += 1;
        }
        audit.lipschitz_ok = audit.max_lip_ratio <= self.f_lip;
        audit.bound_ok = audit.max_norm <= self.f_inf;
        audit
    }
}

/// Outcome of [`OdeField::audit`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FieldAudit {
    pub samples: usize,
    pub max_lip_ratio: f64,
    pub max_norm: f64,
    pub lipschitz_ok: bool,
    pub bound_ok: bool,
}

pub(crate) fn norm(u: &[f64]) -> f64 {
    u.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
}

fn rk4_step<W>(field: &OdeField<W>, t: f64, h: f64, u: &[f64], w: &W) -> Vec<f64> {
    let k1 = field.eval(t, u, w);
    let k2 = field.eval(t + 0.5 * h, &axpy(0.5 * h, &k1, u), w);
    let k3 = field.eval(t + 0.5 * h, &axpy(0.5 * h, &k2, u), w);
    let k4 = field.eval(t + h, &axpy(h, &k3, u), w);
    u.iter()
        .enumerate()
        .map(|(i, ui)| ui + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// RK4 with `n_sub` equal substeps and `w` frozen. The ball of radius `R`
/// is checked after every substep.
pub fn ode_solve<W>(
    field: &OdeField<W>,
    t0: f64,
    t: f64,
    u0: &[f64],
    w: &W,
    n_sub: usize,
) -> Result<Vec<f64>> {
    Ok(ode_trace(field, t0, t, u0, w, n_sub)?
        .pop()
        .map(|s| s.1)
        .unwrap_or_default())
}

/// Like [`ode_solve`] but keeps every substep, starting with `(t0, u0)`.
pub fn ode_trace<W>(
    field: &OdeField<W>,
    t0: f64,
    t: f64,
    u0: &[f64],
    w: &W,
    n_sub: usize,
) -> Result<Vec<(f64, Vec<f64>)>> {
    if !(t >= t0) {
        return Err(Error::InvalidArgument(format!(
            "final time {t} precedes {t0}"
        )));
    }
    if n_sub == 0 {
        return Err(Error::InvalidArgument("n_sub must be at least 1".into()));
    }
    let horizon = field.max_horizon();
    if t - t0 > horizon * (1.0 + 1e-12) {
        return Err(Error::HorizonExceeded {
            span: t - t0,
            horizon,
        });
    }
    let mut out = vec![(t0, u0.to_vec())];
    if t == t0 {
        return Ok(out);
    }
    let h = (t - t0) / n_sub as f64;
    let mut u = u0.to_vec();
    for k in 0..n_sub {
        let s = t0 + k as f64 * h;
        u = rk4_step(field, s, h, &u, w);
        let time = if k + 1 == n_sub { t } else { s + h };
        if !(norm(&u) <= field.radius) {
            return Err(Error::DomainExit {
                component: None,
                step: Some(k),
                time,
            });
        }
        out.push((time, u.clone()));
    }
    Ok(out)
}

/// Radius `R - (T - t) F_inf` of the invariant ball at time `t` of a
/// process living on `[0, T]`.
pub fn ode_domain_radius(t: f64, horizon: f64, radius: f64, f_inf: f64) -> Result<f64> {
    let r = radius - (horizon - t) * f_inf;
    if horizon * f_inf > 0.5 * radius * (1.0 + 1e-12) || r < 0.0 {
        return Err(Error::NegativeRadius { radius: r });
    }
    Ok(r)
}

/// The ODE process: on `[t_start, t_start + T]` its domain at time `t` is the
/// ball of radius `R - (T - (t - t_start)) F_inf`.
pub struct OdeProcess<W> {
    pub field: OdeField<W>,
    pub n_sub: usize,
    pub t_start: f64,
    horizon: f64,
}

impl<W> OdeProcess<W> {
    /// `horizon` is clipped to `R / (2 F_inf)`.
    pub fn new(field: OdeField<W>, t_start: f64, horizon: f64, n_sub: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::config("horizon", "must be positive"));
        }
        if n_sub == 0 {
            return Err(Error::config("n_sub", "must be at least 1"));
        }
        let horizon = horizon.min(field.max_horizon());
        Ok(Self {
            field,
            n_sub,
            t_start,
            horizon,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn domain_radius(&self, t: f64) -> f64 {
        self.field.radius - (self.horizon - (t - self.t_start)) * self.field.f_inf
    }
}

impl<W> Process for OdeProcess<W> {
    type State = Vec<f64>;
    type Param = W;

    fn solve(&self, t: f64, t0: f64, x: &Vec<f64>, w: &W) -> Result<Vec<f64>> {
        ode_solve(&self.field, t0, t, x, w, self.n_sub)
    }

    fn constants(&self) -> ProcessConstants {
        self.field
            .constants(self.horizon)
            .expect("certificates validated at construction")
    }

    fn in_domain(&self, t: f64, x: &Vec<f64>) -> bool {
        norm(x) <= self.domain_radius(t) + 1e-12
    }
}

/// One segment of a global continuation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub k: i32,
    pub radius: f64,
    pub t_start: f64,
    pub t_end: f64,
}

/// Stitched trajectory of [`ode_continue_global`].
#[derive(Debug, Clone, PartialEq)]
pub struct Continuation {
    pub samples: Vec<(f64, Vec<f64>)>,
    pub segments: Vec<Segment>,
}

impl Continuation {
    pub fn last(&self) -> &(f64, Vec<f64>) {
        self.samples.last().expect("at least the initial sample")
    }
}

/// Global continuation over doubling balls `R_k = 2^k`, each segment lasting
/// `T_k = R_k / (2 F_inf(R_k))`. The first radius is the smallest `R_k`
/// (with `k >= 0`) whose initial domain, the ball of radius `R_{k-1}`,
/// contains `u0`. Substeps are at most `max_step` long.
pub fn ode_continue_global<W>(
    f: impl Fn(f64, &[f64], &W) -> Vec<f64> + Send + Sync + Clone + 'static,
    f_inf_of: impl Fn(f64) -> f64,
    t0: f64,
    u0: &[f64],
    w: &W,
    horizon: f64,
    max_step: f64,
) -> Result<Continuation> {
    const K_MAX: i32 = 60;
    if !(max_step > 0.0) {
        return Err(Error::InvalidArgument("max_step must be positive".into()));
    }
    let mut k = 0;
    while norm(u0) > 2f64.powi(k - 1) {
        k += 1;
    }
    let end = t0 + horizon;
    let mut t = t0;
    let mut u = u0.to_vec();
    let mut out = Continuation {
        samples: vec![(t0, u.clone())],
        segments: Vec::new(),
    };
    while t < end {
        if k > K_MAX {
            return Err(Error::HorizonUnreachable {
                reached: t,
                segments: out.segments.len(),
            });
        }
        let radius = 2f64.powi(k);
        let f_inf = f_inf_of(radius);
        let field = OdeField::new(f.clone(), 0.0, f_inf, radius)?;
        let length = field.max_horizon();
        let t_end = if t + length >= end { end } else { t + length };
        if t_end - t <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::HorizonUnreachable {
                reached: t,
                segments: out.segments.len(),
            });
        }
        let n = ((t_end - t) / max_step).ceil().max(1.0) as usize;
        let trace = ode_trace(&field, t, t_end, &u, w, n)?;
        out.samples.extend(trace.into_iter().skip(1));
        out.segments.push(Segment {
            k,
            radius,
            t_start: t,
            t_end,
        });
        u = out.last().1.clone();
        t = t_end;
        k += 1;
    }
    Ok(out)
}

type KernelFn = dyn Fn(f64, &[f64; 2]) -> Vec<f64> + Send + Sync;
type NonlocalRhs = dyn Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync;

/// `f(t, u, w) = g(t, u, int eta(t, x) w(x) dx)` with the integral evaluated
/// by the midpoint rule on `grid` cell centers.
pub struct NonlocalField {
    g: Arc<NonlocalRhs>,
    kernel: Arc<KernelFn>,
    pub grid: crate::spaces::Grid,
    pub g_lip: f64,
    pub g_inf: f64,
    pub kernel_sup: f64,
}

impl Clone for NonlocalField {
    fn clone(&self) -> Self {
        Self {
            g: Arc::clone(&self.g),
            kernel: Arc::clone(&self.kernel),
            grid: self.grid.clone(),
            g_lip: self.g_lip,
            g_inf: self.g_inf,
            kernel_sup: self.kernel_sup,
        }
    }
}

impl NonlocalField {
    pub fn new(
        g: impl Fn(f64, &[f64], &[f64]) -> Vec<f64> + Send + Sync + 'static,
        kernel: impl Fn(f64, &[f64; 2]) -> Vec<f64> + Send + Sync + 'static,
        grid: crate::spaces::Grid,
        g_lip: f64,
        g_inf: f64,
        kernel_sup: f64,
    ) -> Self {
        Self {
            g: Arc::new(g),
            kernel: Arc::new(kernel),
            grid,
            g_lip,
            g_inf,
            kernel_sup,
        }
    }

    /// `W = sum_i eta(t, x_i) w_i |cell|`.
    pub fn moments(&self, t: f64, w: &GridFunction) -> Result<Vec<f64>> {
        if w.grid() != &self.grid {
            w.same_grid(&GridFunction::zeros(self.grid.clone()))?;
        }
        let vol = self.grid.cell_volume();
        let mut acc: Vec<f64> = Vec::new();
        for (k, wk) in w.values().iter().enumerate() {
            let eta = (self.kernel)(t, &self.grid.center(k));
            if acc.is_empty() {
                acc = vec![0.0; eta.len()];
            }
            for (a, e) in acc.iter_mut().zip(&eta) {
                *a += e * wk * vol;
            }
        }
        Ok(acc)
    }

    /// Converts to an [`OdeField`] on grid-function parameters with
    /// `F_L = G_L (1 + |eta|_inf)` and `F_inf = G_inf`.
    pub fn into_field(self, radius: f64) -> Result<OdeField<GridFunction>> {
        let f_lip = self.g_lip * (1.0 + self.kernel_sup);
        let f_inf = self.g_inf;
        let this = self;
        OdeField::new(
            move |t, u, w: &GridFunction| {
                nonlocal_eval(&this, t, u, w).expect("parameter grid checked by caller")
            },
            f_lip,
            f_inf,
            radius,
        )
    }
}

/// `g(t, u, W)` with `W` the kernel moments of `w`.
pub fn nonlocal_eval(
    field: &NonlocalField,
    t: f64,
    u: &[f64],
    w: &GridFunction,
) -> Result<Vec<f64>> {
    let moments = field.moments(t, w)?;
    Ok((field.g)(t, u, &moments))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::Grid;

    fn scalar(
        f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        lip: f64,
        sup: f64,
        r: f64,
    ) -> OdeField<f64> {
        OdeField::new(
            move |t, u: &[f64], w: &f64| vec![f(t, u[0], *w)],
            lip,
            sup,
            r,
        )
        .unwrap()
    }

    #[test]
    fn constant_rate_is_exact() {
        let f = scalar(|_, _, w| w, 0.0, 2.0, 10.0);
        assert_eq!(ode_solve(&f, 0.0, 1.0, &[0.0], &2.0, 3).unwrap(), vec![2.0]);
    }

    #[test]
    fn exponential_growth_to_1e_8() {
        let f = scalar(|_, u, _| u, 1.0, 0.0, 100.0);
        let u = ode_solve(&f, 0.0, 1.0, &[1.0], &0.0, 100).unwrap();
        assert!((u[0] - 1f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn zero_span_returns_the_initial_state() {
        let f = scalar(|_, u, _| u.sin(), 1.0, 1.0, 10.0);
        assert_eq!(ode_solve(&f, 0.3, 0.3, &[0.7], &0.0, 5).unwrap(), vec![0.7]);
    }

    #[test]
    fn rk4_order_is_four() {
        let f = scalar(|_, u, _| u, 1.0, 0.0, 100.0);
        let err = |n| (ode_solve(&f, 0.0, 1.0, &[1.0], &0.0, n).unwrap()[0] - 1f64.exp()).abs();
        let order = (err(8) / err(16)).log2();
        assert!(order >= 3.9, "order {order}");
    }

    #[test]
    fn horizon_and_ball_are_enforced() {
        let f = scalar(|_, _, _| 1.0, 0.0, 1.0, 1.0);
        assert!(matches!(
            ode_solve(&f, 0.0, 0.6, &[0.0], &0.0, 4),
            Err(Error::HorizonExceeded { .. })
        ));
        let g = scalar(|_, u, _| u, 1.0, 0.0, 2.0);
        assert!(matches!(
            ode_solve(&g, 0.0, 1.0, &[1.0], &0.0, 10),
            Err(Error::DomainExit { .. })
        ));
    }

    #[test]
    fn domain_radius_examples() {
        assert_eq!(ode_domain_radius(0.5, 0.5, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(ode_domain_radius(0.0, 0.5, 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(ode_domain_radius(0.0, 7.0, 3.0, 0.0).unwrap(), 3.0);
        assert!(matches!(
            ode_domain_radius(0.0, 0.6, 1.0, 1.0),
            Err(Error::NegativeRadius { .. })
        ));
    }

    #[test]
    fn continuation_with_bounded_field() {
        let c = ode_continue_global(
            |_, _, _: &()| vec![1.0],
            |_| 1.0,
            0.0,
            &[0.0],
            &(),
            10.0,
            0.5,
        )
        .unwrap();
        assert!(c.segments.len() <= 5);
        assert_eq!(c.segments.len(), 5);
        assert!((c.last().0 - 10.0).abs() < 1e-12);
        assert!((c.last().1[0] - 10.0).abs() < 1e-9);
        // T_k = 2^{k-1}.
        for s in &c.segments[..4] {
            assert!((s.t_end - s.t_start - 2f64.powi(s.k - 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn continuation_with_linear_growth() {
        let c = ode_continue_global(
            |_, u: &[f64], _: &()| vec![u[0]],
            |r| r,
            0.0,
            &[0.25],
            &(),
            3.0,
            0.01,
        )
        .unwrap();
        assert_eq!(c.segments.len(), 6);
        assert!((c.last().1[0] - 0.25 * 3f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn continuation_of_the_zero_field() {
        let c = ode_continue_global(
            |_, _, _: &()| vec![0.0],
            |_| 0.0,
            0.0,
            &[0.0],
            &(),
            4.0,
            1.0,
        )
        .unwrap();
        assert_eq!(c.segments.len(), 1);
        assert!(c.samples.iter().all(|s| s.1[0] == 0.0));
    }

    #[test]
    fn superlinear_growth_stalls() {
        let r = ode_continue_global(
            |_, _, _: &()| vec![0.0],
            |r| r * r,
            0.0,
            &[0.0],
            &(),
            10.0,
            1.0,
        );
        assert!(matches!(r, Err(Error::HorizonUnreachable { .. })), "{r:?}");
    }

    #[test]
    fn nonlocal_moments() {
        let grid = Grid::line(-1.0, 2.0, 3000).unwrap();
        let w = GridFunction::indicator(grid.clone(), 0.0, 1.0);
        let g = |_: f64, u: &[f64], m: &[f64]| vec![u[0] + m[0]];
        let one = NonlocalField::new(g, |_, _| vec![1.0], grid.clone(), 1.0, 1.0, 1.0);
        assert!((nonlocal_eval(&one, 0.0, &[0.0], &w).unwrap()[0] - 1.0).abs() < 1e-3);
        let zero = NonlocalField::new(g, |_, _| vec![0.0], grid.clone(), 1.0, 1.0, 0.0);
        assert_eq!(nonlocal_eval(&zero, 0.0, &[0.5], &w).unwrap(), vec![0.5]);
        let w0 = GridFunction::zeros(grid);
        assert_eq!(nonlocal_eval(&one, 0.0, &[0.5], &w0).unwrap(), vec![0.5]);
        let other = GridFunction::zeros(Grid::line(0.0, 1.0, 4).unwrap());
        assert!(matches!(
            nonlocal_eval(&one, 0.0, &[0.5], &other),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn process_constants_follow_the_certificates() {
        let f = scalar(|_, _, w| w, 1.0, 2.0, 4.0);
        let p = OdeProcess::new(f, 0.0, 5.0, 4).unwrap();
        assert_eq!(p.horizon(), 1.0);
        let c = p.constants();
        assert_eq!((c.c_u, c.c_t), (1.0, 2.0));
        assert!((c.c_w - 1f64.exp()).abs() < 1e-15);
        assert!(p.in_domain(0.0, &vec![2.0]));
        assert!(!p.in_domain(0.0, &vec![2.1]));
    }
}
