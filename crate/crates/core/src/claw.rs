//! Scalar conservation law `u_t + f(u, w)_x = 0` on the line, solved by the
//! Godunov scheme with the exact Riemann flux. Data live on a box and are
//! extended by zero.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric_core::{Process, ProcessConstants};
use crate::spaces::GridFunction;

type FluxFn<W> = dyn Fn(f64, &W) -> f64 + Send + Sync;

/// Flux `f(u, w)` with its Lipschitz certificate and the critical points of
/// `f(., w)`. When the list is not known to be complete, interval extrema
/// are also searched numerically.
pub struct ParamFlux<W> {
    f: Arc<FluxFn<W>>,
    pub f_lip: f64,
    pub critical: Vec<f64>,
    pub complete: bool,
}

impl<W> Clone for ParamFlux<W> {
    fn clone(&self) -> Self {
        Self {
            f: Arc::clone(&self.f),
            f_lip: self.f_lip,
            critical: self.critical.clone(),
            complete: self.complete,
        }
    }
}

impl<W> ParamFlux<W> {
    pub fn new(
        f: impl Fn(f64, &W) -> f64 + Send + Sync + 'static,
        f_lip: f64,
        critical: Vec<f64>,
    ) -> Result<Self> {
        if !(f_lip >= 0.0) || !f_lip.is_finite() {
            return Err(Error::config("f_lip", "must be finite and nonnegative"));
        }
        Ok(Self {
            f: Arc::new(f),
            f_lip,
            critical,
            complete: true,
        })
    }

    /// Marks the critical-point list as possibly incomplete.
    pub fn incomplete(mut self) -> Self {
        self.complete = false;
        self
    }

    pub fn eval(&self, u: f64, w: &W) -> f64 {
        (self.f)(u, w)
    }

    /// Largest `|f(a) - f(b)| / |a - b|` over consecutive points of `samples`.
    pub fn audit(&self, samples: &[f64], w: &W) -> f64 {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        s.dedup();
        s.windows(2)
            .map(|p| (self.eval(p[1], w) - self.eval(p[0], w)).abs() / (p[1] - p[0]))
            .fold(0.0, f64::max)
    }
}

const GOLDEN_BRACKETS: usize = 16;
const GOLDEN_ITERS: usize = 60;

/// Minimum of `g` on `[a, b]` over the endpoints, the critical points inside
/// and, if requested, a golden-section refinement of the best bracket.
fn interval_min(g: &dyn Fn(f64) -> f64, a: f64, b: f64, critical: &[f64], search: bool) -> f64 {
    let mut best = g(a).min(g(b));
    for &c in critical {
        if c > a && c < b {
            best = best.min(g(c));
        }
    }
    if search && b > a {
        let h = (b - a) / GOLDEN_BRACKETS as f64;
        let k = (0..GOLDEN_BRACKETS)
            .min_by(|&i, &j| g(a + (i as f64 + 0.5) * h).total_cmp(&g(a + (j as f64 + 0.5) * h)))
            .unwrap_or(0);
        let (mut lo, mut hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - r * (hi - lo);
        let mut x2 = lo + r * (hi - lo);
        let (mut f1, mut f2) = (g(x1), g(x2));
        for _ in 0..GOLDEN_ITERS {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - r * (hi - lo);
                f1 = g(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + r * (hi - lo);
                f2 = g(x2);
            }
        }
        best = best.min(f1).min(f2);
    }
    best
}

/// Exact Godunov flux: `min f` over `[uL, uR]` if `uL <= uR`, otherwise
/// `max f` over `[uR, uL]`.
pub fn godunov_flux<W>(flux: &ParamFlux<W>, ul: f64, ur: f64, w: &W) -> f64 {
    if ul == ur {
        return flux.eval(ul, w);
    }
    let search = !flux.complete;
    if ul < ur {
        interval_min(&|u| flux.eval(u, w), ul, ur, &flux.critical, search)
    } else {
        -interval_min(&|u| -flux.eval(u, w), ur, ul, &flux.critical, search)
    }
}

/// Godunov numerical entropy flux for `|u - k|`:
/// `F(max(uL, k), max(uR, k)) - F(min(uL, k), min(uR, k))`.
pub fn entropy_flux<W>(flux: &ParamFlux<W>, ul: f64, ur: f64, k: f64, w: &W) -> f64 {
    godunov_flux(flux, ul.max(k), ur.max(k), w) - godunov_flux(flux, ul.min(k), ur.min(k), w)
}

/// Time steps of length `cfl dx / F_L` covering `[t0, t]`, the last one
/// shortened to land on `t`.
pub fn claw_time_steps(f_lip: f64, dx: f64, cfl: f64, t0: f64, t: f64) -> Vec<f64> {
    if t <= t0 || f_lip == 0.0 {
        return Vec::new();
    }
    let dt = cfl * dx / f_lip;
    let span = t - t0;
    let n = ((span / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut out = vec![dt; n];
    out[n - 1] = span - dt * (n - 1) as f64;
    out
}

fn check(flux_lip: f64, u0: &GridFunction, t0: f64, t: f64, cfl: f64) -> Result<()> {
    if u0.grid().dim() != 1 {
        return Err(Error::GridMismatch(
            "conservation laws are one-dimensional".into(),
        ));
    }
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "CFL number {cfl} outside (0, 1]"
        )));
    }
    if !(t >= t0) {
        return Err(Error::InvalidArgument(format!(
            "final time {t} precedes {t0}"
        )));
    }
    u0.check_clearance(flux_lip * (t - t0), "conservation law")
}

/// One Godunov step with zero ghost cells.
pub fn godunov_step<W: Sync>(flux: &ParamFlux<W>, u: &[f64], w: &W, lambda: f64) -> Vec<f64> {
    let n = u.len();
    let at = |i: isize| {
        if i < 0 || i >= n as isize {
            0.0
        } else {
            u[i as usize]
        }
    };
    let fluxes: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|j| godunov_flux(flux, at(j as isize - 1), at(j as isize), w))
        .collect();
    (0..n)
        .map(|i| u[i] - lambda * (fluxes[i + 1] - fluxes[i]))
        .collect()
}

/// Solution at time `t`, with CFL number `cfl` in `(0, 1]`.
pub fn claw_solve<W: Sync>(
    flux: &ParamFlux<W>,
    u0: &GridFunction,
    w: &W,
    t0: f64,
    t: f64,
    cfl: f64,
) -> Result<GridFunction> {
    Ok(claw_trace(flux, u0, w, t0, t, cfl)?
        .pop()
        .map(|(_, u)| u)
        .unwrap_or_else(|| u0.clone()))
}

/// Every time level of the scheme, starting with `(t0, u0)`.
pub fn claw_trace<W: Sync>(
    flux: &ParamFlux<W>,
    u0: &GridFunction,
    w: &W,
    t0: f64,
    t: f64,
    cfl: f64,
) -> Result<Vec<(f64, GridFunction)>> {
    check(flux.f_lip, u0, t0, t, cfl)?;
    let dx = u0.grid().axis(0).dx;
    let mut out = vec![(t0, u0.clone())];
    let mut now = t0;
    let mut u = u0.values().to_vec();
    let steps = claw_time_steps(flux.f_lip, dx, cfl, t0, t);
    let last = steps.len();
    for (k, dt) in steps.into_iter().enumerate() {
        u = godunov_step(flux, &u, w, dt / dx);
        now = if k + 1 == last { t } else { now + dt };
        out.push((
            now,
            GridFunction::from_values(u0.grid().clone(), u.clone())?,
        ));
    }
    Ok(out)
}

/// `C_u = 0`, `C_t = C_w = F_L R`.
pub fn claw_constants(f_lip: f64, radius: f64) -> Result<ProcessConstants> {
    ProcessConstants::new(0.0, f_lip * radius, f_lip * radius, f64::INFINITY)
}

/// Per-cell entropy production of one step for the entropy `|u - k|`:
/// `-(|u^{n+1} - k| - |u^n - k| + lambda (G_{i+1/2} - G_{i-1/2}))`. It is
/// nonnegative for an entropy solution.
pub fn kruzkov_cell_residuals<W: Sync>(
    flux: &ParamFlux<W>,
    before: &[f64],
    after: &[f64],
    w: &W,
    lambda: f64,
    k: f64,
) -> Vec<f64> {
    let n = before.len();
    let at = |i: isize| {
        if i < 0 || i >= n as isize {
            0.0
        } else {
            before[i as usize]
        }
    };
    let g: Vec<f64> = (0..=n)
        .into_par_iter()
        .map(|j| entropy_flux(flux, at(j as isize - 1), at(j as isize), k, w))
        .collect();
    (0..n)
        .map(|i| -((after[i] - k).abs() - (before[i] - k).abs() + lambda * (g[i + 1] - g[i])))
        .collect()
}

/// Smallest per-cell residual over a trace, optionally weighted by a
/// nonnegative test function `phi(t, x)`; returns `(min cell residual,
/// weighted sum times dx)`.
pub fn kruzkov_residual<W: Sync>(
    flux: &ParamFlux<W>,
    trace: &[(f64, GridFunction)],
    w: &W,
    k: f64,
    phi: impl Fn(f64, f64) -> f64,
) -> (f64, f64) {
    let mut worst = f64::INFINITY;
    let mut weighted = 0.0;
    for pair in trace.windows(2) {
        let ((t_a, a), (t_b, b)) = (&pair[0], &pair[1]);
        let ax = *a.grid().axis(0);
        let r = kruzkov_cell_residuals(flux, a.values(), b.values(), w, (t_b - t_a) / ax.dx, k);
        for (i, ri) in r.iter().enumerate() {
            worst = worst.min(*ri);
            weighted += phi(*t_a, ax.center(i)) * ri * ax.dx;
        }
    }
    (worst, weighted)
}

/// The Godunov solver as a process on the TV ball of radius `R`.
pub struct ClawProcess<W> {
    pub flux: ParamFlux<W>,
    pub cfl: f64,
    pub radius: f64,
    pub horizon: f64,
}

impl<W: Sync> Process for ClawProcess<W> {
    type State = GridFunction;
    type Param = W;

    fn solve(&self, t: f64, t0: f64, x: &GridFunction, w: &W) -> Result<GridFunction> {
        claw_solve(&self.flux, x, w, t0, t, self.cfl)
    }

    fn constants(&self) -> ProcessConstants {
        let mut c = claw_constants(self.flux.f_lip, self.radius).expect("finite certificates");
        c.horizon = self.horizon;
        c
    }

    fn in_domain(&self, _t: f64, x: &GridFunction) -> bool {
        x.total_variation_extended() <= self.radius * (1.0 + 1e-12)
    }
}
