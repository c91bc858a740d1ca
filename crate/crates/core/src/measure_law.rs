//! Particle scheme for the measure-valued balance law on the half line
//!
//! `mu_t + (b mu)_x + c mu = int eta(y) d mu(y)`,
//!
//! with atomic measures and forward Euler splitting.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::AtomicMeasure;

type PointFn<W> = dyn Fn(f64, &AtomicMeasure, &W, f64) -> f64 + Send + Sync;
type OffspringFn<W> = dyn Fn(f64, &AtomicMeasure, &W, f64) -> AtomicMeasure + Send + Sync;

/// Certificates `B`, `C`, `E` and the parameter-Lipschitz constant `L_hat`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasureBounds {
    pub b: f64,
    pub c: f64,
    pub e: f64,
    pub l_hat: f64,
}

impl MeasureBounds {
    pub fn total(&self) -> f64 {
        self.b + self.c + self.e
    }
}

/// Velocity `b(t, mu, w)(x)`, death rate `c(t, mu, w)(x)` and offspring
/// template `eta(t, mu, w)(y)`.
pub struct MeasureCoefficients<W> {
    b: Arc<PointFn<W>>,
    c: Arc<PointFn<W>>,
    eta: Arc<OffspringFn<W>>,
    pub bounds: MeasureBounds,
    /// Mass above which a step fails.
    pub mass_cap: f64,
    /// Atoms closer than `merge_rel` times the support diameter are merged.
    pub merge_rel: f64,
}

impl<W> Clone for MeasureCoefficients<W> {
    fn clone(&self) -> Self {
        Self {
            b: Arc::clone(&self.b),
            c: Arc::clone(&self.c),
            eta: Arc::clone(&self.eta),
            bounds: self.bounds,
            mass_cap: self.mass_cap,
            merge_rel: self.merge_rel,
        }
    }
}

impl<W> MeasureCoefficients<W> {
    pub fn new(
        b: impl Fn(f64, &AtomicMeasure, &W, f64) -> f64 + Send + Sync + 'static,
        c: impl Fn(f64, &AtomicMeasure, &W, f64) -> f64 + Send + Sync + 'static,
        eta: impl Fn(f64, &AtomicMeasure, &W, f64) -> AtomicMeasure + Send + Sync + 'static,
        bounds: MeasureBounds,
    ) -> Self {
        Self {
            b: Arc::new(b),
            c: Arc::new(c),
            eta: Arc::new(eta),
            bounds,
            mass_cap: f64::INFINITY,
            merge_rel: 1e-9,
        }
    }

    pub fn with_mass_cap(mut self, cap: f64) -> Self {
        self.mass_cap = cap;
        self
    }

    pub fn velocity(&self, t: f64, mu: &AtomicMeasure, w: &W, x: f64) -> f64 {
        (self.b)(t, mu, w, x)
    }

    pub fn death(&self, t: f64, mu: &AtomicMeasure, w: &W, x: f64) -> f64 {
        (self.c)(t, mu, w, x)
    }

    pub fn offspring(&self, t: f64, mu: &AtomicMeasure, w: &W, y: f64) -> AtomicMeasure {
        (self.eta)(t, mu, w, y)
    }

    /// Checks `|b| <= B`, `|c| <= C`, `mass(eta(y)) <= E` and `b(0) >= 0` at
    /// the given times and points for the measure `mu`.
    pub fn audit(&self, mu: &AtomicMeasure, w: &W, times: &[f64], xs: &[f64]) -> bool {
        let tol = 1e-12;
        times.iter().all(|&t| {
            self.velocity(t, mu, w, 0.0) >= 0.0
                && xs.iter().all(|&x| {
                    self.velocity(t, mu, w, x).abs() <= self.bounds.b + tol
                        && self.death(t, mu, w, x).abs() <= self.bounds.c + tol
                        && self.offspring(t, mu, w, x).mass() <= self.bounds.e + tol
                })
        })
    }
}

/// One splitting step of length `dt`: transport, decay, offspring, merge.
/// All coefficients are frozen at `(t, mu)`.
pub fn measure_step<W>(
    coef: &MeasureCoefficients<W>,
    mu: &AtomicMeasure,
    w: &W,
    t: f64,
    dt: f64,
) -> Result<AtomicMeasure> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step {dt} must be positive"
        )));
    }
    let mut atoms = Vec::with_capacity(mu.len());
    for &(x, m) in mu.atoms() {
        let y = (x + dt * coef.velocity(t, mu, w, x)).max(0.0);
        atoms.push((y, m * (-dt * coef.death(t, mu, w, x)).exp()));
    }
    for &(y, m) in mu.atoms() {
        for &(z, n) in coef.offspring(t, mu, w, y).atoms() {
            atoms.push((z, dt * m * n));
        }
    }
    let next = AtomicMeasure::new(atoms)?;
    let next = next.merge(coef.merge_rel * next.diameter());
    let mass = next.mass();
    if mass > coef.mass_cap {
        return Err(Error::MassBlowup {
            mass,
            bound: coef.mass_cap,
        });
    }
    Ok(next)
}

/// Steps of length at most `dt` from `t0` to `t`, the last one shortened;
/// returns every level including `(t0, mu0)`.
pub fn measure_trace<W>(
    coef: &MeasureCoefficients<W>,
    mu0: &AtomicMeasure,
    w: &W,
    t0: f64,
    t: f64,
    dt: f64,
) -> Result<Vec<(f64, AtomicMeasure)>> {
    if !(dt > 0.0) || !(t >= t0) {
        return Err(Error::InvalidArgument(format!(
            "bad stepping dt = {dt} on [{t0}, {t}]"
        )));
    }
    let n = (((t - t0) / dt) * (1.0 - 1e-12)).ceil() as usize;
    let mut out = vec![(t0, mu0.clone())];
    let mut now = t0;
    for k in 0..n {
        let next_t = if k + 1 == n {
            t
        } else {
            t0 + (k + 1) as f64 * dt
        };
        let next = measure_step(coef, &out[k].1, w, now, next_t - now)?;
        now = next_t;
        out.push((now, next));
    }
    Ok(out)
}

/// Mass bound of the invariant domain: `R e^{-3 (B + C + E)(T - t)}`.
pub fn measure_domain_bound(t: f64, horizon: f64, radius: f64, b: f64, c: f64, e: f64) -> f64 {
    radius * (-3.0 * (b + c + e) * (horizon - t)).exp()
}

/// The constants available in closed form: `C_u = 3 (B + C + E)` and
/// `C_t = (B + C + E) e^{2 (B + C + E) T} R`. The parameter constant depends
/// on a constant not given in closed form and is not provided.
pub fn measure_partial_constants(bounds: &MeasureBounds, horizon: f64, radius: f64) -> (f64, f64) {
    let s = bounds.total();
    (3.0 * s, s * (2.0 * s * horizon).exp() * radius)
}

/// Test function `phi(t, x)` with its partial derivatives.
pub struct TestFunction {
    pub phi: Box<dyn Fn(f64, f64) -> f64>,
    pub phi_t: Box<dyn Fn(f64, f64) -> f64>,
    pub phi_x: Box<dyn Fn(f64, f64) -> f64>,
}

impl TestFunction {
    /// `(1 + t)^l x^k e^{-x}`, bounded and Lipschitz on the half line.
    pub fn poly_cutoff(k: i32, l: i32) -> Self {
        let p = move |t: f64| (1.0 + t).powi(l);
        let dp = move |t: f64| {
            if l == 0 {
                0.0
            } else {
                l as f64 * (1.0 + t).powi(l - 1)
            }
        };
        let q = move |x: f64| x.powi(k) * (-x).exp();
        let dq = move |x: f64| {
            let lead = if k == 0 {
                0.0
            } else {
                k as f64 * x.powi(k - 1)
            };
            (lead - x.powi(k)) * (-x).exp()
        };
        Self {
            phi: Box::new(move |t, x| p(t) * q(x)),
            phi_t: Box::new(move |t, x| dp(t) * q(x)),
            phi_x: Box::new(move |t, x| p(t) * dq(x)),
        }
    }
}

/// Discrete residual of the weak formulation over a trace:
///
/// `int phi(T) d mu_T - int phi(t0) d mu_0 - sum_n dt_n int (phi_t + b phi_x - c phi
///  + int phi d eta(y)) d mu_n`.
pub fn weak_residual<W>(
    coef: &MeasureCoefficients<W>,
    trace: &[(f64, AtomicMeasure)],
    w: &W,
    test: &TestFunction,
) -> f64 {
    let (Some(first), Some(last)) = (trace.first(), trace.last()) else {
        return 0.0;
    };
    let mut lhs = 0.0;
    for pair in trace.windows(2) {
        let (t, mu) = (&pair[0].0, &pair[0].1);
        let dt = pair[1].0 - t;
        let mut integrand = 0.0;
        for &(x, m) in mu.atoms() {
            let local = (test.phi_t)(*t, x) + coef.velocity(*t, mu, w, x) * (test.phi_x)(*t, x)
                - coef.death(*t, mu, w, x) * (test.phi)(*t, x);
            let born = coef
                .offspring(*t, mu, w, x)
                .integrate(|z| (test.phi)(*t, z));
            integrand += m * (local + born);
        }
        lhs += dt * integrand;
    }
    let rhs =
        last.1.integrate(|x| (test.phi)(last.0, x)) - first.1.integrate(|x| (test.phi)(first.0, x));
    rhs - lhs
}
