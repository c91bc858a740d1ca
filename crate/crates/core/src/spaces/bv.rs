use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use crate::error::{Error, Result};

/// Left-continuous step function of time: `v_0` at `t_0`, and `v_i` on
/// `(t_i, t_{i+1}]`, with the last value held forever.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvTimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl BvTimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} sample times for {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(
                "sample times must increase strictly".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "sample values must be finite".into(),
            ));
        }
        Ok(Self { times, values })
    }

    /// Defined for every time.
    pub fn constant(value: f64) -> Self {
        Self {
            times: vec![f64::NEG_INFINITY],
            values: vec![value],
        }
    }

    /// Samples `f` at the given times.
    pub fn sample(times: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = times.iter().map(|&t| f(t)).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    /// Left-continuous evaluation; undefined before the first sample.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < self.times[0] || t.is_nan() {
            return Err(Error::UndefinedBoundaryDatum(t));
        }
        // First index with times[i] >= t; the value there is v_{i-1}.
        let i = self.times.partition_point(|&s| s < t);
        Ok(self.values[i.saturating_sub(1)])
    }

    /// Variation over `[a, b]`: jumps happen right after a sample time, so
    /// those at sample times in `[a, b)` count.
    pub fn total_variation(&self, a: f64, b: f64) -> f64 {
        (1..self.times.len())
            .filter(|&i| self.times[i] >= a && self.times[i] < b)
            .map(|i| (self.values[i] - self.values[i - 1]).abs())
            .sum()
    }

    /// `sup |b|` over `[a, b]`.
    pub fn sup_norm(&self, a: f64, b: f64) -> Result<f64> {
        let mut m = self.eval(a)?.abs();
        for i in 0..self.times.len() {
            if self.times[i] >= a && self.times[i] < b {
                m = m.max(self.values[i].abs());
            }
        }
        Ok(m)
    }

    /// Exact `int_a^b |b(s)| ds`.
    pub fn l1_norm(&self, a: f64, b: f64) -> Result<f64> {
        self.integrate(a, b, f64::abs)
    }

    /// Exact `int_a^b b(s) ds`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        self.integrate(a, b, |v| v)
    }

    fn integrate(&self, a: f64, b: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        self.eval(a)?;
        let mut cuts = vec![a];
        cuts.extend(self.times.iter().copied().filter(|&s| s > a && s < b));
        cuts.push(b);
        let mut sum = 0.0;
        for w in cuts.windows(2) {
            sum += g(self.eval(w[1])?) * (w[1] - w[0]);
        }
        Ok(sum)
    }
}

/// One inequality evaluated on discrete data: `margin = rhs - lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BvCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

impl BvCheck {
    fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            margin: rhs - lhs,
        }
    }
}

/// Number of midpoint samples used for the time-integral inequality.
const TIME_SAMPLES: usize = 16;

/// Evaluates the elementary BV inequalities on 1D piecewise-constant data,
/// using the variation of the zero extension throughout:
///
/// * `product`: `TV(uw) <= TV(u) |w|_inf + |u|_inf TV(w)`
/// * `composition_abs`, `composition_sin`: `TV(phi(u)) <= Lip(phi) TV(u)`
/// * `time_integral`: `TV(int_0^1 u(s) ds) <= int_0^1 TV(u(s)) ds` along
///   `u(s) = (1 - s) u + s w`, midpoint rule in `s`
/// * `shift`: `int |u(x + delta(x)) - u(x)| dx <= TV(u) |delta|_inf`, with the
///   left side integrated exactly
pub fn bv_estimate_checks(
    u: &GridFunction,
    w: &GridFunction,
    delta: &GridFunction,
) -> Result<Vec<BvCheck>> {
    u.same_grid(w)?;
    u.same_grid(delta)?;
    if u.grid().dim() != 1 {
        return Err(Error::InvalidArgument(
            "BV checks are one-dimensional".into(),
        ));
    }
    if delta.values().iter().any(|&d| d < 0.0) {
        return Err(Error::InvalidArgument(
            "shift field must be nonnegative".into(),
        ));
    }
    let tv = GridFunction::total_variation_extended;
    let mut out = Vec::with_capacity(5);

    let uw = u.zip_with(w, |a, b| a * b)?;
    out.push(BvCheck::new(
        "product",
        tv(&uw),
        tv(u) * w.linf_norm() + u.linf_norm() * tv(w),
    ));
    out.push(BvCheck::new("composition_abs", tv(&u.map(f64::abs)), tv(u)));
    out.push(BvCheck::new("composition_sin", tv(&u.map(f64::sin)), tv(u)));

    let mut mean = GridFunction::zeros(u.grid().clone());
    let mut tv_mean = 0.0;
    for k in 0..TIME_SAMPLES {
        let s = (k as f64 + 0.5) / TIME_SAMPLES as f64;
        let us = u.lin_comb(1.0 - s, w, s)?;
        tv_mean += tv(&us) / TIME_SAMPLES as f64;
        mean = mean.lin_comb(1.0, &us, 1.0 / TIME_SAMPLES as f64)?;
    }
    out.push(BvCheck::new("time_integral", tv(&mean), tv_mean));

    let ax = *u.grid().axis(0);
    let mut shift = 0.0;
    for i in 0..ax.n {
        let d = delta.values()[i];
        let ui = u.values()[i];
        // int over the cell of |u(x + d) - u_i| = int over the shifted cell.
        shift += abs_deviation(u, ax.edge(i) + d, ax.edge(i + 1) + d, ui);
    }
    out.push(BvCheck::new("shift", shift, tv(u) * delta.linf_norm()));
    Ok(out)
}

/// Exact `int_a^b |u(y) - c| dy` for a 1D piecewise-constant `u` extended by
/// zero.
fn abs_deviation(u: &GridFunction, a: f64, b: f64, c: f64) -> f64 {
    let ax = *u.grid().axis(0);
    let mut sum = 0.0;
    let mut x = a;
    while x < b {
        let (value, next) = match ax.cell_of(x) {
            Some(i) => (u.values()[i], ax.edge(i + 1)),
            None if x < ax.origin => (0.0, ax.origin),
            None => (0.0, f64::INFINITY),
        };
        let hi = next.min(b);
        // Guard against an edge that rounds onto x.
        let hi = if hi <= x { b.min(x + ax.dx) } else { hi };
        sum += (value - c).abs() * (hi - x);
        x = hi;
    }
    sum
}
