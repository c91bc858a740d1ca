//! Characteristics of `x' = v(t, x, w)` and the pieces of the explicit
//! solution formula shared by the renewal and boundary-value solvers.

use serde::{Deserialize, Serialize};

/// Velocity field; in 1D only the first components of the point and of the
/// result are used.
pub type Velocity<'a, W> = dyn Fn(f64, &[f64; 2], &W) -> [f64; 2] + Send + Sync + 'a;

/// How the initial datum is evaluated at the foot of a characteristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Projection {
    /// Cell lookup of the datum at the foot of the characteristic through
    /// the cell center.
    #[default]
    PointSample,
    /// Exact integral of the datum over the preimage of the cell (an
    /// interval in 1D, the quadrilateral spanned by the corner
    /// characteristics in 2D). Conservative, and keeps small displacements
    /// that point sampling would round away.
    CellAverage,
}

fn rk4<W>(v: &Velocity<W>, dim: usize, t: f64, x: [f64; 2], h: f64, w: &W) -> [f64; 2] {
    let add = |x: [f64; 2], a: f64, k: [f64; 2]| {
        if dim == 1 {
            [x[0] + a * k[0], x[1]]
        } else {
            [x[0] + a * k[0], x[1] + a * k[1]]
        }
    };
    let k1 = v(t, &x, w);
    let k2 = v(t + 0.5 * h, &add(x, 0.5 * h, k1), w);
    let k3 = v(t + 0.5 * h, &add(x, 0.5 * h, k2), w);
    let k4 = v(t + h, &add(x, h, k3), w);
    let mut out = x;
    for c in 0..dim {
        out[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    }
    out
}

/// Position at time `t` of the characteristic through `(t_bar, x_bar)`, by
/// RK4 with `n_sub` substeps. Backward integration (`t < t_bar`) is allowed.
pub fn characteristic<W>(
    v: &Velocity<W>,
    dim: usize,
    t_bar: f64,
    x_bar: [f64; 2],
    t: f64,
    w: &W,
    n_sub: usize,
) -> [f64; 2] {
    if t == t_bar {
        return x_bar;
    }
    let n = n_sub.max(1);
    let h = (t - t_bar) / n as f64;
    let mut x = x_bar;
    for k in 0..n {
        x = rk4(v, dim, t_bar + k as f64 * h, x, h, w);
    }
    x
}

/// Central-difference divergence with step `h` per axis.
pub fn divergence<W>(v: &Velocity<W>, dim: usize, t: f64, x: &[f64; 2], w: &W, h: [f64; 2]) -> f64 {
    let mut div = 0.0;
    for c in 0..dim {
        let mut xp = *x;
        let mut xm = *x;
        xp[c] += h[c];
        xm[c] -= h[c];
        div += (v(t, &xp, w)[c] - v(t, &xm, w)[c]) / (2.0 * h[c]);
    }
    div
}

/// Result of integrating backward along one characteristic from `(t, x)`
/// down to `t_foot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackwardTrace {
    pub foot: [f64; 2],
    /// `int (m - div v) ds` over the whole path.
    pub log_e: f64,
    /// `int m ds` over the whole path.
    pub log_m: f64,
    /// `int q(s, X(s)) E(s, t, x) ds`.
    pub source: f64,
}

/// Coefficient callbacks seen along a characteristic.
pub struct Along<'a, W> {
    pub v: &'a Velocity<'a, W>,
    pub m: &'a (dyn Fn(f64, &[f64; 2], &W) -> f64 + Send + Sync + 'a),
    pub q: &'a (dyn Fn(f64, &[f64; 2], &W) -> f64 + Send + Sync + 'a),
    pub dim: usize,
    /// Finite-difference steps for the divergence.
    pub fd: [f64; 2],
}

/// Integrates from `(t, x)` back to `t_foot` with `n_sub` substeps. Each
/// substep is split in two RK4 half steps so that the midpoint rule for the
/// exponent and the source uses positions on the characteristic.
pub fn trace_back<W>(
    c: &Along<W>,
    t: f64,
    x: [f64; 2],
    t_foot: f64,
    w: &W,
    n_sub: usize,
) -> BackwardTrace {
    let mut out = BackwardTrace {
        foot: x,
        log_e: 0.0,
        log_m: 0.0,
        source: 0.0,
    };
    if t_foot == t {
        return out;
    }
    let n = n_sub.max(1);
    let h = (t_foot - t) / n as f64;
    let len = h.abs();
    let mut pos = x;
    for k in 0..n {
        let s = t + k as f64 * h;
        let mid = rk4(c.v, c.dim, s, pos, 0.5 * h, w);
        let sm = s + 0.5 * h;
        let m = (c.m)(sm, &mid, w);
        let g = m - divergence(c.v, c.dim, sm, &mid, w, c.fd);
        let q = (c.q)(sm, &mid, w);
        if q != 0.0 {
            out.source += q * (out.log_e + 0.5 * g * len).exp() * len;
        }
        out.log_e += g * len;
        out.log_m += m * len;
        pos = rk4(c.v, c.dim, sm, mid, 0.5 * h, w);
    }
    out.foot = pos;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn characteristic_examples() {
        let zero = |_: f64, _: &[f64; 2], _: &()| [0.0, 0.0];
        assert_eq!(
            characteristic(&zero, 1, 0.0, [0.3, 0.0], 1.0, &(), 4),
            [0.3, 0.0]
        );
        let c = |_: f64, _: &[f64; 2], _: &()| [2.0, -1.0];
        let x = characteristic(&c, 2, 1.0, [0.5, 0.5], 0.0, &(), 3);
        assert!((x[0] + 1.5).abs() < 1e-15 && (x[1] - 1.5).abs() < 1e-15);
        let lin = |_: f64, x: &[f64; 2], _: &()| [x[0], 0.0];
        let x = characteristic(&lin, 1, 0.0, [1.0, 0.0], 1.0, &(), 100);
        assert!((x[0] - 1f64.exp()).abs() < 1e-8);
        let back = characteristic(&lin, 1, 1.0, x, 0.0, &(), 100);
        assert!((back[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn divergence_of_a_linear_field() {
        let v = |_: f64, x: &[f64; 2], _: &()| [2.0 * x[0], -0.5 * x[1]];
        let d = divergence(&v, 2, 0.0, &[0.3, 0.7], &(), [0.01, 0.01]);
        assert!((d - 1.5).abs() < 1e-12);
    }

    #[test]
    fn exponent_and_source_for_constant_coefficients() {
        let v = |_: f64, _: &[f64; 2], _: &()| [0.0, 0.0];
        let m = |_: f64, _: &[f64; 2], _: &()| -1.0;
        let q = |_: f64, _: &[f64; 2], _: &()| 1.0;
        let c = Along {
            v: &v,
            m: &m,
            q: &q,
            dim: 1,
            fd: [0.01, 0.0],
        };
        let tr = trace_back(&c, 1.0, [0.0, 0.0], 0.0, &(), 200);
        assert!((tr.log_e + 1.0).abs() < 1e-14);
        // int_0^1 e^{-(1-s)} ds = 1 - 1/e.
        assert!((tr.source - (1.0 - (-1f64).exp())).abs() < 1e-5);
    }
}
