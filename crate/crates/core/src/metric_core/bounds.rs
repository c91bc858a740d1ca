use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::flow::ProcessConstants;

/// Stability and tangency constants of the coupled local flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingBounds {
    /// Component-wise maximum of the two processes' constants.
    pub merged: ProcessConstants,
    /// `L = exp((C_u + C_w) T)`.
    pub stability: f64,
    /// `omega(tau) = omega_coefficient * tau`, with coefficient `C_t C_u`.
    pub omega_coefficient: f64,
    /// `Lip(F) = exp(C_u delta) + C_w delta + 2 C_t`, with `delta = T`.
    pub flow_lipschitz: f64,
}

/// Merges the two constant sets and evaluates `L`, `omega` and `Lip(F)`.
pub fn coupling_bounds(first: &ProcessConstants, second: &ProcessConstants) -> CouplingBounds {
    let merged = first.merge(second);
    let ProcessConstants {
        c_u,
        c_t,
        c_w,
        horizon,
    } = merged;
    CouplingBounds {
        merged,
        stability: ((c_u + c_w) * horizon).exp(),
        omega_coefficient: c_t * c_u,
        flow_lipschitz: (c_u * horizon).exp() + c_w * horizon + 2.0 * c_t,
    }
}

impl CouplingBounds {
    pub fn omega(&self, tau: f64) -> f64 {
        self.omega_coefficient * tau
    }

    /// `(2 L / ln 2) * int_0^tau omega(xi) / xi dxi`; the integral is
    /// `C_t C_u tau` in closed form.
    pub fn tangency_rhs(&self, tau: f64) -> f64 {
        2.0 * self.stability / LN_2 * self.omega_coefficient * tau
    }

    /// `tau * tangency_rhs(tau)`: the bound on `d(P(t0 + tau, t0) x, F(tau, t0) x)`
    /// itself rather than on the distance divided by `tau`.
    pub fn tangency_distance_bound(&self, tau: f64) -> f64 {
        tau * self.tangency_rhs(tau)
    }

    /// Bound on `d(F^eps(tau) x1, F^eps(tau) x2) / d(x1, x2)` for a polygonal
    /// of length `tau`.
    pub fn stability_factor(&self, tau: f64) -> f64 {
        ((self.merged.c_u + self.merged.c_w) * tau).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(c_u: f64, c_t: f64, c_w: f64, t: f64) -> ProcessConstants {
        ProcessConstants::new(c_u, c_t, c_w, t).unwrap()
    }

    #[test]
    fn zero_constants_give_trivial_bounds() {
        let b = coupling_bounds(&c(0.0, 0.0, 0.0, 1.0), &c(0.0, 0.0, 0.0, 2.0));
        assert_eq!(b.stability, 1.0);
        assert_eq!(b.omega(0.3), 0.0);
        assert_eq!(b.tangency_rhs(0.3), 0.0);
        assert_eq!(b.merged.horizon, 1.0);
    }

    #[test]
    fn stability_constant_doubles_at_half_log_two() {
        let t = LN_2 / 2.0;
        let b = coupling_bounds(&c(1.0, 0.0, 1.0, t), &c(0.5, 0.0, 0.2, t));
        assert!((b.stability - 2.0).abs() < 1e-15);
    }

    #[test]
    fn tangency_rhs_matches_the_closed_form_integral() {
        // Stability constant pinned to one to isolate the integral.
        let mut b = coupling_bounds(&c(2.0, 3.0, 0.0, 1.0), &c(0.0, 0.0, 0.0, 1.0));
        b.stability = 1.0;
        // C_t C_u tau = 0.6 at tau = 0.1.
        let expected = 2.0 / LN_2 * 0.6;
        assert!((b.tangency_rhs(0.1) - expected).abs() < 1e-14);
        assert!((b.tangency_distance_bound(0.1) - expected * 0.1).abs() < 1e-15);
        // Midpoint quadrature of omega(xi)/xi on (0, tau] as an independent check.
        let n = 1000;
        let tau = 0.1;
        let integral: f64 = (0..n)
            .map(|i| {
                let xi = (i as f64 + 0.5) * tau / n as f64;
                b.omega(xi) / xi * tau / n as f64
            })
            .sum();
        assert!((2.0 / LN_2 * integral - expected).abs() < 1e-12);
    }

    #[test]
    fn merge_takes_componentwise_maxima() {
        let b = coupling_bounds(&c(1.0, 0.5, 3.0, 2.0), &c(2.0, 4.0, 0.1, 1.5));
        assert_eq!(b.merged, c(2.0, 4.0, 3.0, 1.5));
        let expected_lip = (2.0f64 * 1.5).exp() + 3.0 * 1.5 + 8.0;
        assert!((b.flow_lipschitz - expected_lip).abs() < 1e-12);
    }
}
