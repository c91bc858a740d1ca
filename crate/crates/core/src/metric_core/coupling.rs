use super::flow::{LocalFlow, Process};
use super::metric::CoupledState;
use crate::error::Result;

/// Local flow on `U x W` obtained by pairing a process on `U` parametrized
/// by `W` with a process on `W` parametrized by `U`:
///
/// `F(tau, t0)(u, w) = (P^w(t0 + tau, t0) u, P^u(t0 + tau, t0) w)`.
///
/// Each component sees the other one frozen at `t0`. The parametrized maps
/// may themselves be one-step local flows, which gives the flow-level
/// coupling used as a tangency cross-check.
pub struct Coupled<Pw, Pu> {
    pub on_u: Pw,
    pub on_w: Pu,
    delta: f64,
    names: (String, String),
}

impl<U, W, Pw, Pu> Coupled<Pw, Pu>
where
    U: Clone,
    W: Clone,
    Pw: Process<State = U, Param = W>,
    Pu: Process<State = W, Param = U>,
{
    /// The maximal step is the shorter of the two horizons.
    pub fn new(on_u: Pw, on_w: Pu) -> Self {
        let delta = on_u.constants().horizon.min(on_w.constants().horizon);
        Self {
            on_u,
            on_w,
            delta,
            names: ("u".into(), "w".into()),
        }
    }

    /// Component tags used in domain-exit errors.
    pub fn with_names(mut self, u: &str, w: &str) -> Self {
        self.names = (u.to_string(), w.to_string());
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}

impl<U, W, Pw, Pu> LocalFlow for Coupled<Pw, Pu>
where
    U: Clone,
    W: Clone,
    Pw: Process<State = U, Param = W>,
    Pu: Process<State = W, Param = U>,
{
    type State = CoupledState<U, W>;

    fn delta(&self) -> f64 {
        self.delta
    }

    fn evaluate(&self, tau: f64, t0: f64, x: &Self::State) -> Result<Self::State> {
        if tau == 0.0 {
            return Ok(x.clone());
        }
        let t = t0 + tau;
        let u = self
            .on_u
            .solve(t, t0, &x.u, &x.w)
            .map_err(|e| e.tagged(&self.names.0))?;
        let w = self
            .on_w
            .solve(t, t0, &x.w, &x.u)
            .map_err(|e| e.tagged(&self.names.1))?;
        Ok(CoupledState { u, w })
    }

    fn in_domain(&self, t: f64, x: &Self::State) -> bool {
        self.on_u.in_domain(t, &x.u) && self.on_w.in_domain(t, &x.w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::metric_core::ProcessConstants;

    /// Closed-form process of u' = a w + b u with the parameter frozen.
    struct Linear {
        a: f64,
        b: f64,
        horizon: f64,
        bound: f64,
    }

    impl Process for Linear {
        type State = f64;
        type Param = f64;

        fn solve(&self, t: f64, t0: f64, x: &f64, w: &f64) -> Result<f64> {
            let s = t - t0;
            let out = if self.b == 0.0 {
                x + self.a * w * s
            } else {
                let e = (self.b * s).exp();
                x * e + self.a * w * (e - 1.0) / self.b
            };
            if out.abs() > self.bound {
                return Err(Error::DomainExit {
                    component: None,
                    step: None,
                    time: t,
                });
            }
            Ok(out)
        }

        fn constants(&self) -> ProcessConstants {
            ProcessConstants::new(self.b.abs(), 1.0, self.a.abs(), self.horizon).unwrap()
        }

        fn in_domain(&self, _t: f64, x: &f64) -> bool {
            x.abs() <= self.bound
        }
    }

    fn lin(a: f64, b: f64) -> Linear {
        Linear {
            a,
            b,
            horizon: 1.0,
            bound: 10.0,
        }
    }

    #[test]
    fn constant_processes_couple_to_the_identity() {
        let f = Coupled::new(lin(0.0, 0.0), lin(0.0, 0.0));
        let x = CoupledState::new(0.3, -1.2);
        assert_eq!(f.evaluate(0.5, 0.0, &x).unwrap(), x);
    }

    #[test]
    fn frozen_parameter_gives_closed_forms() {
        // u' = w, w' = 0 from (0, 1).
        let f = Coupled::new(lin(1.0, 0.0), lin(0.0, 0.0));
        let x = CoupledState::new(0.0, 1.0);
        for tau in [0.1, 0.5, 1.0] {
            assert_eq!(
                f.evaluate(tau, 0.0, &x).unwrap(),
                CoupledState::new(tau, 1.0)
            );
        }
        // u' = w, w' = -w: the u slot still uses w frozen at 1.
        let f = Coupled::new(lin(1.0, 0.0), lin(0.0, -1.0));
        for tau in [0.1f64, 0.5, 1.0] {
            let y = f.evaluate(tau, 0.0, &x).unwrap();
            assert!((y.u - tau).abs() < 1e-15);
            assert!((y.w - (-tau).exp()).abs() < 1e-15);
        }
    }

    #[test]
    fn delta_is_the_shorter_horizon() {
        let mut a = lin(1.0, 0.0);
        a.horizon = 0.25;
        let f = Coupled::new(a, lin(0.0, 0.0));
        assert_eq!(f.delta(), 0.25);
    }

    #[test]
    fn component_errors_are_tagged() {
        let mut a = lin(1.0, 0.0);
        a.bound = 0.5;
        let f = Coupled::new(a, lin(0.0, 0.0)).with_names("prey", "predator");
        let err = f
            .evaluate(1.0, 0.0, &CoupledState::new(0.0, 1.0))
            .unwrap_err();
        assert_eq!(
            err,
            Error::DomainExit {
                component: Some("prey".into()),
                step: None,
                time: 1.0
            }
        );
    }

    #[test]
    fn domain_nesting_holds_along_polygonals() {
        use crate::metric_core::euler_polygonal_trace;
        let f = Coupled::new(lin(1.0, 0.0), lin(-1.0, 0.0));
        let x = CoupledState::new(0.5, 0.5);
        assert!(f.in_domain(0.0, &x));
        let trace = euler_polygonal_trace(&f, 1.0, 0.0, &x, 1.0 / 64.0).unwrap();
        for (t, s) in &trace {
            assert!(f.in_domain(*t, s));
        }
    }
}
