use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A local flow `F(tau, t0) x`, defined for step lengths `tau` in `[0, delta]`.
///
/// Implementations must return `x` unchanged for `tau == 0`.
pub trait LocalFlow {
    type State: Clone;

    /// Maximal step length.
    fn delta(&self) -> f64;

    fn evaluate(&self, tau: f64, t0: f64, x: &Self::State) -> Result<Self::State>;

    /// Pointwise domain predicate at time `t`.
    fn in_domain(&self, _t: f64, _x: &Self::State) -> bool {
        true
    }
}

/// A two-time solution operator `P(t, t0)` depending on a parameter taken
/// from another space.
pub trait Process {
    type State: Clone;
    type Param;

    fn solve(&self, t: f64, t0: f64, x: &Self::State, param: &Self::Param) -> Result<Self::State>;

    /// Lipschitz constants in data, time and parameter, plus the horizon on
    /// which they hold.
    fn constants(&self) -> ProcessConstants;

    fn in_domain(&self, _t: f64, _x: &Self::State) -> bool {
        true
    }
}

/// `(C_u, C_t, C_w)` and the horizon `T`:
///
/// * `d(P(t,t0) u1, P(t,t0) u2) <= exp(C_u (t - t0)) d(u1, u2)`
/// * `d(P(t1,t0) u, P(t2,t0) u) <= C_t |t2 - t1|`
/// * `d(P^{w1}(t,t0) u, P^{w2}(t,t0) u) <= C_w (t - t0) d(w1, w2)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessConstants {
    pub c_u: f64,
    pub c_t: f64,
    pub c_w: f64,
    pub horizon: f64,
}

impl ProcessConstants {
    pub fn new(c_u: f64, c_t: f64, c_w: f64, horizon: f64) -> Result<Self> {
        let c = Self {
            c_u,
            c_t,
            c_w,
            horizon,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c_u", self.c_u), ("c_t", self.c_t), ("c_w", self.c_w)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "process constant {name} = {v} must be finite and nonnegative"
                )));
            }
        }
        if !(self.horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "process horizon {} must be positive",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Component-wise maximum. The horizon is the shorter of the two, since
    /// the merged constants only hold where both processes are defined.
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            c_u: self.c_u.max(other.c_u),
            c_t: self.c_t.max(other.c_t),
            c_w: self.c_w.max(other.c_w),
            horizon: self.horizon.min(other.horizon),
        }
    }
}

/// Local flow backed by a closure. Mostly useful for tests and toy problems.
pub struct FnFlow<S, F> {
    delta: f64,
    step: F,
    _state: std::marker::PhantomData<fn() -> S>,
}

impl<S, F> FnFlow<S, F>
where
    S: Clone,
    F: Fn(f64, f64, &S) -> S,
{
    pub fn new(delta: f64, step: F) -> Self {
        Self {
            delta,
            step,
            _state: std::marker::PhantomData,
        }
    }
}

impl<S, F> LocalFlow for FnFlow<S, F>
where
    S: Clone,
    F: Fn(f64, f64, &S) -> S,
{
    type State = S;

    fn delta(&self) -> f64 {
        self.delta
    }

    fn evaluate(&self, tau: f64, t0: f64, x: &S) -> Result<S> {
        if tau == 0.0 {
            return Ok(x.clone());
        }
        Ok((self.step)(tau, t0, x))
    }
}
