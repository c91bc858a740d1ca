//! Small coupled systems with closed-form solutions, used by convergence
//! studies and the verification suite.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metric_core::{Coupled, Process, ProcessConstants};
use crate::ode::{OdeField, OdeProcess};

/// Certificates of the rotation system `u' = w`, `w' = -u`, each component
/// seeing the other as a frozen parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationParams {
    pub f_lip: f64,
    pub f_inf: f64,
    pub radius: f64,
    pub n_sub: usize,
}

impl Default for RotationParams {
    fn default() -> Self {
        Self {
            f_lip: 1.0,
            f_inf: 2.0,
            radius: 4.0,
            n_sub: 8,
        }
    }
}

pub type RotationFlow = Coupled<OdeProcess<Vec<f64>>, OdeProcess<Vec<f64>>>;

/// The two ODE processes of the rotation system on `[t_start, t_start + T]`,
/// with `T = R / (2 F_inf)` unless `horizon` is shorter.
pub fn rotation_flow(p: &RotationParams, t_start: f64, horizon: f64) -> Result<RotationFlow> {
    let on_u = OdeField::new(|_, _, w: &Vec<f64>| vec![w[0]], p.f_lip, p.f_inf, p.radius)?;
    let on_w = OdeField::new(|_, _, u: &Vec<f64>| vec![-u[0]], p.f_lip, p.f_inf, p.radius)?;
    Ok(Coupled::new(
        OdeProcess::new(on_u, t_start, horizon, p.n_sub)?,
        OdeProcess::new(on_w, t_start, horizon, p.n_sub)?,
    )
    .with_names("u", "w"))
}

/// `(u, w)(t) = (cos t, -sin t)` from `(1, 0)` at `t = 0`.
pub fn rotation_exact(t: f64) -> (f64, f64) {
    (t.cos(), -t.sin())
}

/// Exact process `x(t) = x(t0) + c (t - t0)`, independent of its parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift {
    pub speed: f64,
    pub horizon: f64,
}

impl Process for Drift {
    type State = f64;
    type Param = f64;

    fn solve(&self, t: f64, t0: f64, x: &f64, _: &f64) -> Result<f64> {
        Ok(x + self.speed * (t - t0))
    }

    fn constants(&self) -> ProcessConstants {
        ProcessConstants {
            c_u: 0.0,
            c_t: self.speed.abs(),
            c_w: 0.0,
            horizon: self.horizon,
        }
    }
}

/// `u' = 1`, `w' = -1`: the polygonal is exact at every step size.
pub fn translation_flow(horizon: f64) -> Coupled<Drift, Drift> {
    Coupled::new(
        Drift {
            speed: 1.0,
            horizon,
        },
        Drift {
            speed: -1.0,
            horizon,
        },
    )
}
