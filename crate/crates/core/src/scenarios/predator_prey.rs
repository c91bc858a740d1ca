//! A prey density `rho` escaping a predator at `p`, which chases the prey:
//!
//! `rho_t + div(rho V(t, x, p)) = -eta(|p - x|) rho`, `p' = (grad phi * rho)(p)`,
//!
//! with `V = -(p - x) / (alpha + |p - x|^2) psi(|p - x|^2)`.

use serde::{Deserialize, Serialize};

use super::driver::{march, march_at_level, MarchStats, Node, TimeSpec};
use super::kernels::Bump;
use crate::error::{Error, Result};
use crate::metric_core::{Coupled, CoupledState, RefineOptions};
use crate::ode::{OdeField, OdeProcess};
use crate::renewal::{
    ivp_domain_bounds, RenewalBounds, RenewalCoefficients, RenewalProcess, SolveOptions,
};
use crate::spaces::{Grid, GridFunction};
use crate::trajectory::Trajectory;
use crate::transport::Projection;

fn one() -> f64 {
    1.0
}

fn default_n_sub() -> usize {
    4
}

fn cell_average() -> Projection {
    Projection::CellAverage
}

/// Initial prey density `height * (1 - (|x - center| / radius)^2)^4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreyInit {
    pub center: Vec<f64>,
    pub radius: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredatorPreyParams {
    pub dim: usize,
    /// Smoothing of the escape direction.
    pub alpha: f64,
    /// Support radius of `psi`, in the squared-distance variable.
    pub r_rho: f64,
    /// Multiplies the unit-integral `psi`; zero switches escape off.
    #[serde(default = "one")]
    pub psi_weight: f64,
    pub r_p: f64,
    #[serde(default = "one")]
    pub phi_scale: f64,
    pub r_eta: f64,
    /// Height of the feeding kernel; zero switches feeding off.
    #[serde(default)]
    pub eta_scale: f64,
    pub predator: Vec<f64>,
    pub prey: PreyInit,
    #[serde(default = "default_n_sub")]
    pub n_sub: usize,
    #[serde(default = "cell_average")]
    pub projection: Projection,
    /// Radius of the prey domain; derived from the initial datum if absent.
    #[serde(default)]
    pub prey_radius: Option<f64>,
    /// Radius of the predator ball; derived from the run length if absent.
    #[serde(default)]
    pub predator_radius: Option<f64>,
}

impl PredatorPreyParams {
    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::config("params.dim", "must be 1 or 2"));
        }
        for (name, v) in [
            ("params.alpha", self.alpha),
            ("params.r_rho", self.r_rho),
            ("params.r_p", self.r_p),
            ("params.r_eta", self.r_eta),
            ("params.prey.radius", self.prey.radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("params.psi_weight", self.psi_weight),
            ("params.phi_scale", self.phi_scale),
            ("params.eta_scale", self.eta_scale),
            ("params.prey.height", self.prey.height),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("must be nonnegative, got {v}")));
            }
        }
        if self.predator.len() != self.dim {
            return Err(Error::config("params.predator", "length must equal dim"));
        }
        if self.prey.center.len() != self.dim {
            return Err(Error::config("params.prey.center", "length must equal dim"));
        }
        if self.n_sub == 0 {
            return Err(Error::config("params.n_sub", "must be at least 1"));
        }
        Ok(())
    }

    fn point(v: &[f64]) -> [f64; 2] {
        [v[0], v.get(1).copied().unwrap_or(0.0)]
    }

    /// The three kernels `psi`, `phi`, `eta`.
    pub fn kernels(&self) -> Result<(Bump, Bump, Bump)> {
        let mut psi = Bump::normalized(self.r_rho, self.dim)?;
        psi.scale *= self.psi_weight;
        Ok((
            psi,
            Bump::new(self.r_p, self.phi_scale)?,
            Bump::new(self.r_eta, self.eta_scale)?,
        ))
    }

    pub fn initial_prey(&self, grid: &Grid) -> GridFunction {
        let c = Self::point(&self.prey.center);
        let shape = Bump {
            radius: self.prey.radius,
            scale: self.prey.height,
        };
        let dim = self.dim;
        GridFunction::from_fn(grid.clone(), move |x| {
            let r = if dim == 1 {
                (x[0] - c[0]).abs()
            } else {
                (x[0] - c[0]).hypot(x[1] - c[1])
            };
            shape.profile(r)
        })
    }
}

fn escape(psi: &Bump, alpha: f64, dim: usize, x: &[f64; 2], p: &[f64]) -> [f64; 2] {
    let z = [p[0] - x[0], if dim == 2 { p[1] - x[1] } else { 0.0 }];
    let d2 = z[0] * z[0] + z[1] * z[1];
    let g = psi.profile(d2) / (alpha + d2);
    [-g * z[0], -g * z[1]]
}

/// `sup |div V|`-gradient in L1, by nested central differences on a local
/// grid of spacing `reach / 200` around a predator at the origin.
fn div_gradient_l1(psi: &Bump, alpha: f64, dim: usize, reach: f64) -> f64 {
    let n = 200usize;
    let h = reach / n as f64;
    let p = [0.0, 0.0];
    let div = |x: [f64; 2]| {
        let mut d = 0.0;
        for c in 0..dim {
            let (mut a, mut b) = (x, x);
            a[c] += h;
            b[c] -= h;
            d += (escape(psi, alpha, dim, &a, &p)[c] - escape(psi, alpha, dim, &b, &p)[c])
                / (2.0 * h);
        }
        d
    };
    let m = n as isize + 3;
    let idx: Vec<isize> = (-m..=m).collect();
    let mut sum = 0.0;
    let cells: Box<dyn Iterator<Item = [f64; 2]>> = if dim == 1 {
        Box::new(idx.iter().map(move |&i| [i as f64 * h, 0.0]))
    } else {
        let idx2 = idx.clone();
        Box::new(idx.into_iter().flat_map(move |i| {
            idx2.clone()
                .into_iter()
                .map(move |j| [i as f64 * h, j as f64 * h])
        }))
    };
    for x in cells {
        let mut g2 = 0.0;
        for c in 0..dim {
            let (mut a, mut b) = (x, x);
            a[c] += h;
            b[c] -= h;
            let g = (div(a) - div(b)) / (2.0 * h);
            g2 += g * g;
        }
        sum += g2.sqrt() * h.powi(dim as i32);
    }
    sum
}

/// Certificates of the prey velocity and the feeding rate, from kernel
/// sup-norms and sampling of the radial profiles.
pub fn prey_bounds(params: &PredatorPreyParams) -> Result<RenewalBounds> {
    let (psi, _, eta) = params.kernels()?;
    let alpha = params.alpha;
    let reach = params.r_rho.sqrt();
    let samples = 4000;
    let (mut v_inf, mut grad) = (0.0f64, 0.0f64);
    for k in 0..=samples {
        let d = reach * k as f64 / samples as f64;
        let d2 = d * d;
        let den = alpha + d2;
        let g = psi.profile(d2) / den;
        v_inf = v_inf.max(g * d);
        let dg = psi.slope(d2).abs() / den + psi.profile(d2).abs() / (den * den);
        grad = grad.max(g.abs() + 2.0 * d2 * dg);
    }
    let v1 = 1.05 * div_gradient_l1(&psi, alpha, params.dim, reach);
    Ok(RenewalBounds {
        v1,
        v_lip: (1.01 * grad).max(v1),
        v_inf: 1.01 * v_inf,
        m_inf: eta.sup() + eta.total_variation(params.dim),
        m_lip: eta.total_variation(params.dim),
        ..Default::default()
    })
}

/// The two halves of the model: the renewal coefficients for the prey,
/// parametrized by the predator position, and the predator field,
/// parametrized by the prey density on `grid`. `prey_radius` bounds the prey
/// mass on the domain and enters the predator certificates.
pub fn predator_prey_fields(
    params: &PredatorPreyParams,
    grid: &Grid,
    prey_radius: f64,
    predator_radius: f64,
) -> Result<(RenewalCoefficients<Vec<f64>>, OdeField<GridFunction>)> {
    params.validate()?;
    if grid.dim() != params.dim {
        return Err(Error::config("grid", "dimension differs from params.dim"));
    }
    let reach = params.r_rho.sqrt().max(params.r_p).max(params.r_eta);
    for (k, (a, b)) in grid.bounds().into_iter().enumerate() {
        if b - a < 2.0 * reach {
            return Err(Error::KernelOutOfBox(format!(
                "kernel reach {reach} does not fit axis {k} of length {}",
                b - a
            )));
        }
    }
    let (psi, phi, eta) = params.kernels()?;
    let (alpha, dim) = (params.alpha, params.dim);
    let coef = RenewalCoefficients::new(
        dim,
        move |_, x, p: &Vec<f64>| escape(&psi, alpha, dim, x, p),
        move |_, x, p: &Vec<f64>| {
            let r = if dim == 1 {
                (p[0] - x[0]).abs()
            } else {
                (p[0] - x[0]).hypot(p[1] - x[1])
            };
            -eta.profile(r)
        },
        |_, _, _| 0.0,
        prey_bounds(params)?,
    )?;
    let f_inf = phi.sup_slope() * prey_radius;
    let f_lip = (phi.sup_hessian() * prey_radius).max(phi.sup_slope());
    let field = OdeField::new(
        move |_, p, rho: &GridFunction| predator_speed(&phi, dim, p, rho),
        f_lip,
        f_inf,
        predator_radius,
    )?;
    Ok((coef, field))
}

/// `(grad phi * rho)(p)` by the midpoint rule on the cells of `rho`.
pub fn predator_speed(phi: &Bump, dim: usize, p: &[f64], rho: &GridFunction) -> Vec<f64> {
    let g = rho.grid();
    let vol = g.cell_volume();
    let mut acc = [0.0, 0.0];
    let pp = [p[0], p.get(1).copied().unwrap_or(0.0)];
    for (k, r) in rho.values().iter().enumerate() {
        if *r == 0.0 {
            continue;
        }
        let x = g.center(k);
        let gr = phi.gradient(&[pp[0] - x[0], pp[1] - x[1]], dim);
        acc[0] += gr[0] * r * vol;
        acc[1] += gr[1] * r * vol;
    }
    acc[..dim].to_vec()
}

/// Outcome of [`run_predator_prey`].
#[derive(Debug, Clone)]
pub struct PredatorPreyRun {
    pub trajectory: Trajectory,
    pub prey: GridFunction,
    pub predator: Vec<f64>,
    pub stats: MarchStats,
    pub macro_step: f64,
    pub prey_radius: f64,
    pub predator_radius: f64,
    /// Predator position at the end of the first macro step.
    pub predator_after_first_step: Vec<f64>,
}

/// Couples the prey renewal process with the predator ODE and marches over
/// `time`, recording predator position, prey mass, norms and domain margins
/// at every polygonal node.
pub fn run_predator_prey(
    params: &PredatorPreyParams,
    grid: &Grid,
    time: &TimeSpec,
    opts: RefineOptions,
) -> Result<PredatorPreyRun> {
    run_impl(params, grid, time, Some(opts), 0)
}

/// [`run_predator_prey`] with every macro step's polygonal at the single
/// level `eps = tau / 2^level`.
pub fn run_predator_prey_at_level(
    params: &PredatorPreyParams,
    grid: &Grid,
    time: &TimeSpec,
    level: u32,
) -> Result<PredatorPreyRun> {
    run_impl(params, grid, time, None, level)
}

fn run_impl(
    params: &PredatorPreyParams,
    grid: &Grid,
    time: &TimeSpec,
    opts: Option<RefineOptions>,
    level: u32,
) -> Result<PredatorPreyRun> {
    params.validate()?;
    time.validate()?;
    let rho0 = params.initial_prey(grid);
    let bounds = prey_bounds(params)?;
    let k_tv = bounds.m_inf + bounds.v1.max(bounds.v_lip);
    let macro_step = if k_tv > 0.0 {
        time.macro_step.min(0.25 / k_tv)
    } else {
        time.macro_step
    };
    let size = rho0
        .l1_norm()
        .max(rho0.linf_norm())
        .max(rho0.total_variation());
    let prey_radius = params
        .prey_radius
        .unwrap_or(4.0 * size.max(f64::MIN_POSITIVE));
    let (_, phi, _) = params.kernels()?;
    let f_inf = phi.sup_slope() * prey_radius;
    let p_norm = params.predator.iter().map(|v| v * v).sum::<f64>().sqrt();
    let predator_radius = params.predator_radius.unwrap_or_else(|| {
        (2.2 * (p_norm + f_inf * time.horizon))
            .max(2.0 * f_inf * macro_step * 1.01)
            .max(1.0)
    });
    let (coef, field) = predator_prey_fields(params, grid, prey_radius, predator_radius)?;
    let slack = 10.0 * grid.min_dx() * rho0.total_variation();
    let solve = SolveOptions {
        n_sub: params.n_sub,
        projection: params.projection,
    };
    let run_time = TimeSpec {
        macro_step,
        ..*time
    };

    let mut columns: Vec<&str> = vec!["t", "p1"];
    if params.dim == 2 {
        columns.push("p2");
    }
    columns.extend([
        "mass",
        "l1",
        "linf",
        "tv",
        "alpha1_margin",
        "alphainf_margin",
        "alphatv_margin",
    ]);
    let mut traj = Trajectory::new(&columns);
    let mut after_first = None;
    let first_end = time.t0 + macro_step.min(time.horizon);
    let x0 = CoupledState::new(rho0, params.predator.clone());
    let build = |t_start, tau| {
        let prey =
            RenewalProcess::new(coef.clone(), solve, t_start, tau, prey_radius)?.with_slack(slack);
        let predator = OdeProcess::new(field.clone(), t_start, tau, params.n_sub)?;
        Ok(Coupled::new(prey, predator).with_names("prey", "predator"))
    };
    let visit = |node: Node<'_, CoupledState<GridFunction, Vec<f64>>>| {
        let rho = &node.state.u;
        let b = ivp_domain_bounds(
            (node.t - node.t_start).clamp(0.0, node.tau),
            prey_radius,
            node.tau,
            &bounds,
        )?;
        let m = b.margins(rho);
        let mut row = vec![node.t];
        row.extend(&node.state.w);
        row.extend([
            rho.integral(),
            rho.l1_norm(),
            rho.linf_norm(),
            rho.total_variation(),
            m[0],
            m[1],
            m[2],
        ]);
        if after_first.is_none() && node.t >= first_end {
            after_first = Some(node.state.w.clone());
        }
        traj.push(row)
    };
    let (x, stats) = match opts {
        Some(o) => march(&run_time, x0, o, build, visit)?,
        None => march_at_level(&run_time, x0, level, build, visit)?,
    };
    Ok(PredatorPreyRun {
        trajectory: traj,
        predator_after_first_step: after_first.unwrap_or_else(|| x.w.clone()),
        prey: x.u,
        predator: x.w,
        stats,
        macro_step,
        prey_radius,
        predator_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dim: usize) -> PredatorPreyParams {
        PredatorPreyParams {
            dim,
            alpha: 0.5,
            r_rho: 1.0,
            psi_weight: 1.0,
            r_p: 1.0,
            phi_scale: 1.0,
            r_eta: 0.5,
            eta_scale: 0.0,
            predator: vec![0.0; dim],
            prey: PreyInit {
                center: vec![0.0; dim],
                radius: 1.0,
                height: 1.0,
            },
            n_sub: 4,
            projection: Projection::CellAverage,
            prey_radius: None,
            predator_radius: None,
        }
    }

    #[test]
    fn escape_speed_examples() {
        let p = params(2);
        let (psi, _, _) = p.kernels().unwrap();
        assert_eq!(escape(&psi, 0.5, 2, &[0.3, -0.2], &[0.3, -0.2]), [0.0, 0.0]);
        let mut off = p.clone();
        off.psi_weight = 0.0;
        let (psi0, _, _) = off.kernels().unwrap();
        assert_eq!(escape(&psi0, 0.5, 2, &[0.1, 0.0], &[0.4, 0.2]), [0.0, 0.0]);
        // Prey flee away from the predator.
        let v = escape(&psi, 0.5, 2, &[0.2, 0.0], &[0.0, 0.0]);
        assert!(v[0] > 0.0 && v[1] == 0.0);
    }

    #[test]
    fn symmetric_prey_give_zero_predator_speed() {
        let p = params(2);
        let g = Grid::rect((-3.0, 3.0), (-3.0, 3.0), 60, 60).unwrap();
        let rho = p.initial_prey(&g);
        let (_, phi, _) = p.kernels().unwrap();
        let u = predator_speed(&phi, 2, &[0.0, 0.0], &rho);
        assert!(u[0].abs() < 1e-14 && u[1].abs() < 1e-14);
        // Off-center predators are pulled toward the prey.
        let u = predator_speed(&phi, 2, &[0.5, 0.0], &rho);
        assert!(u[0] < 0.0);
    }

    #[test]
    fn kernels_must_fit_the_box() {
        let p = params(1);
        let g = Grid::line(-0.5, 0.5, 10).unwrap();
        assert!(matches!(
            predator_prey_fields(&p, &g, 1.0, 1.0),
            Err(Error::KernelOutOfBox(_))
        ));
    }

    #[test]
    fn certificates_dominate_samples() {
        let p = params(1);
        let b = prey_bounds(&p).unwrap();
        let (psi, _, _) = p.kernels().unwrap();
        for k in 0..2000 {
            let x = -1.5 + 3.0 * k as f64 / 2000.0;
            let v = escape(&psi, p.alpha, 1, &[x, 0.0], &[0.0]);
            assert!(v[0].abs() <= b.v_inf);
            let h = 1e-6;
            let d = (escape(&psi, p.alpha, 1, &[x + h, 0.0], &[0.0])[0]
                - escape(&psi, p.alpha, 1, &[x - h, 0.0], &[0.0])[0])
                / (2.0 * h);
            assert!(d.abs() <= b.v_lip);
        }
        assert!(b.v1 > 0.0);
    }

    #[test]
    fn frozen_prey_without_escape_or_feeding() {
        let mut p = params(1);
        p.psi_weight = 0.0;
        let g = Grid::line(-4.0, 4.0, 200).unwrap();
        let time = TimeSpec {
            t0: 0.0,
            horizon: 0.5,
            macro_step: 0.25,
        };
        let opts = RefineOptions {
            j0: 1,
            j_max: 3,
            tol: 1e-8,
        };
        let run = run_predator_prey(&p, &g, &time, opts).unwrap();
        assert!(run.prey.l1_distance(&p.initial_prey(&g)).unwrap() < 1e-12);
    }

    #[test]
    fn prey_mass_is_conserved_without_feeding() {
        let mut p = params(1);
        p.predator = vec![0.4];
        let g = Grid::line(-4.0, 4.0, 400).unwrap();
        let time = TimeSpec {
            t0: 0.0,
            horizon: 0.5,
            macro_step: 0.25,
        };
        let opts = RefineOptions {
            j0: 1,
            j_max: 4,
            tol: 1e-6,
        };
        let run = run_predator_prey(&p, &g, &time, opts).unwrap();
        let m0 = p.initial_prey(&g).integral();
        assert!(((run.prey.integral() - m0) / m0).abs() < 1e-3);
        assert!(run.predator[0] < 0.4);
    }

    #[test]
    fn feeding_only_removes_prey() {
        let mut p = params(1);
        p.eta_scale = 0.8;
        p.predator = vec![0.3];
        let g = Grid::line(-4.0, 4.0, 200).unwrap();
        let time = TimeSpec {
            t0: 0.0,
            horizon: 0.5,
            macro_step: 0.25,
        };
        let run = run_predator_prey(
            &p,
            &g,
            &time,
            RefineOptions {
                j0: 1,
                j_max: 3,
                tol: 1e-6,
            },
        )
        .unwrap();
        let mass = run.trajectory.column("mass").unwrap();
        assert!(mass.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        assert!(mass.last().unwrap() < &mass[0]);
    }
}
