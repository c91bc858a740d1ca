use crate::error::{Error, Result};

/// Radial bump `scale * (1 - (r / radius)^2)^4` for `r < radius`, zero
/// outside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub radius: f64,
    pub scale: f64,
}

/// `int_0^1 (1 - s^2)^4 ds`.
const LINE_MOMENT: f64 = 128.0 / 315.0;

impl Bump {
    pub fn new(radius: f64, scale: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::config(
                "radius",
                format!("kernel radius must be positive, got {radius}"),
            ));
        }
        if !scale.is_finite() {
            return Err(Error::config("scale", "kernel scale must be finite"));
        }
        Ok(Self { radius, scale })
    }

    /// Scaled to unit integral over `R^dim`.
    pub fn normalized(radius: f64, dim: usize) -> Result<Self> {
        let unit = Self::new(radius, 1.0)?;
        Self::new(radius, 1.0 / unit.integral(dim))
    }

    pub fn profile(&self, r: f64) -> f64 {
        let s = r / self.radius;
        if s.abs() >= 1.0 {
            0.0
        } else {
            self.scale * (1.0 - s * s).powi(4)
        }
    }

    /// `d profile / dr`.
    pub fn slope(&self, r: f64) -> f64 {
        let s = r / self.radius;
        if s.abs() >= 1.0 {
            0.0
        } else {
            -8.0 * self.scale * s / self.radius * (1.0 - s * s).powi(3)
        }
    }

    /// Gradient of `x -> profile(|x|)` at `z`.
    pub fn gradient(&self, z: &[f64; 2], dim: usize) -> [f64; 2] {
        let r = if dim == 1 {
            z[0].abs()
        } else {
            z[0].hypot(z[1])
        };
        if r == 0.0 {
            return [0.0, 0.0];
        }
        let g = self.slope(r) / r;
        if dim == 1 {
            [g * z[0], 0.0]
        } else {
            [g * z[0], g * z[1]]
        }
    }

    pub fn sup(&self) -> f64 {
        self.scale.abs()
    }

    /// `sup |profile'|`, attained at `r = radius / sqrt 7`.
    pub fn sup_slope(&self) -> f64 {
        let s = 1.0 / 7f64.sqrt();
        8.0 * self.scale.abs() * s / self.radius * (1.0 - s * s).powi(3)
    }

    /// Bound on the Hessian of `x -> profile(|x|)`: both `|profile''|` and
    /// `|profile'| / r` are at most `8 scale / radius^2`.
    pub fn sup_hessian(&self) -> f64 {
        8.0 * self.scale.abs() / (self.radius * self.radius)
    }

    /// Integral over `R^dim`.
    pub fn integral(&self, dim: usize) -> f64 {
        match dim {
            1 => 2.0 * self.scale * self.radius * LINE_MOMENT,
            _ => std::f64::consts::PI * self.scale * self.radius * self.radius / 5.0,
        }
    }

    /// Total variation of `x -> profile(|x|)` on `R^dim`.
    pub fn total_variation(&self, dim: usize) -> f64 {
        match dim {
            1 => 2.0 * self.sup(),
            _ => 2.0 * std::f64::consts::PI * self.scale.abs() * self.radius * LINE_MOMENT,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn midpoint_integral(b: &Bump, dim: usize, n: usize) -> f64 {
        let h = 2.0 * b.radius / n as f64;
        let c = |i: usize| -b.radius + (i as f64 + 0.5) * h;
        match dim {
            1 => (0..n).map(|i| b.profile(c(i).abs()) * h).sum(),
            _ => (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| b.profile(c(i).hypot(c(j))) * h * h)
                .sum(),
        }
    }

    #[test]
    fn normalized_bumps_integrate_to_one() {
        for dim in [1, 2] {
            let b = Bump::normalized(0.7, dim).unwrap();
            assert!(
                (midpoint_integral(&b, dim, 2000) - 1.0).abs() < 1e-6,
                "dim {dim}"
            );
        }
    }

    #[test]
    fn slope_and_hessian_bounds_dominate_samples() {
        let b = Bump::new(1.3, 2.0).unwrap();
        let h = 1e-5;
        for k in 1..1000 {
            let r = 1.3 * k as f64 / 1000.0;
            let fd = (b.profile(r + h) - b.profile(r - h)) / (2.0 * h);
            assert!((fd - b.slope(r)).abs() < 1e-6);
            assert!(b.slope(r).abs() <= b.sup_slope() * (1.0 + 1e-12));
            let dd = (b.slope(r + h) - b.slope(r - h)) / (2.0 * h);
            assert!(dd.abs() <= b.sup_hessian() * (1.0 + 1e-6));
        }
    }

    #[test]
    fn vanishes_outside_the_radius() {
        let b = Bump::new(0.5, 1.0).unwrap();
        assert_eq!(b.profile(0.5), 0.0);
        assert_eq!(b.profile(2.0), 0.0);
        assert_eq!(b.gradient(&[0.0, 0.0], 2), [0.0, 0.0]);
    }
}
