use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_core::Metric;

/// One axis of a uniform grid: cells `[origin + i dx, origin + (i + 1) dx)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub origin: f64,
    pub dx: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(origin: f64, dx: f64, n: usize) -> Result<Self> {
        if !origin.is_finite() {
            return Err(Error::config("grid.origin", "must be finite"));
        }
        if !(dx.is_finite() && dx > 0.0) {
            return Err(Error::config(
                "grid.dx",
                format!("must be positive, got {dx}"),
            ));
        }
        if n == 0 {
            return Err(Error::config("grid.n", "needs at least one cell"));
        }
        Ok(Self { origin, dx, n })
    }

    /// Axis covering `[a, b]` with `n` cells.
    pub fn span(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(b > a) {
            return Err(Error::config(
                "grid.box",
                format!("empty interval [{a}, {b}]"),
            ));
        }
        Self::new(a, (b - a) / n as f64, n)
    }

    pub fn center(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.dx
    }

    pub fn edge(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.dx
    }

    pub fn end(&self) -> f64 {
        self.edge(self.n)
    }

    /// Index of the left-closed cell containing `x`.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        let s = ((x - self.origin) / self.dx).floor();
        if s >= 0.0 && s < self.n as f64 {
            Some(s as usize)
        } else {
            None
        }
    }
}

/// A uniform 1D or 2D grid. In 2D the first axis runs fastest in storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::config("grid.dim", "dimension must be 1 or 2"));
        }
        Ok(Self { axes })
    }

    pub fn line(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(vec![Axis::span(a, b, n)?])
    }

    pub fn rect(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        Self::new(vec![Axis::span(x.0, x.1, nx)?, Axis::span(y.0, y.1, ny)?])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, k: usize) -> &Axis {
        &self.axes[k]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.dx).product()
    }

    /// Smallest cell width over all axes.
    pub fn min_dx(&self) -> f64 {
        self.axes.iter().map(|a| a.dx).fold(f64::INFINITY, f64::min)
    }

    /// Multi-index of a flat index.
    pub fn unflatten(&self, k: usize) -> (usize, usize) {
        let nx = self.axes[0].n;
        (k % nx, k / nx)
    }

    pub fn flatten(&self, i: usize, j: usize) -> usize {
        i + self.axes[0].n * j
    }

    /// Cell center of a flat index, padded with zero in 1D.
    pub fn center(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.unflatten(k);
        match self.dim() {
            1 => [self.axes[0].center(i), 0.0],
            _ => [self.axes[0].center(i), self.axes[1].center(j)],
        }
    }

    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let i = self.axes[0].cell_of(x[0])?;
        if self.dim() == 1 {
            return Some(i);
        }
        let j = self.axes[1].cell_of(x[1])?;
        Some(self.flatten(i, j))
    }

    /// Lower and upper corners of the box.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.axes.iter().map(|a| (a.origin, a.end())).collect()
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::GridMismatch(format!(
                "dimension {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        for (k, (a, b)) in self.axes.iter().zip(&other.axes).enumerate() {
            if a.n != b.n || a.origin != b.origin || a.dx != b.dx {
                return Err(Error::GridMismatch(format!(
                    "axis {k}: ({}, {}, {}) vs ({}, {}, {})",
                    a.origin, a.dx, a.n, b.origin, b.dx, b.n
                )));
            }
        }
        Ok(())
    }
}

/// Piecewise-constant function given by its cell averages on a [`Grid`],
/// extended by zero outside the box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value in cell {k}"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at the cell centers. In 1D `f` sees `[x, 0]`.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64; 2]) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.center(k))).collect();
        Self { grid, values }
    }

    /// Exact cell averages of the indicator of `[a, b)` on a 1D grid.
    pub fn indicator(grid: Grid, a: f64, b: f64) -> Self {
        let ax = *grid.axis(0);
        let values = (0..ax.n)
            .map(|i| {
                let lo = ax.edge(i).max(a);
                let hi = ax.edge(i + 1).min(b);
                ((hi - lo) / ax.dx).max(0.0)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &Self) -> Result<()> {
        self.grid.check_same(&other.grid)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_grid(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// `a * self + b * other`.
    pub fn lin_comb(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        self.zip_with(other, |x, y| a * x + b * y)
    }

    /// `sum u_i * volume`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Jumps across interior interfaces. In 2D each jump is weighted by the
    /// length of its face, which is the variation of the piecewise-constant
    /// function in the anisotropic (l1) sense.
    pub fn total_variation(&self) -> f64 {
        let v = &self.values;
        match self.grid.dim() {
            1 => v.windows(2).map(|w| (w[1] - w[0]).abs()).sum(),
            _ => {
                let (ax, ay) = (self.grid.axis(0), self.grid.axis(1));
                let mut tx = 0.0;
                let mut ty = 0.0;
                for j in 0..ay.n {
                    for i in 0..ax.n {
                        let k = self.grid.flatten(i, j);
                        if i + 1 < ax.n {
                            tx += (v[k + 1] - v[k]).abs();
                        }
                        if j + 1 < ay.n {
                            ty += (v[k + ax.n] - v[k]).abs();
                        }
                    }
                }
                tx * ay.dx + ty * ax.dx
            }
        }
    }

    /// Total variation of the zero extension, i.e. including the jumps to
    /// zero at the edges of the box (1D only; 2D adds the boundary faces).
    pub fn total_variation_extended(&self) -> f64 {
        let v = &self.values;
        match self.grid.dim() {
            1 => self.total_variation() + v[0].abs() + v[v.len() - 1].abs(),
            _ => {
                let (ax, ay) = (self.grid.axis(0), self.grid.axis(1));
                let mut edge = 0.0;
                for j in 0..ay.n {
                    edge += (v[self.grid.flatten(0, j)].abs()
                        + v[self.grid.flatten(ax.n - 1, j)].abs())
                        * ay.dx;
                }
                for i in 0..ax.n {
                    edge += (v[self.grid.flatten(i, 0)].abs()
                        + v[self.grid.flatten(i, ay.n - 1)].abs())
                        * ax.dx;
                }
                self.total_variation() + edge
            }
        }
    }

    /// Value at a point: the average of the left-closed cell containing it,
    /// zero outside the box.
    pub fn lookup(&self, x: &[f64]) -> f64 {
        self.grid.locate(x).map_or(0.0, |k| self.values[k])
    }

    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * self.grid.cell_volume())
    }

    /// Exact integral over `[a, b]` of the piecewise-constant 1D function.
    pub fn interval_integral(&self, a: f64, b: f64) -> f64 {
        let (a, b, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
        let ax = self.grid.axis(0);
        let first = (((a - ax.origin) / ax.dx).floor().max(0.0)) as usize;
        let last = (((b - ax.origin) / ax.dx).ceil().min(ax.n as f64)).max(0.0) as usize;
        let mut sum = 0.0;
        for i in first..last {
            let lo = ax.edge(i).max(a);
            let hi = ax.edge(i + 1).min(b);
            if hi > lo {
                sum += self.values[i] * (hi - lo);
            }
        }
        sign * sum
    }

    /// Exact integral over a simple polygon of the piecewise-constant 2D
    /// function, by clipping the polygon against each cell it may touch.
    pub fn polygon_integral(&self, poly: &[[f64; 2]]) -> f64 {
        let (ax, ay) = (self.grid.axis(0), self.grid.axis(1));
        let orientation = signed_area(poly).signum();
        let (mut x0, mut x1, mut y0, mut y1) = (
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
        );
        for p in poly {
            x0 = x0.min(p[0]);
            x1 = x1.max(p[0]);
            y0 = y0.min(p[1]);
            y1 = y1.max(p[1]);
        }
        let range = |a: &Axis, lo: f64, hi: f64| {
            let i0 = ((lo - a.origin) / a.dx).floor().max(0.0) as usize;
            let i1 = (((hi - a.origin) / a.dx).floor() + 1.0).clamp(0.0, a.n as f64) as usize;
            i0..i1
        };
        let mut sum = 0.0;
        for j in range(ay, y0, y1) {
            for i in range(ax, x0, x1) {
                let v = self.values[self.grid.flatten(i, j)];
                if v == 0.0 {
                    continue;
                }
                let clipped =
                    clip_to_rect(poly, ax.edge(i), ax.edge(i + 1), ay.edge(j), ay.edge(j + 1));
                sum += v * signed_area(&clipped) * orientation;
            }
        }
        sum
    }

    /// Distance from the support (non-zero cells) to the edge of the box;
    /// infinite for the zero function.
    pub fn support_clearance(&self) -> f64 {
        let mut clearance = f64::INFINITY;
        for (k, v) in self.values.iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            let (i, j) = self.grid.unflatten(k);
            for (axis, idx) in self.grid.axes().iter().zip([i, j]) {
                clearance = clearance
                    .min(axis.edge(idx) - axis.origin)
                    .min(axis.end() - axis.edge(idx + 1));
            }
        }
        clearance
    }

    /// Errors unless the support stays `required` away from the box edge.
    pub fn check_clearance(&self, required: f64, context: &str) -> Result<()> {
        let c = self.support_clearance();
        if c + 1e-12 < required {
            return Err(Error::SupportClearanceViolated(format!(
                "{context}: support is {c} from the box edge, {required} required"
            )));
        }
        Ok(())
    }

    /// CSV with header `x,value` (1D) or `x,y,value` (2D), one row per cell
    /// center.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: &[&str] = if self.grid.dim() == 1 {
            &["x", "value"]
        } else {
            &["x", "y", "value"]
        };
        w.write_record(header).map_err(csv_err)?;
        for (k, v) in self.values.iter().enumerate() {
            let c = self.grid.center(k);
            let mut row = vec![c[0].to_string()];
            if self.grid.dim() == 2 {
                row.push(c[1].to_string());
            }
            row.push(v.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads the format written by [`GridFunction::write_csv`]. The grid is
    /// recovered from the cell centers, so each axis needs two cells or more.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let dim = match r.headers().map_err(csv_err)?.len() {
            2 => 1,
            3 => 2,
            n => {
                return Err(Error::InvalidArgument(format!(
                    "unexpected column count {n}"
                )))
            }
        };
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let nums: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::InvalidArgument(format!("bad number: {e}")))?;
            rows.push(nums);
        }
        let axis_from = |coords: Vec<f64>| -> Result<Axis> {
            let mut c = coords;
            c.sort_by(f64::total_cmp);
            c.dedup();
            if c.len() < 2 {
                return Err(Error::InvalidArgument("need two cells per axis".into()));
            }
            let dx = (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64;
            Axis::new(c[0] - 0.5 * dx, dx, c.len())
        };
        let mut axes = vec![axis_from(rows.iter().map(|r| r[0]).collect())?];
        if dim == 2 {
            axes.push(axis_from(rows.iter().map(|r| r[1]).collect())?);
        }
        let grid = Grid::new(axes)?;
        let mut values = vec![0.0; grid.len()];
        for row in &rows {
            let k = grid
                .locate(&row[..dim])
                .ok_or_else(|| Error::InvalidArgument("center outside the grid".into()))?;
            values[k] = row[dim];
        }
        Self::from_values(grid, values)
    }
}

/// L1 distance; functions on different grids are infinitely far apart.
impl Metric for GridFunction {
    fn distance(&self, other: &Self) -> f64 {
        self.l1_distance(other).unwrap_or(f64::INFINITY)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut a = 0.0;
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

/// Sutherland-Hodgman clipping against an axis-aligned rectangle.
fn clip_to_rect(poly: &[[f64; 2]], x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<[f64; 2]> {
    let mut out = poly.to_vec();
    // (axis, bound, keep-if-greater)
    for (axis, bound, greater) in [(0, x0, true), (0, x1, false), (1, y0, true), (1, y1, false)] {
        if out.is_empty() {
            break;
        }
        let inside = |p: &[f64; 2]| {
            if greater {
                p[axis] >= bound
            } else {
                p[axis] <= bound
            }
        };
        let input = std::mem::take(&mut out);
        for k in 0..input.len() {
            let cur = input[k];
            let prev = input[(k + input.len() - 1) % input.len()];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let s = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                let mut p = [
                    prev[0] + s * (cur[0] - prev[0]),
                    prev[1] + s * (cur[1] - prev[1]),
                ];
                p[axis] = bound;
                out.push(p);
            }
            if ci {
                out.push(cur);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_line(a: f64, b: f64, dx: f64) -> Grid {
        Grid::line(a, b, ((b - a) / dx).round() as usize).unwrap()
    }

    #[test]
    fn l1_distance_examples() {
        let g = unit_line(0.0, 1.0, 0.1);
        let u = GridFunction::from_fn(g.clone(), |_| 1.0);
        let v = GridFunction::zeros(g);
        assert_eq!(u.l1_distance(&u).unwrap(), 0.0);
        assert!((u.l1_distance(&v).unwrap() - 1.0).abs() < 1e-12);

        let g = unit_line(-1.0, 3.0, 0.01);
        let a = GridFunction::indicator(g.clone(), 0.0, 1.0);
        let b = GridFunction::indicator(g, 0.3, 1.3);
        // Brute-force cell sum.
        let mut brute = 0.0;
        for k in 0..a.values().len() {
            brute += (a.values()[k] - b.values()[k]).abs() * 0.01;
        }
        assert!((a.l1_distance(&b).unwrap() - brute).abs() < 1e-12);
        assert!((brute - 0.6).abs() < 1e-9);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = GridFunction::zeros(Grid::line(0.0, 1.0, 10).unwrap());
        let b = GridFunction::zeros(Grid::line(0.0, 1.0, 20).unwrap());
        assert!(matches!(a.l1_distance(&b), Err(Error::GridMismatch(_))));
        assert!(a.distance(&b).is_infinite());
    }

    #[test]
    fn total_variation_examples() {
        let g = unit_line(-1.0, 2.0, 0.1);
        assert_eq!(
            GridFunction::from_fn(g.clone(), |_| 3.0).total_variation(),
            0.0
        );
        let ind = GridFunction::indicator(g, 0.0, 1.0);
        assert!((ind.total_variation() - 2.0).abs() < 1e-12);

        let stairs = GridFunction::from_values(
            Grid::line(0.0, 5.0, 5).unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
        )
        .unwrap();
        assert_eq!(stairs.total_variation(), 1.0);
        assert_eq!(stairs.total_variation_extended(), 2.0);
    }

    #[test]
    fn square_indicator_has_perimeter_variation() {
        let g = Grid::rect((-1.0, 2.0), (-1.0, 2.0), 30, 30).unwrap();
        let u = GridFunction::from_fn(g, |x| {
            if (0.0..1.0).contains(&x[0]) && (0.0..1.0).contains(&x[1]) {
                1.0
            } else {
                0.0
            }
        });
        assert!((u.total_variation() - 4.0).abs() < 1e-12);
        assert!((u.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lookup_is_left_closed_and_zero_outside() {
        let u =
            GridFunction::from_values(Grid::line(0.0, 2.0, 2).unwrap(), vec![1.0, 2.0]).unwrap();
        assert_eq!(u.lookup(&[0.0]), 1.0);
        assert_eq!(u.lookup(&[1.0]), 2.0);
        assert_eq!(u.lookup(&[2.0]), 0.0);
        assert_eq!(u.lookup(&[-1e-12]), 0.0);
    }

    #[test]
    fn interval_integral_is_exact() {
        let u = GridFunction::from_values(Grid::line(0.0, 3.0, 3).unwrap(), vec![1.0, 2.0, 4.0])
            .unwrap();
        assert!((u.interval_integral(0.5, 2.25) - (0.5 + 2.0 + 1.0)).abs() < 1e-15);
        assert!((u.interval_integral(-5.0, 5.0) - 7.0).abs() < 1e-15);
        assert!((u.interval_integral(2.25, 0.5) + 3.5).abs() < 1e-15);
    }

    #[test]
    fn polygon_integral_of_shifted_square() {
        let g = Grid::rect((0.0, 4.0), (0.0, 4.0), 4, 4).unwrap();
        let u = GridFunction::from_fn(g, |x| x[0].floor() + 10.0 * x[1].floor());
        // Unit square [0.5,1.5]x[0.5,1.5] covers four quarter cells.
        let sq = [[0.5, 0.5], [1.5, 0.5], [1.5, 1.5], [0.5, 1.5]];
        let expected = 0.25 * (0.0 + 1.0 + 10.0 + 11.0);
        assert!((u.polygon_integral(&sq) - expected).abs() < 1e-14);
        let rev: Vec<_> = sq.iter().rev().copied().collect();
        assert!((u.polygon_integral(&rev) - expected).abs() < 1e-14);
    }

    #[test]
    fn clearance_is_measured_from_the_support() {
        let g = Grid::line(-2.0, 2.0, 40).unwrap();
        let u = GridFunction::indicator(g, 0.0, 1.0);
        assert!((u.support_clearance() - 1.0).abs() < 1e-12);
        assert!(u.check_clearance(0.9, "test").is_ok());
        assert!(matches!(
            u.check_clearance(1.5, "test"),
            Err(Error::SupportClearanceViolated(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::rect((0.0, 1.0), (-1.0, 1.0), 4, 3).unwrap();
        let u = GridFunction::from_fn(g, |x| x[0] * 2.0 - x[1]);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"x,y,value\n"));
        let back = GridFunction::read_csv(&buf[..]).unwrap();
        assert_eq!(back.values(), u.values());
        for (a, b) in back.grid().axes().iter().zip(u.grid().axes()) {
            assert_eq!(a.n, b.n);
            assert!((a.origin - b.origin).abs() < 1e-12 && (a.dx - b.dx).abs() < 1e-12);
        }
    }
}
