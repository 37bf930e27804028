//! Uniform 2D grids, grid-sampled scalar/vector fields, discrete gradients,
//! and the text field-file format.
//!
//! Node `(i, j)` sits at `(x0 + i*hx, y0 + j*hy)`; values are stored row-major
//! with `x` varying fastest, i.e. index `j*nx + i`.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Uniform rectangular grid of nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub x0: f64,
    pub y0: f64,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, hx: f64, hy: f64, x0: f64, y0: f64) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes per axis, got {nx} x {ny}"
            )));
        }
        if !(hx > 0.0 && hy > 0.0) || !hx.is_finite() || !hy.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "spacings must be positive, got hx = {hx}, hy = {hy}"
            )));
        }
        if !x0.is_finite() || !y0.is_finite() {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(Self { nx, ny, hx, hy, x0, y0 })
    }

    /// Grid covering `[xmin, xmax] x [ymin, ymax]` with the given node counts.
    pub fn covering(nx: usize, ny: usize, xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        if !(xmax > xmin && ymax > ymin) {
            return Err(Error::InvalidGrid("empty domain".into()));
        }
        let hx = (xmax - xmin) / (nx.max(2) - 1) as f64;
        let hy = (ymax - ymin) / (ny.max(2) - 1) as f64;
        Self::new(nx, ny, hx, hy, xmin, ymin)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn pos(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x0 + i as f64 * self.hx, self.y0 + j as f64 * self.hy]
    }

    #[inline]
    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        i > 0 && j > 0 && i + 1 < self.nx && j + 1 < self.ny
    }

    #[inline]
    pub fn max_spacing(&self) -> f64 {
        self.hx.max(self.hy)
    }

    pub fn xmax(&self) -> f64 {
        self.x0 + (self.nx - 1) as f64 * self.hx
    }

    pub fn ymax(&self) -> f64 {
        self.y0 + (self.ny - 1) as f64 * self.hy
    }

    /// Distance from a point to the boundary of the grid's bounding box.
    pub fn dist_to_boundary(&self, p: [f64; 2]) -> f64 {
        let dx = (p[0] - self.x0).min(self.xmax() - p[0]);
        let dy = (p[1] - self.y0).min(self.ymax() - p[1]);
        dx.min(dy)
    }

    /// Nearest node indices for a physical point (clamped to the grid).
    pub fn nearest_node(&self, p: [f64; 2]) -> (usize, usize) {
        let fi = ((p[0] - self.x0) / self.hx).round().clamp(0.0, (self.nx - 1) as f64);
        let fj = ((p[1] - self.y0) / self.hy).round().clamp(0.0, (self.ny - 1) as f64);
        (fi as usize, fj as usize)
    }

    fn same_as(&self, other: &Grid2D) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.hx - other.hx).abs() <= 1e-12 * self.hx
            && (self.hy - other.hy).abs() <= 1e-12 * self.hy
            && (self.x0 - other.x0).abs() <= 1e-12 * self.hx
            && (self.y0 - other.y0).abs() <= 1e-12 * self.hy
    }
}

/// Scalar values sampled at every grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid2D,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value {v}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    /// Sample an analytic function at every node.
    pub fn from_fn(grid: Grid2D, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(grid.pos(i, j)));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.values[self.grid.idx(i, j)]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{}x{} vs {}x{}",
                self.grid.nx, self.grid.ny, other.grid.nx, other.grid.ny
            )))
        }
    }

    /// Bilinear interpolation at a physical point inside the grid box.
    pub fn interp(&self, p: [f64; 2]) -> Result<f64> {
        let g = &self.grid;
        let fx = (p[0] - g.x0) / g.hx;
        let fy = (p[1] - g.y0) / g.hy;
        let slack = 1e-9;
        if fx < -slack || fy < -slack || fx > (g.nx - 1) as f64 + slack || fy > (g.ny - 1) as f64 + slack {
            return Err(Error::Geometry(format!("point {p:?} outside the grid box")));
        }
        let i = (fx.floor() as usize).min(g.nx - 2);
        let j = (fy.floor() as usize).min(g.ny - 2);
        let tx = (fx - i as f64).clamp(0.0, 1.0);
        let ty = (fy - j as f64).clamp(0.0, 1.0);
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        Ok(v00 * (1.0 - tx) * (1.0 - ty)
            + v10 * tx * (1.0 - ty)
            + v01 * (1.0 - tx) * ty
            + v11 * tx * ty)
    }

    /// Write the field in the text format:
    /// line 1 `nx ny hx hy x0 y0`, then `nx*ny` node values row-major,
    /// 17 significant digits each.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let g = &self.grid;
        writeln!(w, "{} {} {:.16e} {:.16e} {:.16e} {:.16e}", g.nx, g.ny, g.hx, g.hy, g.x0, g.y0)?;
        for v in &self.values {
            writeln!(w, "{v:.16e}")?;
        }
        Ok(())
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from(r: impl std::io::Read) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedField("empty file".into()))??;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 6 {
            return Err(Error::MalformedField(format!(
                "header must be `nx ny hx hy x0 y0`, got {} fields",
                parts.len()
            )));
        }
        let nx: usize = parts[0]
            .parse()
            .map_err(|_| Error::MalformedField(format!("bad nx `{}`", parts[0])))?;
        let ny: usize = parts[1]
            .parse()
            .map_err(|_| Error::MalformedField(format!("bad ny `{}`", parts[1])))?;
        let nums: Vec<f64> = parts[2..]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| Error::MalformedField(format!("bad number `{s}`"))))
            .collect::<Result<_>>()?;
        let grid = Grid2D::new(nx, ny, nums[0], nums[1], nums[2], nums[3])?;
        let mut values = Vec::with_capacity(grid.len());
        for line in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            values.push(
                t.parse::<f64>()
                    .map_err(|_| Error::MalformedField(format!("bad value `{t}`")))?,
            );
        }
        if values.len() != grid.len() {
            return Err(Error::MalformedField(format!(
                "expected {} values, found {}",
                grid.len(),
                values.len()
            )));
        }
        ScalarField::new(grid, values)
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::fs::File::open(path)?)
    }
}

/// Two vector components sampled at every grid node.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub grid: Grid2D,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
}

impl VectorField {
    pub fn from_fn(grid: Grid2D, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mut vx = Vec::with_capacity(grid.len());
        let mut vy = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let v = f(grid.pos(i, j));
                vx.push(v[0]);
                vy.push(v[1]);
            }
        }
        Self { grid, vx, vy }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> [f64; 2] {
        let k = self.grid.idx(i, j);
        [self.vx[k], self.vy[k]]
    }

    #[inline]
    pub fn norm_at(&self, i: usize, j: usize) -> f64 {
        let [a, b] = self.at(i, j);
        a.hypot(b)
    }
}

/// Discrete gradient: central differences at interior nodes, one-sided
/// second-order differences on the boundary. Exact on affine and quadratic
/// fields up to rounding.
pub fn gradient_field(u: &ScalarField) -> VectorField {
    let g = u.grid;
    let mut vx = vec![0.0; g.len()];
    let mut vy = vec![0.0; g.len()];
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            vx[k] = diff_x(u, i, j);
            vy[k] = diff_y(u, i, j);
        }
    }
    VectorField { grid: g, vx, vy }
}

#[inline]
pub(crate) fn diff_x(u: &ScalarField, i: usize, j: usize) -> f64 {
    let g = &u.grid;
    if i == 0 {
        (-3.0 * u.at(0, j) + 4.0 * u.at(1, j) - u.at(2, j)) / (2.0 * g.hx)
    } else if i + 1 == g.nx {
        (3.0 * u.at(i, j) - 4.0 * u.at(i - 1, j) + u.at(i - 2, j)) / (2.0 * g.hx)
    } else {
        (u.at(i + 1, j) - u.at(i - 1, j)) / (2.0 * g.hx)
    }
}

#[inline]
pub(crate) fn diff_y(u: &ScalarField, i: usize, j: usize) -> f64 {
    let g = &u.grid;
    if j == 0 {
        (-3.0 * u.at(i, 0) + 4.0 * u.at(i, 1) - u.at(i, 2)) / (2.0 * g.hy)
    } else if j + 1 == g.ny {
        (3.0 * u.at(i, j) - 4.0 * u.at(i, j - 1) + u.at(i, j - 2)) / (2.0 * g.hy)
    } else {
        (u.at(i, j + 1) - u.at(i, j - 1)) / (2.0 * g.hy)
    }
}
