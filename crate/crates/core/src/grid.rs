//! Uniform tensor grid on `[0, L] x [-B, B]`, nodal fields, and the
//! finite-difference stencils used everywhere else.
//!
//! Node `(i, j)` sits at `(i * dx, -B + j * dy)` with `0 <= i <= nx`,
//! `0 <= j <= ny`. Field values are stored row by row, `x` fastest.
//!
//! The x-stencils encode the boundary set `u(0) = u(L) = u_x(L) = 0`:
//! central differences in the interior, a reflected ghost
//! `u(L + dx) = u(L - dx)` on the right and a quartic-extrapolated ghost
//! on the left for the third derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of intervals per direction.
pub const MIN_INTERVALS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectGrid {
    l: f64,
    b: f64,
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
}

impl RectGrid {
    pub fn new(l: f64, b: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::Config(format!("L must be positive, got {l}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::Config(format!("B must be positive, got {b}")));
        }
        if nx < MIN_INTERVALS || ny < MIN_INTERVALS {
            return Err(Error::Config(format!(
                "grid too small: nx = {nx}, ny = {ny} (need at least {MIN_INTERVALS} intervals each)"
            )));
        }
        Ok(Self {
            l,
            b,
            nx,
            ny,
            dx: l / nx as f64,
            dy: 2.0 * b / ny as f64,
        })
    }

    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }

    /// Number of nodes including the boundary.
    pub fn len(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.nx && j <= self.ny);
        j * (self.nx + 1) + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        -self.b + j as f64 * self.dy
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// Trapezoidal weight of node `i` along x.
    #[inline]
    pub fn wx(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx {
            0.5 * self.dx
        } else {
            self.dx
        }
    }

    /// Trapezoidal weight of node `j` along y.
    #[inline]
    pub fn wy(&self, j: usize) -> f64 {
        if j == 0 || j == self.ny {
            0.5 * self.dy
        } else {
            self.dy
        }
    }

    pub(crate) fn check_same(&self, other: &RectGrid) -> Result<()> {
        if self != other {
            return Err(Error::Usage(format!(
                "fields live on different grids ({}x{} on {}x{} vs {}x{} on {}x{})",
                self.nx, self.ny, self.l, self.b, other.nx, other.ny, other.l, other.b
            )));
        }
        Ok(())
    }
}

/// One scalar unknown sampled on every node of a [`RectGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: RectGrid,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: RectGrid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    pub fn from_values(grid: RectGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Usage(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Usage(format!("non-finite field value {v}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: RectGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..=grid.ny {
            let y = grid.y(j);
            for i in 0..=grid.nx {
                values.push(f(grid.x(i), y));
            }
        }
        Self { grid, values }
    }

    /// Samples `f` and then forces the four edges to zero.
    pub fn from_fn_conformant(grid: RectGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = Self::from_fn(grid, f);
        field.conform();
        field
    }

    pub fn grid(&self) -> &RectGrid {
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

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.values[k] = v;
    }

    /// Zeroes the values on all four edges.
    pub fn conform(&mut self) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for i in 0..=nx {
            self.set(i, 0, 0.0);
            self.set(i, ny, 0.0);
        }
        for j in 0..=ny {
            self.set(0, j, 0.0);
            self.set(nx, j, 0.0);
        }
    }

    pub fn is_conformant(&self) -> bool {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        (0..=nx).all(|i| self.at(i, 0) == 0.0 && self.at(i, ny) == 0.0)
            && (0..=ny).all(|j| self.at(0, j) == 0.0 && self.at(nx, j) == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.check_same(&other.grid)?;
        Ok(Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scaled(&self, alpha: f64) -> Field {
        self.map(|v| alpha * v)
    }

    /// `self + alpha * other`
    pub fn axpy(&self, alpha: f64, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a + alpha * b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_map(other, |a, b| a - b)
    }

    fn same_grid(&self, values: Vec<f64>) -> Field {
        Field {
            grid: self.grid,
            values,
        }
    }
}

// 1-D stencil helpers. `h` is the spacing, `f(k)` returns the k-th sample.

#[inline]
fn first_fwd(f0: f64, f1: f64, f2: f64, h: f64) -> f64 {
    (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h)
}

#[inline]
fn first_bwd(fn0: f64, fn1: f64, fn2: f64, h: f64) -> f64 {
    (3.0 * fn0 - 4.0 * fn1 + fn2) / (2.0 * h)
}

#[inline]
fn second_onesided(f0: f64, f1: f64, f2: f64, f3: f64, h: f64) -> f64 {
    (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h)
}

/// Ghost value `u(-h)` from the quartic through `u(0), ..., u(4h)`.
#[inline]
pub(crate) fn left_ghost(f: [f64; 5]) -> f64 {
    5.0 * f[0] - 10.0 * f[1] + 10.0 * f[2] - 5.0 * f[3] + f[4]
}

/// Applies a 1-D x-stencil row by row.
fn along_x(f: &Field, line: impl Fn(&[f64], &mut [f64], f64)) -> Field {
    let g = f.grid;
    let w = g.nx + 1;
    let mut out = vec![0.0; g.len()];
    for (src, dst) in f.values.chunks_exact(w).zip(out.chunks_exact_mut(w)) {
        line(src, dst, g.dx);
    }
    f.same_grid(out)
}

/// Applies a 1-D y-stencil column by column.
fn along_y(f: &Field, line: impl Fn(&[f64], &mut [f64], f64)) -> Field {
    let g = f.grid;
    let mut col = vec![0.0; g.ny + 1];
    let mut res = vec![0.0; g.ny + 1];
    let mut out = vec![0.0; g.len()];
    for i in 0..=g.nx {
        for (j, c) in col.iter_mut().enumerate() {
            *c = f.at(i, j);
        }
        line(&col, &mut res, g.dy);
        for (j, r) in res.iter().enumerate() {
            out[g.idx(i, j)] = *r;
        }
    }
    f.same_grid(out)
}

fn dx_line(u: &[f64], out: &mut [f64], h: f64, open_right: bool) {
    let n = u.len() - 1;
    out[0] = first_fwd(u[0], u[1], u[2], h);
    for i in 1..n {
        out[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    out[n] = if open_right {
        first_bwd(u[n], u[n - 1], u[n - 2], h)
    } else {
        0.0
    };
}

fn second_line(u: &[f64], out: &mut [f64], h: f64) {
    let n = u.len() - 1;
    out[0] = second_onesided(u[0], u[1], u[2], u[3], h);
    for i in 1..n {
        out[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
    }
    out[n] = second_onesided(u[n], u[n - 1], u[n - 2], u[n - 3], h);
}

fn first_line(u: &[f64], out: &mut [f64], h: f64) {
    let n = u.len() - 1;
    out[0] = first_fwd(u[0], u[1], u[2], h);
    for i in 1..n {
        out[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    out[n] = first_bwd(u[n], u[n - 1], u[n - 2], h);
}

fn dxxx_line(u: &[f64], out: &mut [f64], h: f64) {
    let n = u.len() - 1;
    let c = 1.0 / (2.0 * h * h * h);
    // one-sided second-order closures on the edge nodes themselves
    out[0] = (-5.0 * u[0] + 18.0 * u[1] - 24.0 * u[2] + 14.0 * u[3] - 3.0 * u[4]) * c;
    out[n] = (5.0 * u[n] - 18.0 * u[n - 1] + 24.0 * u[n - 2] - 14.0 * u[n - 3] + 3.0 * u[n - 4]) * c;
    let ghost_left = left_ghost([u[0], u[1], u[2], u[3], u[4]]);
    let ghost_right = u[n - 1];
    let at = |k: isize| -> f64 {
        if k < 0 {
            ghost_left
        } else if k as usize > n {
            ghost_right
        } else {
            u[k as usize]
        }
    };
    for i in 1..n {
        let k = i as isize;
        out[i] = (at(k + 2) - 2.0 * at(k + 1) + 2.0 * at(k - 1) - at(k - 2)) * c;
    }
}

/// First x-derivative. Central in the interior, one-sided at `x = 0`,
/// and zero at `x = L` where `u_x(L) = 0` is imposed.
pub fn d_x(f: &Field) -> Field {
    along_x(f, |u, o, h| dx_line(u, o, h, false))
}

/// First x-derivative with a one-sided closure at `x = L` as well, for
/// fields that do not satisfy `u_x(L) = 0`.
pub fn d_x_open(f: &Field) -> Field {
    along_x(f, |u, o, h| dx_line(u, o, h, true))
}

pub fn d_y(f: &Field) -> Field {
    along_y(f, first_line)
}

pub fn d_xx(f: &Field) -> Field {
    along_x(f, second_line)
}

pub fn d_yy(f: &Field) -> Field {
    along_y(f, second_line)
}

/// Third x-derivative with the ghost-node closures described in the
/// module docs.
pub fn d_xxx(f: &Field) -> Field {
    along_x(f, dxxx_line)
}

/// `d_x(d_yy f)`.
pub fn d_xyy(f: &Field) -> Field {
    d_x(&d_yy(f))
}

/// Mixed derivative `d_y(d_x_open f)`.
pub fn d_xy(f: &Field) -> Field {
    d_y(&d_x_open(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weight {
    Unit,
    OnePlusX,
}

/// Trapezoidal quadrature of `w(x) f g` over the rectangle.
pub fn inner(f: &Field, g: &Field, weight: Weight) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    Ok(inner_unchecked(f, g, weight))
}

pub(crate) fn inner_unchecked(f: &Field, g: &Field, weight: Weight) -> f64 {
    let grid = &f.grid;
    let mut total = 0.0;
    for j in 0..=grid.ny {
        let mut row = 0.0;
        for i in 0..=grid.nx {
            let w = match weight {
                Weight::Unit => 1.0,
                Weight::OnePlusX => 1.0 + grid.x(i),
            };
            let k = grid.idx(i, j);
            row += grid.wx(i) * w * f.values[k] * g.values[k];
        }
        total += grid.wy(j) * row;
    }
    total
}

/// `||f||^2` in the discrete L2 inner product.
pub fn norm_sq(f: &Field) -> f64 {
    inner_unchecked(f, f, Weight::Unit)
}

/// Discrete `||f||_{L^q}^q` by trapezoidal quadrature.
pub fn lq_pow(f: &Field, q: f64) -> f64 {
    let g = &f.grid;
    let mut total = 0.0;
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            total += g.wx(i) * g.wy(j) * f.at(i, j).abs().powf(q);
        }
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    /// `x = 0`
    Left,
    /// `x = L`
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceQuantity {
    Value,
    Dx,
    Dxy,
    Dxx,
}

/// Profile in y of the requested quantity on an x-edge, using one-sided
/// second-order stencils normal to the edge.
pub fn edge_profile(f: &Field, edge: Edge, quantity: TraceQuantity) -> Vec<f64> {
    let g = &f.grid;
    let h = g.dx;
    let n = g.nx;
    let col = |j: usize, k: usize| -> f64 {
        // k-th node inward from the edge
        match edge {
            Edge::Left => f.at(k, j),
            Edge::Right => f.at(n - k, j),
        }
    };
    let sign = match edge {
        Edge::Left => 1.0,
        Edge::Right => -1.0,
    };
    let dx_at = |j: usize| sign * first_fwd(col(j, 0), col(j, 1), col(j, 2), h);
    match quantity {
        TraceQuantity::Value => (0..=g.ny).map(|j| col(j, 0)).collect(),
        TraceQuantity::Dx => (0..=g.ny).map(dx_at).collect(),
        TraceQuantity::Dxx => (0..=g.ny)
            .map(|j| second_onesided(col(j, 0), col(j, 1), col(j, 2), col(j, 3), h))
            .collect(),
        TraceQuantity::Dxy => {
            let ux: Vec<f64> = (0..=g.ny).map(dx_at).collect();
            let mut out = vec![0.0; ux.len()];
            first_line(&ux, &mut out, g.dy);
            out
        }
    }
}

/// `int_{-B}^{B} q(edge, y)^2 dy` by the trapezoidal rule.
pub fn trace_integral(f: &Field, edge: Edge, quantity: TraceQuantity) -> f64 {
    let g = &f.grid;
    edge_profile(f, edge, quantity)
        .iter()
        .enumerate()
        .map(|(j, v)| g.wy(j) * v * v)
        .sum()
}
