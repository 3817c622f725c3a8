//! The linear operator `A = d_x + d_xxx + d_xyy` restricted to interior
//! unknowns, and its Crank-Nicolson propagator.
//!
//! Boundary values are zero and never stored. Interior node `(i, j)` maps
//! to unknown `(j - 1)(nx - 1) + (i - 1)`, which gives a band matrix with
//! `nx` sub- and super-diagonals.

use crate::banded::{BandMatrix, BandedLu};
use crate::error::{Error, Result};
use crate::grid::{self, Field, RectGrid};

/// Default relative residual tolerance for the implicit solve.
pub const LINEAR_SOLVE_TOL: f64 = 1e-10;

/// `d_x f + d_xxx f + d_xyy f` on the full grid.
pub fn apply_a(f: &Field) -> Field {
    let mut out = grid::d_x(f);
    let dxxx = grid::d_xxx(f);
    let dxyy = grid::d_xyy(f);
    for ((o, a), b) in out.values_mut().iter_mut().zip(dxxx.values()).zip(dxyy.values()) {
        *o += a + b;
    }
    out
}

pub(crate) fn unknowns(g: &RectGrid) -> usize {
    (g.nx() - 1) * (g.ny() - 1)
}

pub(crate) fn gather(f: &Field) -> Vec<f64> {
    let g = f.grid();
    let mut v = Vec::with_capacity(unknowns(g));
    for j in 1..g.ny() {
        for i in 1..g.nx() {
            v.push(f.at(i, j));
        }
    }
    v
}

/// Inverse of [`gather`]; edge values are set to zero.
pub(crate) fn scatter(g: RectGrid, v: &[f64]) -> Field {
    let mut f = Field::zeros(g);
    let mut k = 0;
    for j in 1..g.ny() {
        for i in 1..g.nx() {
            f.set(i, j, v[k]);
            k += 1;
        }
    }
    f
}

/// Band matrix `scale * A_h + shift * I` over the interior unknowns.
fn assemble(g: &RectGrid, scale: f64, shift: f64) -> Result<BandMatrix> {
    let (nx, ny) = (g.nx(), g.ny());
    let m = nx - 1;
    let n = unknowns(g);
    let mut a = BandMatrix::zeros(n, nx, nx);
    let (hx, hy) = (g.dx(), g.dy());
    let c1 = scale / (2.0 * hx);
    let c3 = scale / (2.0 * hx * hx * hx);
    let cy = 1.0 / (hy * hy);
    let interior = |i: isize, j: isize| i >= 1 && i < nx as isize && j >= 1 && j < ny as isize;
    let unknown = |i: isize, j: isize| (j as usize - 1) * m + (i as usize - 1);
    for j in 1..ny as isize {
        for i in 1..nx as isize {
            let r = unknown(i, j);
            a.add(r, r, shift)?;
            let mut put = |ii: isize, jj: isize, v: f64| -> Result<()> {
                if interior(ii, jj) {
                    a.add(r, unknown(ii, jj), v)?;
                }
                Ok(())
            };
            // d_x and d_x d_yy
            for (di, s) in [(1, c1), (-1, -c1)] {
                put(i + di, j, s)?;
                for (dj, w) in [(-1, cy), (0, -2.0 * cy), (1, cy)] {
                    put(i + di, j + dj, s * w)?;
                }
            }
            // d_xxx with the reflected right ghost and extrapolated left ghost
            for (di, w) in [(2, 1.0), (1, -2.0), (-1, 2.0), (-2, -1.0)] {
                let k = i + di;
                if k == nx as isize + 1 {
                    put(nx as isize - 1, j, w * c3)?;
                } else if k == -1 {
                    // u(-h) = 5u0 - 10u1 + 10u2 - 5u3 + u4 with u0 = 0
                    for (kk, cc) in [(1, -10.0), (2, 10.0), (3, -5.0), (4, 1.0)] {
                        put(kk, j, w * cc * c3)?;
                    }
                } else {
                    put(k, j, w * c3)?;
                }
            }
        }
    }
    Ok(a)
}

/// One Crank-Nicolson step of `u_t + A u = 0`:
/// `(I + dt/2 A) u_new = (I - dt/2 A) u_old`.
///
/// The factorization is built once and is read-only afterwards, so a
/// propagator can be shared between threads.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: RectGrid,
    dt: f64,
    tol: f64,
    implicit: BandMatrix,
    explicit: BandMatrix,
    lu: BandedLu,
}

impl Propagator {
    pub fn new(grid: RectGrid, dt: f64, tol: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Usage(format!("time step must be positive, got {dt}")));
        }
        let implicit = assemble(&grid, 0.5 * dt, 1.0)?;
        let explicit = assemble(&grid, -0.5 * dt, 1.0)?;
        let lu = implicit.clone().factor()?;
        Ok(Self {
            grid,
            dt,
            tol,
            implicit,
            explicit,
            lu,
        })
    }

    pub fn grid(&self) -> &RectGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `(I - dt/2 A) v` on interior unknowns.
    pub(crate) fn explicit_half(&self, v: &[f64]) -> Vec<f64> {
        self.explicit.matvec(v)
    }

    /// Solves `(I + dt/2 A) x = rhs` with one step of iterative refinement
    /// if the first residual misses the tolerance.
    pub(crate) fn implicit_solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let scale = rhs.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut x = self.lu.solve(rhs);
        if scale == 0.0 {
            return Ok(x);
        }
        for attempt in 0..2 {
            let ax = self.implicit.matvec(&x);
            let r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let rel = r.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / scale;
            if rel <= self.tol {
                return Ok(x);
            }
            if attempt == 1 {
                return Err(Error::LinearSolve(format!(
                    "relative residual {rel:e} above tolerance {:e}",
                    self.tol
                )));
            }
            let dx = self.lu.solve(&r);
            for (xi, d) in x.iter_mut().zip(dx) {
                *xi += d;
            }
        }
        unreachable!()
    }

    /// One step applied to a full field; edge values are ignored.
    pub fn step(&self, u: &Field) -> Result<Field> {
        self.grid.check_same(u.grid())?;
        let rhs = self.explicit_half(&gather(u));
        Ok(scatter(self.grid, &self.implicit_solve(&rhs)?))
    }

    pub fn advance(&self, u: &Field, steps: usize) -> Result<Field> {
        let mut v = u.clone();
        for _ in 0..steps {
            v = self.step(&v)?;
        }
        Ok(v)
    }
}

/// Number of equal steps of size at most `dt` that cover `[0, t]`.
pub fn step_count(t: f64, dt: f64) -> usize {
    let n = t / dt;
    let r = n.round();
    if (n - r).abs() < 1e-9 * n.max(1.0) {
        r as usize
    } else {
        n.ceil() as usize
    }
}

/// `S(t) u0` by Crank-Nicolson steps of size at most `dt` (shrunk so that
/// they divide `t` evenly).
pub fn semigroup_apply(u0: &Field, t: f64, dt: f64) -> Result<Field> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Usage(format!("time must be nonnegative, got {t}")));
    }
    if !(dt > 0.0) {
        return Err(Error::Usage(format!("time step must be positive, got {dt}")));
    }
    let steps = step_count(t, dt);
    if steps == 0 {
        return Ok(u0.clone());
    }
    let p = Propagator::new(*u0.grid(), t / steps as f64, LINEAR_SOLVE_TOL)?;
    p.advance(u0, steps)
}
