//! Manufactured solution `u* = e^{-t} sin^2(pi x / L) cos(pi y / (2B))`
//! and the source that makes it exact, plus the refinement ladder used to
//! measure the observed order of the scheme.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{solve_to_end, Forcing, Scheme, SimConfig};
use crate::error::{Error, Result};
use crate::grid::{Field, RectGrid};

pub fn exact(l: f64, b: f64, x: f64, y: f64, t: f64) -> f64 {
    (-t).exp() * (PI * x / l).sin().powi(2) * (PI * y / (2.0 * b)).cos()
}

/// `u*_t + u*_x + N(u*) + u*_xxx + u*_xyy` with `N(u) = u^p u_x` for
/// `p >= 1` and no nonlinear term for `p = 0`.
pub fn forcing(l: f64, b: f64, power: u32, x: f64, y: f64, t: f64) -> f64 {
    let e = (-t).exp();
    let a = PI / l;
    let k = PI / (2.0 * b);
    let s2 = (2.0 * a * x).sin();
    let c = (k * y).cos();
    let u = e * (a * x).sin().powi(2) * c;
    let ux = e * a * s2 * c;
    let uxxx = -4.0 * e * a.powi(3) * s2 * c;
    let uxyy = -k * k * ux;
    let nl = if power == 0 { 0.0 } else { u.powi(power as i32) * ux };
    -u + ux + nl + uxxx + uxyy
}

pub fn exact_field(grid: RectGrid, t: f64) -> Field {
    let (l, b) = (grid.l(), grid.b());
    Field::from_fn_conformant(grid, |x, y| exact(l, b, x, y, t))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LadderRow {
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub max_error: f64,
    /// Order against the previous row; absent on the first.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub power: u32,
    pub rows: Vec<LadderRow>,
    /// Least-squares slope of `-log(error)` against `log(n)`.
    pub observed_order: f64,
}

/// Largest nodal error over non-boundary nodes.
pub fn interior_max_error(u: &Field, t: f64) -> f64 {
    let g = u.grid();
    let mut m: f64 = 0.0;
    for j in 1..g.ny() {
        for i in 1..g.nx() {
            m = m.max((u.at(i, j) - exact(g.l(), g.b(), g.x(i), g.y(j), t)).abs());
        }
    }
    m
}

/// Runs the manufactured problem on `n x n` grids for every `n` in
/// `levels` with `dt = dt_factor * dx^2` and fits the observed order.
pub fn convergence_ladder(
    l: f64,
    b: f64,
    levels: &[usize],
    power: u32,
    t_final: f64,
    dt_factor: f64,
    scheme: Scheme,
) -> Result<ConvergenceStudy> {
    if levels.len() < 3 {
        return Err(Error::Config(format!(
            "convergence study needs at least 3 resolutions, got {}",
            levels.len()
        )));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("convergence levels must be strictly increasing".into()));
    }
    let results: Vec<Result<(usize, f64, f64, f64)>> = levels
        .par_iter()
        .map(|&n| {
            let g = RectGrid::new(l, b, n, n)?;
            let cfg = SimConfig {
                l,
                b,
                t_final,
                nx: n,
                ny: n,
                dt: (dt_factor * g.dx() * g.dx()).min(t_final),
                nonlinearity_power: power,
                scheme,
                forcing: Forcing::Manufactured,
                ..SimConfig::default()
            };
            let u0 = exact_field(g, 0.0);
            let (u, t, dt) = solve_to_end(&cfg, &u0)?;
            Ok((n, g.dx(), dt, interior_max_error(&u, t)))
        })
        .collect();
    let mut rows: Vec<LadderRow> = Vec::with_capacity(levels.len());
    for r in results {
        let (n, dx, dt, max_error) = r?;
        let order = rows
            .last()
            .map(|p| (p.max_error / max_error).ln() / (n as f64 / p.n as f64).ln());
        rows.push(LadderRow {
            n,
            dx,
            dt,
            max_error,
            order,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| -r.max_error.ln()).collect();
    let observed_order = least_squares_slope(&xs, &ys);
    Ok(ConvergenceStudy {
        power,
        rows,
        observed_order,
    })
}

pub(crate) fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
