//! Fixed-point construction of the local solution through the Duhamel map
//!
//! ```text
//! Phi(v)(t) = S(t) u0 - int_0^t S(t - s) N(v(s)) ds
//! ```
//!
//! on the time grid `t_k = k dt`. The integral uses the left rectangle
//! rule, evaluated by the recursion `I_k = S(dt)(I_{k-1} + dt N(v_{k-1}))`,
//! which equals `sum_{m<k} dt S(t_k - t_m) N(v_m)` exactly.

use serde::{Deserialize, Serialize};

use super::linear::{self, step_count, Propagator};
use super::{nonlinear_interior, SimConfig};
use crate::diagnostics::xt_norm;
use crate::error::{Error, Result};
use crate::grid::Field;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub iterations: usize,
    /// Time-space norm of `v^{n+1} - v^n`, one entry per iteration.
    pub successive_diffs: Vec<f64>,
    /// `diffs[n] / diffs[n - 1]`; one shorter than `successive_diffs`.
    pub contraction_factors: Vec<f64>,
    pub converged: bool,
    /// Time-space norm of the last iterate.
    pub final_radius: f64,
    pub dt: f64,
    pub steps: usize,
}

fn duhamel_map(lin: &[Field], v: &[Field], prop: &Propagator, power: u32) -> Result<Vec<Field>> {
    let g = *prop.grid();
    let dt = prop.dt();
    let mut out = Vec::with_capacity(lin.len());
    out.push(lin[0].clone());
    let mut integral = Field::zeros(g);
    for k in 1..lin.len() {
        let nl = linear::scatter(g, &nonlinear_interior(&v[k - 1], power));
        integral = prop.step(&integral.axpy(dt, &nl)?)?;
        out.push(lin[k].sub(&integral)?);
    }
    Ok(out)
}

fn path_difference(a: &[Field], b: &[Field]) -> Result<Vec<Field>> {
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}

/// Iterates the Duhamel map from `v^0(t) = S(t) u0` on `[0, t_loc]`.
///
/// Stops once the successive difference falls below `picard_tol` times
/// the norm of the new iterate. Running out of iterations is reported
/// through `converged = false`, not as an error.
pub fn picard_local(u0: &Field, t_loc: f64, cfg: &SimConfig) -> Result<(Field, PicardReport)> {
    if !(t_loc > 0.0 && t_loc.is_finite()) {
        return Err(Error::Usage(format!("local time must be positive, got {t_loc}")));
    }
    if !u0.is_conformant() {
        return Err(Error::Precondition("initial field must vanish on the boundary".into()));
    }
    if !(cfg.dt > 0.0) || cfg.picard_max_iter == 0 {
        return Err(Error::Config("picard iteration needs dt > 0 and picard_max_iter >= 1".into()));
    }
    let steps = step_count(t_loc, cfg.dt).max(1);
    let dt = t_loc / steps as f64;
    let prop = Propagator::new(*u0.grid(), dt, cfg.linear_solve_tol)?;

    let mut lin = Vec::with_capacity(steps + 1);
    lin.push(u0.clone());
    for k in 1..=steps {
        let next = prop.step(&lin[k - 1])?;
        lin.push(next);
    }

    let mut current = lin.clone();
    let mut diffs = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.picard_max_iter {
        let next = duhamel_map(&lin, &current, &prop, cfg.nonlinearity_power)?;
        let diff = xt_norm(&path_difference(&next, &current)?, dt);
        let size = xt_norm(&next, dt);
        diffs.push(diff);
        current = next;
        if diff <= cfg.picard_tol * size {
            converged = true;
            break;
        }
    }
    let contraction_factors = diffs.windows(2).map(|w| w[1] / w[0]).collect();
    let report = PicardReport {
        iterations: diffs.len(),
        successive_diffs: diffs,
        contraction_factors,
        converged,
        final_radius: xt_norm(&current, dt),
        dt,
        steps,
    };
    Ok((current.pop().expect("non-empty path"), report))
}
