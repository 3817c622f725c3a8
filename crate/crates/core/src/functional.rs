//! Discrete checks of the Poincare-type (Steklov), Nirenberg and sup-norm
//! inequalities on the rectangle, and the sharp constants behind them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{self, Field, RectGrid};

/// Eigenvalue residual tolerance for the inverse power iteration.
pub const EIGEN_TOL: f64 = 1e-10;
pub const EIGEN_MAX_ITER: usize = 10_000;

pub const NIRENBERG_SLACK: f64 = 0.05;
pub const SUP_BOUND_SLACK: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    X,
    Y,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SharpConstantResult {
    pub value: f64,
    pub resolution: (usize, usize),
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub holds: bool,
    pub slack: f64,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64, slack: f64) -> Self {
        let ratio = if rhs == 0.0 && lhs == 0.0 { 0.0 } else { lhs / rhs };
        Self {
            lhs,
            rhs,
            ratio,
            holds: ratio <= 1.0 + slack,
            slack,
        }
    }
}

/// Solves the tridiagonal system `T x = b` with `T = tridiag(-1, 2, -1) / h^2`.
fn dirichlet_laplacian_solve(b: &[f64], h: f64) -> Vec<f64> {
    let n = b.len();
    let h2 = h * h;
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = 2.0;
    c[0] = -1.0 / denom;
    d[0] = b[0] * h2 / denom;
    for k in 1..n {
        denom = 2.0 + c[k - 1];
        c[k] = -1.0 / denom;
        d[k] = (b[k] * h2 + d[k - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = d[k] - c[k] * x[k + 1];
    }
    x
}

fn dirichlet_laplacian_apply(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|k| {
            let left = if k > 0 { v[k - 1] } else { 0.0 };
            let right = if k + 1 < n { v[k + 1] } else { 0.0 };
            (2.0 * v[k] - left - right) / (h * h)
        })
        .collect()
}

/// Largest discrete ratio `||w||^2 / ||w_d||^2` over functions vanishing
/// on the boundary, i.e. the inverse of the smallest eigenvalue of the 1-D
/// Dirichlet second-difference operator along `direction`.
pub fn steklov_constant(grid: &RectGrid, direction: Direction) -> Result<SharpConstantResult> {
    let (intervals, h) = match direction {
        Direction::X => (grid.nx(), grid.dx()),
        Direction::Y => (grid.ny(), grid.dy()),
    };
    let n = intervals - 1;
    // start from a vector with a nonzero projection on the lowest mode
    let mut v: Vec<f64> = (1..=n).map(|k| 1.0 + 0.1 * (k as f64).sin()).collect();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut residual = f64::INFINITY;
    for iter in 1..=EIGEN_MAX_ITER {
        let w = dirichlet_laplacian_solve(&v, h);
        let nw = norm(&w);
        v = w.iter().map(|a| a / nw).collect();
        let tv = dirichlet_laplacian_apply(&v, h);
        let lambda: f64 = v.iter().zip(&tv).map(|(a, b)| a * b).sum::<f64>();
        residual = tv
            .iter()
            .zip(&v)
            .map(|(t, a)| (t - lambda * a).powi(2))
            .sum::<f64>()
            .sqrt()
            / lambda.abs();
        if residual < EIGEN_TOL {
            return Ok(SharpConstantResult {
                value: 1.0 / lambda,
                resolution: (grid.nx(), grid.ny()),
                iterations: iter,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "inverse power iteration",
        iterations: EIGEN_MAX_ITER,
        residual,
    })
}

/// Discrete Rayleigh ratio `sum w^2 / sum (D+ w)^2` along one direction,
/// for a profile that vanishes at both ends.
pub fn rayleigh_ratio_1d(profile: &[f64], h: f64) -> f64 {
    let num: f64 = profile.iter().map(|v| v * v).sum::<f64>() * h;
    let den: f64 = profile
        .windows(2)
        .map(|w| ((w[1] - w[0]) / h).powi(2))
        .sum::<f64>()
        * h;
    num / den
}

/// The constant `C_{2p} = (p! / sqrt(2)^{p-1})^{1/p}`.
pub fn c2p(p: u32) -> Result<f64> {
    if p == 0 {
        return Err(Error::Usage("c2p requires p >= 1".into()));
    }
    if p > 20 {
        return Err(Error::Usage(format!("c2p: p = {p} exceeds the factorial guard (20)")));
    }
    let fact: f64 = (1..=p).map(f64::from).product();
    let base = fact / 2f64.sqrt().powi(p as i32 - 1);
    Ok(base.powf(1.0 / f64::from(p)))
}

/// `||grad f||^2` with one-sided closures on every edge.
pub fn grad_norm_sq(f: &Field) -> f64 {
    grid::norm_sq(&grid::d_x_open(f)) + grid::norm_sq(&grid::d_y(f))
}

/// `||f||_{L^{2p}} <= C_{2p} ||grad f||^{(p-1)/p} ||f||^{1/p}`.
pub fn check_nirenberg(f: &Field, p: u32, slack: f64) -> Result<InequalityCheck> {
    let c = c2p(p)?;
    if f.max_abs() == 0.0 {
        return Err(Error::Degenerate("Nirenberg ratio is undefined for the zero field".into()));
    }
    let pf = f64::from(p);
    let lhs = grid::lq_pow(f, 2.0 * pf).powf(1.0 / (2.0 * pf));
    let grad = grad_norm_sq(f).sqrt();
    let l2 = grid::norm_sq(f).sqrt();
    let rhs = c * grad.powf((pf - 1.0) / pf) * l2.powf(1.0 / pf);
    Ok(InequalityCheck::new(lhs, rhs, slack))
}

/// `sup f^2 <= ||f||_{H^1}^2 + ||f_xy||^2`.
pub fn check_sup_bound(f: &Field, slack: f64) -> InequalityCheck {
    let lhs = f.max_abs().powi(2);
    let rhs = grid::norm_sq(f) + grad_norm_sq(f) + grid::norm_sq(&grid::d_xy(f));
    InequalityCheck::new(lhs, rhs, slack)
}

/// Random smooth field vanishing on the boundary: a sum of at most
/// `max_modes` sine modes per direction with uniform coefficients.
pub fn band_limited_field(grid: &RectGrid, max_modes: usize, rng: &mut impl Rng) -> Field {
    let mx = rng.gen_range(1..=max_modes);
    let my = rng.gen_range(1..=max_modes);
    let (l, b) = (grid.l(), grid.b());
    let sx: Vec<Vec<f64>> = (1..=mx)
        .map(|m| (0..=grid.nx()).map(|i| (m as f64 * PI * grid.x(i) / l).sin()).collect())
        .collect();
    let sy: Vec<Vec<f64>> = (1..=my)
        .map(|m| {
            (0..=grid.ny())
                .map(|j| (m as f64 * PI * (grid.y(j) + b) / (2.0 * b)).sin())
                .collect()
        })
        .collect();
    let coeffs: Vec<f64> = (0..mx * my).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut field = Field::zeros(*grid);
    for j in 0..=grid.ny() {
        for i in 0..=grid.nx() {
            let mut v = 0.0;
            for (a, row) in sx.iter().enumerate() {
                for (c, col) in sy.iter().enumerate() {
                    v += coeffs[a * my + c] * row[i] * col[j];
                }
            }
            field.set(i, j, v);
        }
    }
    field.conform();
    field
}

/// Deterministic per-task seed derived from a master seed (splitmix64).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One line of the exported inequality log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub holds: bool,
    pub resolution: (usize, usize),
    pub seed: u64,
}

impl InequalityRecord {
    pub fn new(name: impl Into<String>, check: &InequalityCheck, grid: &RectGrid, seed: u64) -> Self {
        Self {
            name: name.into(),
            lhs: check.lhs,
            rhs: check.rhs,
            ratio: check.ratio,
            holds: check.holds,
            resolution: (grid.nx(), grid.ny()),
            seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub fields: usize,
    pub checks: usize,
    pub failures: usize,
    pub worst_nirenberg_ratio: f64,
    pub worst_sup_ratio: f64,
    pub records: Vec<InequalityRecord>,
}

impl SweepSummary {
    pub fn all_hold(&self) -> bool {
        self.failures == 0
    }
}

/// Randomized sweep: `count` band-limited fields, each checked against the
/// Nirenberg inequality for every `p` in `powers` and against the sup
/// bound. Fields are generated in parallel from per-index seeds.
pub fn random_sweep(
    grid: &RectGrid,
    count: usize,
    max_modes: usize,
    powers: &[u32],
    master_seed: u64,
    nirenberg_slack: f64,
    sup_slack: f64,
) -> Result<SweepSummary> {
    let per_field: Vec<Result<Vec<InequalityRecord>>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let seed = derive_seed(master_seed, k as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = band_limited_field(grid, max_modes, &mut rng);
            let mut out = Vec::with_capacity(powers.len() + 1);
            for &p in powers {
                let c = check_nirenberg(&f, p, nirenberg_slack)?;
                out.push(InequalityRecord::new(format!("nirenberg_p{p}"), &c, grid, seed));
            }
            let s = check_sup_bound(&f, sup_slack);
            out.push(InequalityRecord::new("sup_bound", &s, grid, seed));
            Ok(out)
        })
        .collect();
    let mut records = Vec::new();
    for r in per_field {
        records.extend(r?);
    }
    let failures = records.iter().filter(|r| !r.holds).count();
    let worst = |pred: &dyn Fn(&InequalityRecord) -> bool| {
        records
            .iter()
            .filter(|r| pred(r))
            .map(|r| r.ratio)
            .fold(0.0, f64::max)
    };
    Ok(SweepSummary {
        fields: count,
        checks: records.len(),
        failures,
        worst_nirenberg_ratio: worst(&|r| r.name.starts_with("nirenberg")),
        worst_sup_ratio: worst(&|r| r.name == "sup_bound"),
        records,
    })
}
