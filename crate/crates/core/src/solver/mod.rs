//! Time evolution of the boundary value problem
//!
//! ```text
//! u_t + u_x + u^p u_x + u_xxx + u_xyy = f   on (0, L) x (-B, B)
//! u = 0 on the boundary,  u_x(L, y) = 0
//! ```
//!
//! The linear part is advanced by Crank-Nicolson with a band LU that is
//! factored once per run. The nonlinear part is explicit: second-order
//! Adams-Bashforth after a Heun startup step, or Heun throughout.
//!
//! The nonlinearity is discretized in the split form
//! `N(u) = [D(u^{p+1}) + u^p D u] / (p + 2)` with the central difference
//! `D`, for which `sum u N(u) = 0` exactly at interior nodes.

pub mod linear;
pub mod mms;
pub mod picard;

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::{self, ConstantsReport};
use crate::diagnostics::{self, EnergySnapshot};
use crate::error::{Error, Result};
use crate::grid::{self, Field, RectGrid};

pub use linear::{apply_a, semigroup_apply, step_count, Propagator, LINEAR_SOLVE_TOL};
pub use picard::{picard_local, PicardReport};

/// Magnitude beyond which a run is declared divergent.
pub const BLOW_UP_GUARD: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Crank-Nicolson plus Adams-Bashforth 2 for the nonlinear term.
    #[default]
    ImexCnAb2,
    /// Crank-Nicolson plus a Heun predictor-corrector every step.
    ImexCnRk2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Forcing {
    #[default]
    None,
    /// Source that makes [`mms::exact`] an exact solution.
    Manufactured,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub nonlinearity_power: u32,
    pub scheme: Scheme,
    pub linear_solve_tol: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub forcing: Forcing,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            l: 1.0,
            b: 1.0,
            t_final: 1.0,
            nx: 64,
            ny: 64,
            dt: 1e-3,
            nonlinearity_power: 2,
            scheme: Scheme::ImexCnAb2,
            linear_solve_tol: LINEAR_SOLVE_TOL,
            picard_tol: 1e-10,
            picard_max_iter: 30,
            forcing: Forcing::None,
        }
    }
}

fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        require(positive(self.l), || format!("L must be positive, got {}", self.l))?;
        require(positive(self.b), || format!("B must be positive, got {}", self.b))?;
        require(positive(self.t_final), || format!("T must be positive, got {}", self.t_final))?;
        require(positive(self.dt), || format!("dt must be positive, got {}", self.dt))?;
        require(self.dt <= self.t_final, || {
            format!("dt = {} must not exceed T = {}", self.dt, self.t_final)
        })?;
        require(self.nonlinearity_power <= 2, || {
            format!("nonlinearity_power must be 0, 1 or 2, got {}", self.nonlinearity_power)
        })?;
        require(positive(self.linear_solve_tol), || {
            format!("linear_solve_tol must be positive, got {}", self.linear_solve_tol)
        })?;
        require(positive(self.picard_tol), || format!("picard_tol must be positive, got {}", self.picard_tol))?;
        require(self.picard_max_iter >= 1, || "picard_max_iter must be at least 1".to_string())?;
        RectGrid::new(self.l, self.b, self.nx, self.ny).map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn grid(&self) -> Result<RectGrid> {
        self.validate()?;
        RectGrid::new(self.l, self.b, self.nx, self.ny)
    }
}

/// Recipes for initial data satisfying the boundary conditions.
#[derive(Debug, Clone, Copy)]
pub enum InitialKind {
    /// `sin^2(pi x / L) sin(pi (y + B) / (2B))`.
    ProductSine,
    /// A smooth bump supported strictly inside the rectangle.
    Bump,
    /// Any profile; edge values are zeroed after sampling, the caller is
    /// responsible for `u_x(L) = 0`.
    Custom(fn(f64, f64) -> f64),
}

pub fn make_initial(kind: InitialKind, amplitude: f64, grid: RectGrid) -> Field {
    let (l, b) = (grid.l(), grid.b());
    match kind {
        InitialKind::ProductSine => Field::from_fn_conformant(grid, |x, y| {
            amplitude * (PI * x / l).sin().powi(2) * (PI * (y + b) / (2.0 * b)).sin()
        }),
        InitialKind::Bump => Field::from_fn_conformant(grid, |x, y| {
            let rx = (x - 0.5 * l) / (0.4 * l);
            let ry = y / (0.8 * b);
            let r2 = rx * rx + ry * ry;
            if r2 < 1.0 {
                amplitude * (1.0 - 1.0 / (1.0 - r2)).exp()
            } else {
                0.0
            }
        }),
        InitialKind::Custom(f) => Field::from_fn_conformant(grid, |x, y| amplitude * f(x, y)),
    }
}

/// `min(dx / 4, dx / (2 max(1, max|u0|^2)))`.
pub fn default_dt(grid: &RectGrid, u0: &Field) -> f64 {
    let m = u0.max_abs();
    (0.25 * grid.dx()).min(0.5 * grid.dx() / (m * m).max(1.0))
}

/// Split-form nonlinearity on interior unknowns (ordering of
/// [`linear::gather`]); empty work for `p = 0`.
fn nonlinear_interior(u: &Field, power: u32) -> Vec<f64> {
    let g = u.grid();
    let n = linear::unknowns(g);
    if power == 0 {
        return vec![0.0; n];
    }
    let p = power as i32;
    let inv2h = 1.0 / (2.0 * g.dx());
    let mut out = Vec::with_capacity(n);
    for j in 1..g.ny() {
        for i in 1..g.nx() {
            let (l, c, r) = (u.at(i - 1, j), u.at(i, j), u.at(i + 1, j));
            let d_pow = (r.powi(p + 1) - l.powi(p + 1)) * inv2h;
            let d_u = (r - l) * inv2h;
            out.push((d_pow + c.powi(p) * d_u) / f64::from(power + 2));
        }
    }
    out
}

fn forcing_interior(cfg: &SimConfig, g: &RectGrid, t: f64) -> Option<Vec<f64>> {
    match cfg.forcing {
        Forcing::None => None,
        Forcing::Manufactured => {
            let mut out = Vec::with_capacity(linear::unknowns(g));
            for j in 1..g.ny() {
                for i in 1..g.nx() {
                    out.push(mms::forcing(g.l(), g.b(), cfg.nonlinearity_power, g.x(i), g.y(j), t));
                }
            }
            Some(out)
        }
    }
}

/// `u_t` given by the equation itself: `f - A u - u^p u_x`, zero on the
/// edges.
pub fn time_derivative(u: &Field, t: f64, cfg: &SimConfig) -> Field {
    let g = *u.grid();
    let au = apply_a(u);
    let ux = grid::d_x(u);
    let p = cfg.nonlinearity_power as i32;
    let mut out = Field::zeros(g);
    for j in 1..g.ny() {
        for i in 1..g.nx() {
            let k = g.idx(i, j);
            let v = u.values()[k];
            let nl = if p == 0 { 0.0 } else { v.powi(p) * ux.values()[k] };
            let f = match cfg.forcing {
                Forcing::None => 0.0,
                Forcing::Manufactured => mms::forcing(g.l(), g.b(), cfg.nonlinearity_power, g.x(i), g.y(j), t),
            };
            out.set(i, j, f - au.values()[k] - nl);
        }
    }
    out
}

/// Stateful time stepper. Holds the factored implicit operator and the
/// previous nonlinear evaluation needed by the two-step rule.
#[derive(Debug, Clone)]
pub struct Integrator {
    cfg: SimConfig,
    propagator: Propagator,
    previous_nl: Option<Vec<f64>>,
}

impl Integrator {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        let g = cfg.grid()?;
        let propagator = Propagator::new(g, cfg.dt, cfg.linear_solve_tol)?;
        Ok(Self {
            cfg: cfg.clone(),
            propagator,
            previous_nl: None,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    /// Forgets the stored history so the next step is a startup step.
    pub fn reset(&mut self) {
        self.previous_nl = None;
    }

    /// Advances `u` from `t` to `t + dt`.
    pub fn step(&mut self, u: &Field, t: f64) -> Result<Field> {
        let g = *self.propagator.grid();
        g.check_same(u.grid())?;
        let dt = self.cfg.dt;
        let power = self.cfg.nonlinearity_power;
        let base = self.propagator.explicit_half(&linear::gather(u));
        let nl = nonlinear_interior(u, power);

        let two_step = matches!(self.cfg.scheme, Scheme::ImexCnAb2) && self.previous_nl.is_some();
        let rhs: Vec<f64> = if two_step {
            let prev = self.previous_nl.as_ref().expect("history present");
            let f_mid = forcing_interior(&self.cfg, &g, t + 0.5 * dt);
            (0..base.len())
                .map(|k| {
                    let f = f_mid.as_ref().map_or(0.0, |f| f[k]);
                    base[k] + dt * (f - 1.5 * nl[k] + 0.5 * prev[k])
                })
                .collect()
        } else {
            let f0 = forcing_interior(&self.cfg, &g, t);
            let f1 = forcing_interior(&self.cfg, &g, t + dt);
            let at = |f: &Option<Vec<f64>>, k: usize| f.as_ref().map_or(0.0, |f| f[k]);
            let predictor_rhs: Vec<f64> = (0..base.len())
                .map(|k| base[k] + dt * (at(&f0, k) - nl[k]))
                .collect();
            let predicted = linear::scatter(g, &self.propagator.implicit_solve(&predictor_rhs)?);
            let nl_pred = nonlinear_interior(&predicted, power);
            (0..base.len())
                .map(|k| base[k] + dt * (0.5 * (at(&f0, k) + at(&f1, k)) - 0.5 * (nl[k] + nl_pred[k])))
                .collect()
        };
        let next = linear::scatter(g, &self.propagator.implicit_solve(&rhs)?);
        self.previous_nl = Some(nl);

        let max_abs = next.max_abs();
        if !next.is_finite() || max_abs > BLOW_UP_GUARD {
            return Err(Error::Divergence { t: t + dt, max_abs });
        }
        Ok(next)
    }
}

/// A single self-starting step.
pub fn step(state: &Field, t: f64, cfg: &SimConfig) -> Result<Field> {
    Integrator::new(cfg)?.step(state, t)
}

#[derive(Debug, Clone)]
pub struct StoredField {
    pub t: f64,
    pub field: Field,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<EnergySnapshot>,
    /// Fields kept at the requested stride (always includes `t = 0`).
    pub fields: Vec<StoredField>,
    pub final_field: Field,
    pub dt: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Record a snapshot every this many steps; the last step is always
    /// recorded. Zero is treated as one.
    pub sample_every: usize,
    /// Keep the field every this many steps.
    pub store_every: Option<usize>,
    /// Constants used for `omega(t)`; computed from `u0` when absent.
    pub report: Option<ConstantsReport>,
}

fn check_initial(cfg: &SimConfig, u0: &Field) -> Result<RectGrid> {
    let g = cfg.grid()?;
    g.check_same(u0.grid())
        .map_err(|_| Error::Config("initial field grid does not match the configuration".into()))?;
    if !u0.is_conformant() {
        return Err(Error::Precondition("initial field must vanish on the boundary".into()));
    }
    Ok(g)
}

/// Runs to `T` and returns `(u(T), T, dt)` with `dt` the step actually used.
pub fn solve_to_end(cfg: &SimConfig, u0: &Field) -> Result<(Field, f64, f64)> {
    check_initial(cfg, u0)?;
    let steps = step_count(cfg.t_final, cfg.dt);
    let mut run = cfg.clone();
    run.dt = cfg.t_final / steps as f64;
    let mut integrator = Integrator::new(&run)?;
    let mut u = u0.clone();
    for n in 0..steps {
        u = integrator.step(&u, n as f64 * run.dt)?;
    }
    Ok((u, run.t_final, run.dt))
}

pub fn solve(cfg: &SimConfig, u0: &Field, sample_every: usize) -> Result<Trajectory> {
    solve_with(
        cfg,
        u0,
        &SolveOptions {
            sample_every,
            ..SolveOptions::default()
        },
    )
}

pub fn solve_with(cfg: &SimConfig, u0: &Field, options: &SolveOptions) -> Result<Trajectory> {
    check_initial(cfg, u0)?;
    let steps = step_count(cfg.t_final, cfg.dt);
    let mut run = cfg.clone();
    run.dt = cfg.t_final / steps as f64;
    let dt = run.dt;
    let every = options.sample_every.max(1);
    let report = match &options.report {
        Some(r) => Some(r.clone()),
        None => constants::evaluate(u0).ok(),
    };

    let mut integrator = Integrator::new(&run)?;
    let ut0 = time_derivative(u0, 0.0, &run);
    let mut times = vec![0.0];
    let mut snapshots = vec![diagnostics::snapshot_with_rate(0.0, u0, &ut0, report.as_ref())];
    let mut fields = vec![StoredField {
        t: 0.0,
        field: u0.clone(),
    }];

    let mut u = u0.clone();
    for n in 1..=steps {
        let prev = u;
        u = integrator.step(&prev, (n - 1) as f64 * dt)?;
        let t = n as f64 * dt;
        if n % every == 0 || n == steps {
            times.push(t);
            snapshots.push(diagnostics::snapshot(t, &u, &prev, dt, report.as_ref())?);
        }
        if let Some(stride) = options.store_every {
            if n % stride.max(1) == 0 {
                fields.push(StoredField { t, field: u.clone() });
            }
        }
    }
    Ok(Trajectory {
        times,
        snapshots,
        fields,
        final_field: u,
        dt,
    })
}
