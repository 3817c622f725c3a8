//! TOML experiment configuration. Every section and key is optional; the
//! defaults describe a small admissible run on the unit square.

use serde::{Deserialize, Serialize};
use std::path::Path;

use mzk_core::solver::{default_dt, make_initial, Forcing, InitialKind, Scheme, SimConfig, LINEAR_SOLVE_TOL};
use mzk_core::{Error, Field, RectGrid, Result};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub domain: Domain,
    pub grid: GridSection,
    pub time: Time,
    pub model: Model,
    pub initial: Initial,
    pub solver: Solver,
    pub functional: Functional,
    pub convergence: Convergence,
    pub decay: Decay,
    pub output: Output,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Domain {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "B")]
    pub b: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Self { l: 1.0, b: 1.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub nx: usize,
    pub ny: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { nx: 64, ny: 64 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Time {
    #[serde(rename = "T")]
    pub t_final: f64,
    /// When absent, `min(dx/4, dx / (2 max(1, max|u0|^2)))`.
    pub dt: Option<f64>,
    pub sample_every: usize,
}

impl Default for Time {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            dt: None,
            sample_every: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Model {
    pub nonlinearity_power: u32,
    pub scheme: Scheme,
    pub forcing: Forcing,
}

impl Default for Model {
    fn default() -> Self {
        Self {
            nonlinearity_power: 2,
            scheme: Scheme::ImexCnAb2,
            forcing: Forcing::None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialRecipe {
    ProductSine,
    Bump,
    Zero,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Initial {
    pub kind: InitialRecipe,
    pub amplitude: f64,
}

impl Default for Initial {
    fn default() -> Self {
        Self {
            kind: InitialRecipe::ProductSine,
            amplitude: 0.004,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Solver {
    pub linear_solve_tol: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
}

impl Default for Solver {
    fn default() -> Self {
        Self {
            linear_solve_tol: LINEAR_SOLVE_TOL,
            picard_tol: 1e-10,
            picard_max_iter: 30,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Functional {
    pub fields: usize,
    pub max_modes: usize,
    pub powers: Vec<u32>,
    pub nirenberg_slack: f64,
    pub sup_slack: f64,
}

impl Default for Functional {
    fn default() -> Self {
        Self {
            fields: 1000,
            max_modes: 6,
            powers: vec![2, 3],
            nirenberg_slack: mzk_core::functional::NIRENBERG_SLACK,
            sup_slack: mzk_core::functional::SUP_BOUND_SLACK,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Convergence {
    pub levels: Vec<usize>,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// `dt = dt_factor * dx^2` on every level.
    pub dt_factor: f64,
    pub powers: Vec<u32>,
    pub min_order: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            levels: vec![32, 64, 128],
            t_final: 0.5,
            dt_factor: 8.0,
            powers: vec![0, 2],
            min_order: 1.9,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Decay {
    /// Amplitudes to sweep; when absent, `a, a/2, a/4` with `a` the
    /// initial amplitude.
    pub amplitudes: Option<Vec<f64>>,
    /// Fit window; `(0.1 T, 0.9 T)` when absent.
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    pub dir: String,
    pub seed: u64,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            seed: 0,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn grid(&self) -> Result<RectGrid> {
        RectGrid::new(self.domain.l, self.domain.b, self.grid.nx, self.grid.ny)
    }

    pub fn initial_field(&self, amplitude: f64) -> Result<Field> {
        if !amplitude.is_finite() {
            return Err(Error::Config(format!("initial amplitude must be finite, got {amplitude}")));
        }
        let g = self.grid()?;
        Ok(match self.initial.kind {
            InitialRecipe::ProductSine => make_initial(InitialKind::ProductSine, amplitude, g),
            InitialRecipe::Bump => make_initial(InitialKind::Bump, amplitude, g),
            InitialRecipe::Zero => Field::zeros(g),
        })
    }

    /// Solver configuration for initial data `u0`, filling in the default
    /// time step when none is given.
    pub fn sim_config(&self, u0: &Field) -> Result<SimConfig> {
        let g = self.grid()?;
        let cfg = SimConfig {
            l: self.domain.l,
            b: self.domain.b,
            t_final: self.time.t_final,
            nx: self.grid.nx,
            ny: self.grid.ny,
            dt: self.time.dt.unwrap_or_else(|| default_dt(&g, u0).min(self.time.t_final)),
            nonlinearity_power: self.model.nonlinearity_power,
            scheme: self.model.scheme,
            linear_solve_tol: self.solver.linear_solve_tol,
            picard_tol: self.solver.picard_tol,
            picard_max_iter: self.solver.picard_max_iter,
            forcing: self.model.forcing,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
