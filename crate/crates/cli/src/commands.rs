use serde::Serialize;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mzk_core::constants::{self, compute_a2, ConstantsReport};
use mzk_core::diagnostics::{self, check_decay_bounds, default_window, fit_decay, BoundCheck, DecayFit};
use mzk_core::functional::{self, random_sweep, Direction, SweepSummary};
use mzk_core::solver::mms::{convergence_ladder, ConvergenceStudy};
use mzk_core::solver::{solve_with, SolveOptions, Trajectory};
use mzk_core::{checkpoint, grid, Error, Field, Result};

use crate::config::Config;
use crate::manifest::{Outputs, RunManifest};

/// Relative tolerance on the discrete Steklov constants.
pub const STEKLOV_TOL: f64 = 0.01;

pub struct Context {
    pub config: Config,
    pub out: PathBuf,
    pub seed: u64,
    pub quiet: bool,
}

/// A command that ran to completion either confirmed what it checks or
/// found a hypothesis or verification target unmet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Unmet,
}

impl Outcome {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Ok
        } else {
            Outcome::Unmet
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::Unmet => 3,
        }
    }
}

/// 1 for configuration and usage problems, 2 when the numerics break
/// down, 3 when the data fail the hypotheses.
pub fn error_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } | Error::LinearSolve(_) | Error::NoConvergence { .. } => 2,
        Error::InadmissibleDomain { .. } | Error::Precondition(_) => 3,
        _ => 1,
    }
}

impl Context {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn prepare(&self) -> Result<()> {
        fs::create_dir_all(&self.out)?;
        Ok(())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let path = self.path(name);
        write_json(&path, value)?;
        Ok(path)
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// What is known about the constants when the full report cannot be
/// built (the data are too large for the constant `C_u0` to exist).
#[derive(Debug, Clone, Serialize)]
struct PartialConstants {
    #[serde(rename = "L")]
    l: f64,
    #[serde(rename = "B")]
    b: f64,
    #[serde(rename = "A2")]
    a2: f64,
    u0_l2_sq: f64,
    admissible: bool,
    unmet: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
enum ConstantsDoc {
    Full(Box<ConstantsReport>),
    Partial(PartialConstants),
}

impl ConstantsDoc {
    fn admissible(&self) -> bool {
        match self {
            ConstantsDoc::Full(r) => r.admissible,
            ConstantsDoc::Partial(p) => p.admissible,
        }
    }

    fn report(&self) -> Option<&ConstantsReport> {
        match self {
            ConstantsDoc::Full(r) => Some(r),
            ConstantsDoc::Partial(_) => None,
        }
    }

    fn unmet(&self) -> &[String] {
        match self {
            ConstantsDoc::Full(r) => &r.unmet,
            ConstantsDoc::Partial(p) => &p.unmet,
        }
    }
}

fn constants_for(u0: &Field) -> Result<ConstantsDoc> {
    match constants::evaluate(u0) {
        Ok(r) => Ok(ConstantsDoc::Full(Box::new(r))),
        Err(Error::Precondition(msg)) => {
            let g = u0.grid();
            Ok(ConstantsDoc::Partial(PartialConstants {
                l: g.l(),
                b: g.b(),
                a2: compute_a2(g.l(), g.b()),
                u0_l2_sq: grid::norm_sq(u0),
                admissible: false,
                unmet: vec![msg],
            }))
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Serialize)]
struct BoundsDoc {
    hypotheses_met: bool,
    unmet: Vec<String>,
    bounds: Vec<BoundCheck>,
    /// Fit of `(1+x, u^2)(t)`; absent when the series is not positive.
    weighted_l2_fit: Option<DecayFit>,
}

fn weighted_fit(traj: &Trajectory, window: (f64, f64)) -> Option<DecayFit> {
    let series: Vec<(f64, f64)> = traj.snapshots.iter().map(|s| (s.t, s.w_l2_sq)).collect();
    fit_decay(&series, window).ok()
}

pub fn simulate(ctx: &Context) -> Result<Outcome> {
    let c = &ctx.config;
    let u0 = c.initial_field(c.initial.amplitude)?;
    let sim = c.sim_config(&u0)?;
    let consts = constants_for(&u0)?;
    let traj = solve_with(
        &sim,
        &u0,
        &SolveOptions {
            sample_every: c.time.sample_every,
            store_every: None,
            report: consts.report().cloned(),
        },
    )?;
    let bounds = match consts.report() {
        Some(r) => check_decay_bounds(&traj.snapshots, r)?,
        None => Vec::new(),
    };
    let window = c.decay.window.unwrap_or_else(|| default_window(sim.t_final));
    let doc = BoundsDoc {
        hypotheses_met: consts.admissible(),
        unmet: consts.unmet().to_vec(),
        bounds,
        weighted_l2_fit: weighted_fit(&traj, window),
    };

    let outputs = Outputs::standard();
    let manifest = RunManifest::new(sim.clone(), ctx.seed, outputs.clone());
    debug_assert!(manifest.outputs_distinct());
    ctx.prepare()?;
    let mut csv = Vec::new();
    diagnostics::write_csv(&traj.snapshots, &mut csv)?;
    fs::write(ctx.path(&outputs.snapshots_csv), csv)?;
    ctx.write_json(&outputs.constants_json, &consts)?;
    ctx.write_json(&outputs.bounds_json, &doc)?;
    checkpoint::write(ctx.path(&outputs.checkpoint), &traj.final_field, sim.t_final)?;
    ctx.write_json("manifest.json", &manifest)?;

    ctx.say(format!(
        "run {}: {} samples to T = {} (dt = {:e}), ||u||^2 {:e} -> {:e}",
        manifest.run_id,
        traj.snapshots.len(),
        sim.t_final,
        traj.dt,
        traj.snapshots[0].l2_sq,
        traj.snapshots.last().map_or(0.0, |s| s.l2_sq)
    ));
    if !doc.hypotheses_met {
        ctx.say(format!("hypotheses unmet: {}", doc.unmet.join("; ")));
    }
    for b in &doc.bounds {
        ctx.say(format!(
            "{:<20} {:<5} margin {:.3e} (t > 0: {:.3e})",
            b.name,
            if b.holds { "holds" } else { "FAILS" },
            b.margin,
            b.margin_after_start
        ));
    }
    Ok(Outcome::Ok)
}

pub fn check_constants(ctx: &Context) -> Result<Outcome> {
    let c = &ctx.config;
    let u0 = c.initial_field(c.initial.amplitude)?;
    let doc = constants_for(&u0)?;
    ctx.prepare()?;
    ctx.write_json("constants.json", &doc)?;
    if !ctx.quiet {
        println!("{}", serde_json::to_string_pretty(&doc).map_err(|e| Error::Format(e.to_string()))?);
    }
    Ok(Outcome::from_pass(doc.admissible()))
}

#[derive(Debug, Clone, Serialize)]
struct SteklovRow {
    direction: Direction,
    value: f64,
    exact: f64,
    rel_error: f64,
    iterations: usize,
    holds: bool,
}

#[derive(Debug, Clone, Serialize)]
struct InequalityDoc {
    seed: u64,
    steklov: Vec<SteklovRow>,
    sweep: SweepSummary,
}

pub fn verify_inequalities(ctx: &Context) -> Result<Outcome> {
    let c = &ctx.config;
    let f = &c.functional;
    let g = c.grid()?;
    let mut steklov = Vec::new();
    for (direction, exact) in [
        (Direction::X, g.l() * g.l() / (PI * PI)),
        (Direction::Y, 4.0 * g.b() * g.b() / (PI * PI)),
    ] {
        let r = functional::steklov_constant(&g, direction)?;
        let rel_error = (r.value - exact).abs() / exact;
        steklov.push(SteklovRow {
            direction,
            value: r.value,
            exact,
            rel_error,
            iterations: r.iterations,
            holds: rel_error < STEKLOV_TOL,
        });
    }
    let sweep = random_sweep(&g, f.fields, f.max_modes, &f.powers, ctx.seed, f.nirenberg_slack, f.sup_slack)?;
    let pass = steklov.iter().all(|s| s.holds) && sweep.all_hold();
    let doc = InequalityDoc {
        seed: ctx.seed,
        steklov,
        sweep,
    };
    ctx.prepare()?;
    ctx.write_json("inequalities.json", &doc)?;
    for s in &doc.steklov {
        ctx.say(format!(
            "steklov {:?}: {:.6} vs {:.6} (rel {:.2e})",
            s.direction, s.value, s.exact, s.rel_error
        ));
    }
    ctx.say(format!(
        "sweep: {} fields, {} checks, {} failures, worst ratios {:.4} (Nirenberg) {:.4} (sup)",
        doc.sweep.fields, doc.sweep.checks, doc.sweep.failures, doc.sweep.worst_nirenberg_ratio, doc.sweep.worst_sup_ratio
    ));
    Ok(Outcome::from_pass(pass))
}

fn write_ladder_csv(studies: &[ConvergenceStudy], mut out: impl Write) -> Result<()> {
    writeln!(out, "power,n,dx,dt,max_error,order")?;
    for s in studies {
        for r in &s.rows {
            let order = r.order.map_or(String::new(), |o| format!("{o:e}"));
            writeln!(out, "{},{},{:e},{:e},{:e},{}", s.power, r.n, r.dx, r.dt, r.max_error, order)?;
        }
        writeln!(out, "{},fit,,,,{:e}", s.power, s.observed_order)?;
    }
    Ok(())
}

pub fn convergence(ctx: &Context) -> Result<Outcome> {
    let c = &ctx.config;
    let k = &c.convergence;
    if k.powers.is_empty() {
        return Err(Error::Config("convergence.powers is empty".into()));
    }
    let studies = k
        .powers
        .iter()
        .map(|&p| convergence_ladder(c.domain.l, c.domain.b, &k.levels, p, k.t_final, k.dt_factor, c.model.scheme))
        .collect::<Result<Vec<_>>>()?;
    ctx.prepare()?;
    let mut csv = Vec::new();
    write_ladder_csv(&studies, &mut csv)?;
    fs::write(ctx.path("convergence.csv"), csv)?;
    for s in &studies {
        ctx.say(format!("power {}: observed order {:.3}", s.power, s.observed_order));
    }
    Ok(Outcome::from_pass(studies.iter().all(|s| s.observed_order >= k.min_order)))
}

#[derive(Debug, Clone, Serialize)]
struct DecayRun {
    amplitude: f64,
    hypotheses_met: bool,
    unmet: Vec<String>,
    /// Set when the run blew up; only a failure for admissible data.
    divergence: Option<String>,
    fit: Option<DecayFit>,
    bounds: Vec<BoundCheck>,
    /// The weighted L2 bound holds at every sample.
    weighted_l2_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
struct DecayDoc {
    /// Absent when the domain itself is inadmissible.
    gamma0: Option<f64>,
    window: (f64, f64),
    runs: Vec<DecayRun>,
}

pub fn decay_study(ctx: &Context) -> Result<Outcome> {
    let c = &ctx.config;
    let amplitudes = match &c.decay.amplitudes {
        Some(a) => a.clone(),
        None => {
            let a = c.initial.amplitude;
            vec![a, 0.5 * a, 0.25 * a]
        }
    };
    if amplitudes.is_empty() {
        return Err(Error::Config("decay.amplitudes is empty".into()));
    }
    let window = c.decay.window.unwrap_or_else(|| default_window(c.time.t_final));
    let mut runs = Vec::with_capacity(amplitudes.len());
    for &a in &amplitudes {
        let u0 = c.initial_field(a)?;
        let sim = c.sim_config(&u0)?;
        let consts = constants_for(&u0)?;
        let ok = consts.admissible();
        let options = SolveOptions {
            sample_every: c.time.sample_every,
            store_every: None,
            report: consts.report().cloned(),
        };
        let mut run = DecayRun {
            amplitude: a,
            hypotheses_met: ok,
            unmet: consts.unmet().to_vec(),
            divergence: None,
            fit: None,
            bounds: Vec::new(),
            weighted_l2_holds: false,
        };
        match solve_with(&sim, &u0, &options) {
            Ok(traj) => {
                run.fit = weighted_fit(&traj, window);
                if let Some(r) = consts.report() {
                    run.bounds = check_decay_bounds(&traj.snapshots, r)?;
                }
                run.weighted_l2_holds = run.bounds.iter().any(|b| b.name == "weighted_l2_decay" && b.holds);
            }
            Err(e @ Error::Divergence { .. }) if !ok => run.divergence = Some(e.to_string()),
            Err(e) => return Err(e),
        }
        ctx.say(format!(
            "amplitude {a:e}: {}, weighted L2 bound {}, fitted rate {}",
            if ok { "admissible" } else { "hypotheses unmet" },
            if run.weighted_l2_holds { "holds" } else { "not confirmed" },
            run.fit.map_or("n/a".into(), |f| format!("{:.4}", f.gamma_fit))
        ));
        runs.push(run);
    }
    let gamma0 = constants::decay_rates(c.domain.l, c.domain.b).ok().map(|r| r.gamma0);
    let pass = runs.iter().filter(|r| r.hypotheses_met).all(|r| r.weighted_l2_holds);
    ctx.prepare()?;
    ctx.write_json("decay.json", &DecayDoc { gamma0, window, runs })?;
    Ok(Outcome::from_pass(pass))
}
