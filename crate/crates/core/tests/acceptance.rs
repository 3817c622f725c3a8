//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use mzk_core::constants::{self, A2Convention};
use mzk_core::diagnostics::{self, identity_residual_l2};
use mzk_core::functional::{self, Direction, NIRENBERG_SLACK, SUP_BOUND_SLACK};
use mzk_core::solver::{
    self, make_initial, mms, picard_local, solve, solve_to_end, InitialKind, Scheme, SimConfig,
};
use mzk_core::{Field, RectGrid};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sharp_constants() -> Outcome {
    let g = RectGrid::new(1.0, 1.0, 256, 256).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (dir, exact) in [(Direction::X, 1.0 / (PI * PI)), (Direction::Y, 4.0 / (PI * PI))] {
        let start = Instant::now();
        let r = functional::steklov_constant(&g, dir).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let rel = (r.value - exact).abs() / exact;
        pass &= rel < 0.01 && secs < 5.0;
        parts.push(format!("{dir:?}: {:.6} vs {exact:.6} (rel {rel:.1e}, {secs:.2}s)", r.value));
    }
    outcome(pass, parts.join("; "))
}

fn constants_ledger() -> Outcome {
    // independent 30-digit evaluation
    let expect = [
        ("A2", 15.038_107_151_770_2),
        ("threshold", 0.609_471_526_543_065),
        ("gamma0", 7.519_053_575_885_10),
        ("gamma1", 3.084_251_375_340_42),
        ("gamma2", 3.084_251_375_340_42),
    ];
    let rates = constants::decay_rates(1.0, 1.0).unwrap();
    let got = [
        constants::compute_a2(1.0, 1.0),
        constants::smallness_threshold(1.0, 1.0).unwrap(),
        rates.gamma0,
        rates.gamma1,
        rates.gamma2,
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for ((name, e), g) in expect.iter().zip(got) {
        let rel = (g - e).abs() / e;
        pass &= rel < 5e-7;
        parts.push(format!("{name} = {g:.6}"));
    }
    outcome(pass, parts.join(", "))
}

fn energy_run(n: usize, dt: f64, power: u32) -> Vec<diagnostics::EnergySnapshot> {
    let cfg = SimConfig {
        l: 2.0,
        b: 1.0,
        t_final: 0.5,
        nx: n,
        ny: n,
        dt,
        nonlinearity_power: power,
        ..SimConfig::default()
    };
    let u0 = make_initial(InitialKind::ProductSine, 0.004, cfg.grid().unwrap());
    solve(&cfg, &u0, 1).unwrap().snapshots
}

fn dissipation_identity() -> Outcome {
    let ladder = [(32, 2e-3), (64, 1e-3), (128, 5e-4)];
    let linear: Vec<f64> = ladder
        .iter()
        .map(|&(n, dt)| identity_residual_l2(&energy_run(n, dt, 0)).unwrap())
        .collect();
    let orders: Vec<f64> = linear.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let mzk = identity_residual_l2(&energy_run(64, 1e-3, 2)).unwrap();
    let pass = linear[1] < 1e-2 && orders.iter().all(|&o| o >= 1.5) && mzk < 1e-2 && mzk <= 2.0 * linear[1];
    outcome(
        pass,
        format!(
            "linear residuals {:.2e}/{:.2e}/{:.2e}, orders {:.2}/{:.2}; mZK at N=64: {mzk:.2e}",
            linear[0], linear[1], linear[2], orders[0], orders[1]
        ),
    )
}

fn unit_square_cfg(t_final: f64) -> SimConfig {
    SimConfig {
        t_final,
        nx: 64,
        ny: 64,
        dt: 1e-3,
        ..SimConfig::default()
    }
}

fn monotone_l2() -> Outcome {
    let cfg = unit_square_cfg(2.0);
    let g = cfg.grid().unwrap();
    let mut pass = true;
    let mut runs = 0;
    let mut worst = f64::NEG_INFINITY;
    for (kind, amp) in [
        (InitialKind::ProductSine, 0.001),
        (InitialKind::ProductSine, 0.002),
        (InitialKind::ProductSine, 0.004),
        (InitialKind::Bump, 0.004),
    ] {
        let u0 = make_initial(kind, amp, g);
        let report = constants::evaluate(&u0).unwrap();
        if !report.admissible {
            continue;
        }
        runs += 1;
        let traj = solve(&cfg, &u0, 10).unwrap();
        let l0 = traj.snapshots[0].l2_sq;
        for s in &traj.snapshots {
            worst = worst.max(s.l2_sq - l0);
            pass &= s.l2_sq <= l0 + 1e-8;
        }
    }
    pass &= runs >= 3;
    outcome(pass, format!("{runs} admissible runs, max growth of ||u||^2 {worst:.2e}"))
}

fn weighted_decay() -> Outcome {
    let start = Instant::now();
    let cfg = unit_square_cfg(2.0);
    let u0 = make_initial(InitialKind::ProductSine, 0.004, cfg.grid().unwrap());
    let report = constants::evaluate(&u0).unwrap();
    let traj = solve(&cfg, &u0, 5).unwrap();
    let bounds = diagnostics::check_decay_bounds(&traj.snapshots, &report).unwrap();
    let b = bounds.iter().find(|b| b.name == "weighted_l2_decay").unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = report.admissible && b.holds && secs < 60.0;
    outcome(
        pass,
        format!(
            "admissible = {}, {} samples up to t = 2, min margin for t > 0 {:.6}, {secs:.1}s",
            report.admissible,
            traj.snapshots.len(),
            b.margin_after_start
        ),
    )
}

fn contraction() -> Outcome {
    let cfg = SimConfig {
        nx: 32,
        ny: 32,
        dt: 1e-3,
        picard_tol: 1e-10,
        picard_max_iter: 10,
        ..SimConfig::default()
    };
    let g = cfg.grid().unwrap();
    let u0 = make_initial(InitialKind::ProductSine, 0.004, g);
    let admissible = constants::evaluate(&u0).unwrap().admissible;
    let t_loc = 0.05;
    let (fixed, rep) = picard_local(&u0, t_loc, &cfg).unwrap();
    let (_, rep_half) = picard_local(&u0, 0.5 * t_loc, &cfg).unwrap();
    let first = rep.contraction_factors.first().copied().unwrap_or(0.0);
    let first_half = rep_half.contraction_factors.first().copied().unwrap_or(0.0);

    let imex = |dt: f64| {
        let c = SimConfig {
            t_final: t_loc,
            dt,
            ..cfg.clone()
        };
        solve_to_end(&c, &u0).unwrap().0
    };
    let picard = |dt: f64| {
        let c = SimConfig { dt, ..cfg.clone() };
        picard_local(&u0, t_loc, &c).unwrap().0
    };
    let gap = |a: &Field, b: &Field| a.sub(b).unwrap().max_abs();
    let u_imex = imex(cfg.dt);
    let tol = gap(&u_imex, &imex(0.5 * cfg.dt)) + gap(&fixed, &picard(0.5 * cfg.dt));
    let diff = gap(&fixed, &u_imex);

    let pass = admissible
        && first < 0.5
        && rep.converged
        && rep.iterations <= 10
        && first_half < first
        && diff <= 10.0 * tol;
    outcome(
        pass,
        format!(
            "{} iterations, first factor {first:.2e} (halved T: {first_half:.2e}), |picard - imex| {diff:.2e} vs tolerance {tol:.2e}",
            rep.iterations
        ),
    )
}

fn manufactured_convergence() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for power in [0, 2] {
        let study = mms::convergence_ladder(1.0, 1.0, &[32, 64, 128], power, 0.5, 8.0, Scheme::ImexCnAb2).unwrap();
        pass &= study.observed_order >= 1.9;
        parts.push(format!("p={power}: order {:.3}", study.observed_order));
    }
    outcome(pass, parts.join(", "))
}

fn inequality_suite() -> Outcome {
    let start = Instant::now();
    let g = RectGrid::new(1.0, 1.0, 128, 128).unwrap();
    let s = functional::random_sweep(&g, 1000, 6, &[2, 3], 20_240_601, NIRENBERG_SLACK, SUP_BOUND_SLACK).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        s.all_hold() && s.fields == 1000 && secs < 30.0,
        format!(
            "{} checks, {} failures, worst ratios nirenberg {:.3} sup {:.3}, {secs:.1}s",
            s.checks, s.failures, s.worst_nirenberg_ratio, s.worst_sup_ratio
        ),
    )
}

fn degeneracy() -> Outcome {
    let cfg = unit_square_cfg(0.2);
    let g = cfg.grid().unwrap();
    let zero = Field::zeros(g);
    let traj = solve(&cfg, &zero, 1).unwrap();
    let json = |s: &diagnostics::EnergySnapshot| serde_json::to_value(s).unwrap();
    let all_zero_snaps = traj.snapshots.iter().all(|s| {
        json(s)
            .as_object()
            .unwrap()
            .iter()
            .filter(|(k, _)| k.as_str() != "t")
            .all(|(_, v)| v.as_f64() == Some(0.0))
    });
    let all_zero_field = traj.final_field.values().iter().all(|&v| v == 0.0);
    let r = constants::k_constants(&zero, 0.0, A2Convention::Theorem).unwrap();
    let ks_zero = [r.k1, r.k2, r.k3, r.k4, r.k5].iter().all(|&k| k == 0.0);
    let bracket = (1.0 - 0.5 * PI * PI * (5.0 + 0.25)) / 2.0;
    let p_ok = r.p1 == bracket && r.p2 == 0.0 && r.p3 == 0.0 && r.p4 == 0.0;
    let bounds = diagnostics::check_decay_bounds(&traj.snapshots, &r).unwrap();
    let bounds_ok = bounds.iter().all(|b| b.holds && b.margin == 1.0);
    let picard_ok = {
        let (u, rep) = picard_local(&zero, 0.01, &cfg).unwrap();
        rep.iterations == 1 && u.values().iter().all(|&v| v == 0.0)
    };
    let semigroup_ok = solver::semigroup_apply(&zero, 0.1, 0.01).unwrap().values().iter().all(|&v| v == 0.0);
    outcome(
        all_zero_snaps && all_zero_field && ks_zero && p_ok && bounds_ok && picard_ok && semigroup_ok,
        format!(
            "snapshots zero {all_zero_snaps}, field zero {all_zero_field}, K1..K5 zero {ks_zero}, p1 = {:.6}, bounds {} all hold with margin 1: {bounds_ok}",
            r.p1,
            bounds.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("sharp Steklov constants", sharp_constants),
        ("constants ledger", constants_ledger),
        ("dissipation identity", dissipation_identity),
        ("monotone L2 norm", monotone_l2),
        ("weighted L2 decay bound", weighted_decay),
        ("Picard contraction", contraction),
        ("manufactured-solution convergence", manufactured_convergence),
        ("randomized inequality suite", inequality_suite),
        ("zero-data degeneracy", degeneracy),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {name} [{secs:.1}s]: {}",
            k + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if failed == 0 {
        println!("acceptance: all {} criteria pass", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of {} criteria fail", criteria.len());
        ExitCode::FAILURE
    }
}
