//! Energy functionals of a solution, residuals of the two multiplier
//! identities, exponential fits and the pointwise decay bounds.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::constants::{self, ConstantsReport};
use crate::error::{Error, Result};
use crate::functional::grad_norm_sq;
use crate::grid::{self, Edge, Field, TraceQuantity, Weight};

/// All energy quantities at one time.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySnapshot {
    pub t: f64,
    pub l2_sq: f64,
    pub w_l2_sq: f64,
    pub grad_sq: f64,
    pub ux_sq: f64,
    pub uy_sq: f64,
    pub grad_uy_sq: f64,
    pub ut_sq: f64,
    pub w_ut_sq: f64,
    pub trace_ux0: f64,
    pub trace_uxy0: f64,
    pub trace_uxxL: f64,
    pub l4_4: f64,
    /// NaN when no constants report is available.
    pub omega_t: f64,
}

pub const CSV_COLUMNS: [&str; 14] = [
    "t",
    "l2_sq",
    "w_l2_sq",
    "grad_sq",
    "ux_sq",
    "uy_sq",
    "grad_uy_sq",
    "ut_sq",
    "w_ut_sq",
    "trace_ux0",
    "trace_uxy0",
    "trace_uxxL",
    "l4_4",
    "omega_t",
];

impl EnergySnapshot {
    fn columns(&self) -> [f64; 14] {
        [
            self.t,
            self.l2_sq,
            self.w_l2_sq,
            self.grad_sq,
            self.ux_sq,
            self.uy_sq,
            self.grad_uy_sq,
            self.ut_sq,
            self.w_ut_sq,
            self.trace_ux0,
            self.trace_uxy0,
            self.trace_uxxL,
            self.l4_4,
            self.omega_t,
        ]
    }
}

/// Snapshot with `u_t` supplied directly.
pub fn snapshot_with_rate(t: f64, u: &Field, ut: &Field, report: Option<&ConstantsReport>) -> EnergySnapshot {
    let ux_sq = grid::norm_sq(&grid::d_x_open(u));
    let uy = grid::d_y(u);
    let uy_sq = grid::norm_sq(&uy);
    let l2_sq = grid::norm_sq(u);
    let ut_sq = grid::norm_sq(ut);
    EnergySnapshot {
        t,
        l2_sq,
        w_l2_sq: grid::inner_unchecked(u, u, Weight::OnePlusX),
        grad_sq: ux_sq + uy_sq,
        ux_sq,
        uy_sq,
        grad_uy_sq: grad_norm_sq(&uy),
        ut_sq,
        w_ut_sq: grid::inner_unchecked(ut, ut, Weight::OnePlusX),
        trace_ux0: grid::trace_integral(u, Edge::Left, TraceQuantity::Dx),
        trace_uxy0: grid::trace_integral(u, Edge::Left, TraceQuantity::Dxy),
        trace_uxxL: grid::trace_integral(u, Edge::Right, TraceQuantity::Dxx),
        l4_4: grid::lq_pow(u, 4.0),
        omega_t: report.map_or(f64::NAN, |r| constants::omega(l2_sq, ut_sq, r)),
    }
}

/// Snapshot with `u_t` approximated by `(u - u_prev) / dt`.
pub fn snapshot(
    t: f64,
    u: &Field,
    u_prev: &Field,
    dt: f64,
    report: Option<&ConstantsReport>,
) -> Result<EnergySnapshot> {
    if !(dt > 0.0) {
        return Err(Error::Usage(format!("dt must be positive, got {dt}")));
    }
    let ut = u.zip_map(u_prev, |a, b| (a - b) / dt)?;
    Ok(snapshot_with_rate(t, u, &ut, report))
}

fn require_segment(s: &[EnergySnapshot]) -> Result<()> {
    if s.len() < 3 {
        return Err(Error::Usage(format!(
            "identity residual needs at least 3 snapshots, got {}",
            s.len()
        )));
    }
    if s.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(Error::Usage("snapshot times must be strictly increasing".into()));
    }
    Ok(())
}

/// Largest `|sum of terms|` over interior samples divided by the largest
/// single term magnitude seen anywhere in the segment.
fn relative_residual(s: &[EnergySnapshot], terms: impl Fn(usize, f64) -> Vec<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in 1..s.len() - 1 {
        let dt = s[k + 1].t - s[k - 1].t;
        let parts = terms(k, dt);
        worst = worst.max(parts.iter().sum::<f64>().abs());
        scale = parts.iter().fold(scale, |m, v| m.max(v.abs()));
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// Residual of `d/dt ||u||^2 + int u_x^2(0, y) dy = 0`, with the time
/// derivative by centered differences.
pub fn identity_residual_l2(s: &[EnergySnapshot]) -> Result<f64> {
    require_segment(s)?;
    Ok(relative_residual(s, |k, span| {
        vec![(s[k + 1].l2_sq - s[k - 1].l2_sq) / span, s[k].trace_ux0]
    }))
}

/// Residual of the `(1 + x) u` multiplier identity
///
/// ```text
/// d/dt (1+x, u^2) + int u_x^2(0, y) dy + ||grad u||^2 + 2||u_x||^2
///     - ||u||^2 - 2/(p+2) ||u||_{p+2}^{p+2} = 0
/// ```
///
/// for `p = 0` (no nonlinear term) and `p = 2`.
pub fn identity_residual_weighted(s: &[EnergySnapshot], power: u32) -> Result<f64> {
    require_segment(s)?;
    let nl_coeff = match power {
        0 => 0.0,
        2 => 0.5,
        p => {
            return Err(Error::Usage(format!(
                "weighted identity is tracked for powers 0 and 2, got {p}"
            )))
        }
    };
    Ok(relative_residual(s, |k, span| {
        let c = &s[k];
        vec![
            (s[k + 1].w_l2_sq - s[k - 1].w_l2_sq) / span,
            c.trace_ux0,
            c.grad_sq,
            2.0 * c.ux_sq,
            -c.l2_sq,
            -nl_coeff * c.l4_4,
        ]
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub gamma_fit: f64,
    /// Intercept of the fitted line, i.e. `log C` in `C e^{-gamma t}`.
    pub intercept: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub samples: usize,
}

/// The window `(0.1 T, 0.9 T)`.
pub fn default_window(t_final: f64) -> (f64, f64) {
    (0.1 * t_final, 0.9 * t_final)
}

/// Least-squares line through `(t, log value)` for samples inside the
/// closed window; `gamma_fit` is minus the slope.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit> {
    let (t1, t2) = window;
    if !(t1 < t2) {
        return Err(Error::Fit(format!("window ({t1}, {t2}) is empty")));
    }
    let picked: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= t1 && t <= t2).collect();
    if picked.len() < 2 {
        return Err(Error::Fit(format!("only {} samples inside the window", picked.len())));
    }
    if let Some(&(t, v)) = picked.iter().find(|&&(_, v)| !(v > 0.0)) {
        return Err(Error::Fit(format!("nonpositive value {v} at t = {t}")));
    }
    let n = picked.len() as f64;
    let ts: Vec<f64> = picked.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = picked.iter().map(|p| p.1.ln()).collect();
    let mt = ts.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let stt: f64 = ts.iter().map(|t| (t - mt).powi(2)).sum();
    if stt == 0.0 {
        return Err(Error::Fit("all samples share one time".into()));
    }
    let sty: f64 = ts.iter().zip(&ys).map(|(t, y)| (t - mt) * (y - my)).sum();
    let slope = sty / stt;
    let intercept = my - slope * mt;
    let ss_res: f64 = ts.iter().zip(&ys).map(|(t, y)| (y - intercept - slope * t).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(DecayFit {
        gamma_fit: -slope,
        intercept,
        window,
        r_squared,
        samples: picked.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub holds: bool,
    /// `min_t (rhs - lhs) / rhs`; 1 when both sides vanish everywhere.
    pub margin: f64,
    /// Time of the smallest margin.
    pub worst_t: f64,
    /// The same minimum over samples with `t > 0`, where the bounds that
    /// are equalities at `t = 0` become informative. Equals `margin` when
    /// there is no such sample.
    pub margin_after_start: f64,
    /// False when the data fail the theorem's hypotheses, in which case
    /// the bound is informative only.
    pub hypotheses_met: bool,
}

fn evaluate_bound(
    name: &str,
    s: &[EnergySnapshot],
    hypotheses_met: bool,
    lhs: impl Fn(&EnergySnapshot) -> f64,
    rhs: impl Fn(&EnergySnapshot) -> f64,
) -> BoundCheck {
    let mut holds = true;
    let mut margin = f64::INFINITY;
    let mut later = f64::INFINITY;
    let mut worst_t = s.first().map_or(0.0, |x| x.t);
    for snap in s {
        let (a, b) = (lhs(snap), rhs(snap));
        holds &= a <= b;
        let m = if b == 0.0 {
            if a == 0.0 {
                1.0
            } else {
                f64::NEG_INFINITY
            }
        } else {
            (b - a) / b
        };
        if m < margin {
            margin = m;
            worst_t = snap.t;
        }
        if snap.t > 0.0 {
            later = later.min(m);
        }
    }
    let margin = if margin == f64::INFINITY { 1.0 } else { margin };
    BoundCheck {
        name: name.to_string(),
        holds,
        margin,
        worst_t,
        margin_after_start: if later == f64::INFINITY { margin } else { later },
        hypotheses_met,
    }
}

/// Evaluates every pointwise decay bound at each sample. The initial
/// quantities are read from the first snapshot, which must be at `t = 0`.
pub fn check_decay_bounds(s: &[EnergySnapshot], report: &ConstantsReport) -> Result<Vec<BoundCheck>> {
    let first = s
        .first()
        .ok_or_else(|| Error::Usage("decay bounds need at least one snapshot".into()))?;
    if first.t != 0.0 {
        return Err(Error::Usage(format!("first snapshot must be at t = 0, got {}", first.t)));
    }
    let ok = report.admissible;
    let lp = 1.0 + report.l;
    let (g0, g1, g2) = (report.gamma0, report.gamma1, report.gamma2);
    let w0 = first.w_l2_sq;
    let ut0 = first.ut_sq;
    let e2 = |t: f64| (-g2 * t).exp();
    Ok(vec![
        evaluate_bound("weighted_l2_decay", s, ok, |x| x.w_l2_sq, |x| (-g0 * x.t).exp() * w0),
        evaluate_bound("ut_decay", s, ok, |x| x.ut_sq, |x| lp * ut0 * (-g1 * x.t).exp()),
        evaluate_bound("grad_decay", s, ok, |x| x.grad_sq, |x| report.c_u0 * lp * report.k1 * e2(x.t)),
        evaluate_bound("uy_gradient_decay", s, ok, |x| 0.5 * x.grad_uy_sq, |x| report.k2 * e2(x.t)),
        evaluate_bound("trace_ux0_decay", s, ok, |x| x.trace_ux0, |x| 2.0 * lp.powi(3) * report.k1 * e2(x.t)),
        evaluate_bound("trace_uxy0_decay", s, ok, |x| x.trace_uxy0, |x| report.k2 * e2(x.t)),
        evaluate_bound("trace_uxxL_decay", s, ok, |x| x.trace_uxxL, |x| report.k4 * e2(x.t)),
    ])
}

/// Discrete analogue of the solution-space norm for a path `w_0..w_K` on
/// a uniform time grid:
///
/// ```text
/// max_k (||w_k||_{H^1} + ||grad w_{k,y}||) + (sum dt ||w_{k,xx}||^2)^{1/2}
///   + max_k ||dw_k|| + (sum dt ||grad dw_k||^2)^{1/2},   dw_k = (w_k - w_{k-1}) / dt
/// ```
pub fn xt_norm(path: &[Field], dt: f64) -> f64 {
    let mut sup_space: f64 = 0.0;
    let mut int_xx = 0.0;
    for w in path {
        let h1 = (grid::norm_sq(w) + grad_norm_sq(w)).sqrt();
        let gy = grad_norm_sq(&grid::d_y(w)).sqrt();
        sup_space = sup_space.max(h1 + gy);
        int_xx += dt * grid::norm_sq(&grid::d_xx(w));
    }
    let mut sup_rate: f64 = 0.0;
    let mut int_rate = 0.0;
    for pair in path.windows(2) {
        let rate = pair[1].zip_map(&pair[0], |a, b| (a - b) / dt).expect("path on one grid");
        sup_rate = sup_rate.max(grid::norm_sq(&rate).sqrt());
        int_rate += dt * grad_norm_sq(&rate);
    }
    sup_space + int_xx.sqrt() + sup_rate + int_rate.sqrt()
}

/// Writes the series as CSV with a header naming the snapshot fields.
pub fn write_csv(s: &[EnergySnapshot], mut out: impl Write) -> Result<()> {
    writeln!(out, "{}", CSV_COLUMNS.join(","))?;
    for snap in s {
        let row: Vec<String> = snap.columns().iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
