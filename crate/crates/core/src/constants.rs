//! Explicit constants of the global decay theorem: the domain quantity
//! `A^2`, the smallness threshold on `||u0||^2`, the data condition built
//! from `||u0||^2` and `I0^2`, the decay rates `gamma0..gamma2`, and the
//! chain `C_{||u0||}, C1, C2, K1..K5, p1..p4`.
//!
//! Constants that are only named (never given numerically) in the
//! estimates are resolved through [`c2p`]: the `L^4` constant is
//! `c2p(2)`, the `L^8` constants are `c2p(4)` and the `L^10` constant is
//! `c2p(5)`. With `c2p(4)^8 = 72` this reproduces `C1 = 2 * 3^3 * (4!)^2 (1+L)^4`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::functional::c2p;
use crate::grid::{self, Field, Weight};

const PI2: f64 = PI * PI;

/// Which of the two printed definitions of `A^2` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum A2Convention {
    /// `A^2 = (pi^2/2)[3/L^2 + 1/(4B^2)] - 1`, as in the theorem statement.
    #[default]
    Theorem,
    /// `2A^2 = pi^2[3/L^2 + 1/(4B^2)] - 1`, as used inside the energy estimate.
    Halved,
}

pub fn compute_a2(l: f64, b: f64) -> f64 {
    compute_a2_with(l, b, A2Convention::Theorem)
}

pub fn compute_a2_with(l: f64, b: f64, convention: A2Convention) -> f64 {
    let bracket = 3.0 / (l * l) + 1.0 / (4.0 * b * b);
    match convention {
        A2Convention::Theorem => 0.5 * PI2 * bracket - 1.0,
        A2Convention::Halved => 0.5 * (PI2 * bracket - 1.0),
    }
}

fn domain_sum(l: f64, b: f64) -> f64 {
    1.0 / (l * l) + 1.0 / (4.0 * b * b)
}

fn threshold_from(a2: f64, l: f64, b: f64) -> f64 {
    a2 / (2.0 * PI2 * domain_sum(l, b))
}

/// Upper bound on `||u0||^2`.
pub fn smallness_threshold(l: f64, b: f64) -> Result<f64> {
    let a2 = compute_a2(l, b);
    if a2 <= 0.0 {
        return Err(Error::InadmissibleDomain { a2 });
    }
    Ok(threshold_from(a2, l, b))
}

/// `u_x + u_xxx + u_xyy + u^2 u_x`, i.e. `-u_t` at `t = 0` for the
/// unforced equation. Evaluated with the plain (non-split) nonlinearity.
pub fn time_derivative_at_start(u0: &Field) -> Field {
    let ux = grid::d_x(u0);
    let mut out = ux.clone();
    let dxxx = grid::d_xxx(u0);
    let dxyy = grid::d_xyy(u0);
    for (k, o) in out.values_mut().iter_mut().enumerate() {
        let u = u0.values()[k];
        *o += dxxx.values()[k] + dxyy.values()[k] + u * u * ux.values()[k];
    }
    out
}

/// `I0^2 = ||u0_x + Lap u0_x + u0^2 u0_x||^2`.
pub fn compute_i0_sq(u0: &Field) -> f64 {
    grid::norm_sq(&time_derivative_at_start(u0))
}

fn require_half(u0_l2_sq: f64) -> Result<()> {
    if u0_l2_sq >= 0.5 {
        return Err(Error::Precondition(format!(
            "||u0||^2 = {u0_l2_sq} must be below 1/2 (the factor 1 - 2||u0||^2 changes sign)"
        )));
    }
    Ok(())
}

/// Left-hand side of the data condition from `||u0||^2`, `I0^2` and `L`.
pub fn data_condition_lhs(u0_l2_sq: f64, i0_sq: f64, l: f64) -> Result<f64> {
    require_half(u0_l2_sq)?;
    let d = 1.0 - 2.0 * u0_l2_sq;
    let s = i0_sq + u0_l2_sq;
    let first = 2.0 * (1.0 + l).powi(2) / d * u0_l2_sq * s;
    let second = 16.0 + 216.0 * 576.0 * (1.0 + l).powi(8) / (d * d) * s * s;
    Ok(first * second)
}

pub fn data_condition_rhs(l: f64) -> f64 {
    2.0 * PI2 / (l * l) - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataCondition {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the smallness condition on the initial data.
pub fn check_data_condition(u0: &Field) -> Result<DataCondition> {
    let l = u0.grid().l();
    let u0_l2_sq = grid::norm_sq(u0);
    let lhs = data_condition_lhs(u0_l2_sq, compute_i0_sq(u0), l)?;
    let rhs = data_condition_rhs(l);
    Ok(DataCondition {
        lhs,
        rhs,
        holds: lhs < rhs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

fn rates_from(a2: f64, l: f64, b: f64) -> DecayRates {
    let gamma0 = a2 / (1.0 + l);
    let gamma1 = PI2 / (2.0 * (1.0 + l)) * domain_sum(l, b);
    DecayRates {
        gamma0,
        gamma1,
        gamma2: gamma0.min(gamma1),
    }
}

pub fn decay_rates(l: f64, b: f64) -> Result<DecayRates> {
    let a2 = compute_a2(l, b);
    if a2 <= 0.0 {
        return Err(Error::InadmissibleDomain { a2 });
    }
    Ok(rates_from(a2, l, b))
}

/// Every explicit constant of the decay theorem for one `(L, B, u0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub a2_convention: A2Convention,
    #[serde(rename = "A2")]
    pub a2: f64,
    pub smallness_threshold: f64,
    pub u0_l2_sq: f64,
    #[serde(rename = "I0_sq")]
    pub i0_sq: f64,
    pub ut0_l2_sq: f64,
    pub data_condition_lhs: f64,
    pub data_condition_rhs: f64,
    /// The alternative condition that makes `dz/dt(0) < 0` directly.
    pub alt_condition_lhs: f64,
    pub alt_condition_rhs: f64,
    pub alt_condition_holds: bool,
    #[serde(rename = "C_u0")]
    pub c_u0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C_omega")]
    pub c_omega: f64,
    #[serde(rename = "C_N10")]
    pub c_n10: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    #[serde(rename = "K1")]
    pub k1: f64,
    #[serde(rename = "K2")]
    pub k2: f64,
    #[serde(rename = "K3")]
    pub k3: f64,
    #[serde(rename = "K4")]
    pub k4: f64,
    #[serde(rename = "K5")]
    pub k5: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    pub admissible: bool,
    /// Names of the hypotheses that fail; empty when admissible.
    pub unmet: Vec<String>,
}

/// Builds the full report. `ut0_l2_sq` is `||u_t||^2(0)`, normally
/// `||A u0 + u0^2 u0_x||^2` (see [`compute_i0_sq`]).
pub fn k_constants(u0: &Field, ut0_l2_sq: f64, convention: A2Convention) -> Result<ConstantsReport> {
    if !(ut0_l2_sq >= 0.0) {
        return Err(Error::Precondition(format!("||u_t(0)||^2 = {ut0_l2_sq} must be nonnegative")));
    }
    let g = u0.grid();
    let (l, b) = (g.l(), g.b());
    let s = grid::inner(u0, u0, Weight::Unit)?;
    require_half(s)?;
    let i0_sq = compute_i0_sq(u0);
    let a2 = compute_a2_with(l, b, convention);
    let threshold = threshold_from(a2, l, b);
    let rates = rates_from(a2, l, b);
    let lp = 1.0 + l;

    let c_u0 = 2.0 * lp * lp / (1.0 - 2.0 * s);
    let c1 = 2.0 * 27.0 * 576.0 * lp.powi(4);
    let c_omega8 = c2p(4)?;
    let c2 = 2.0 * 729.0 * c_omega8.powi(8) * lp.powi(4);
    let c_omega = c2p(2)?;
    let c_n10 = c2p(5)?;

    let k1 = ut0_l2_sq.max(s);
    let k2 = (3.0 * lp * lp + 1.0) * lp * k1
        + c_u0 * c_u0 * lp * lp * k1 * k1 * s * (4.0 * c_omega.powi(4) + c2 * c_u0 * c_u0 * lp * lp * k1 * k1);
    let k3 = (6.0 * c_n10.powi(10) * s * c_u0.powi(4) * lp.powi(4) * k1.powi(4) + 2.0 * c_u0 * lp * k1 + k2)
        * 2.0
        * lp.powi(3)
        * k1;
    // (1+L) K1 (8/L + L + 4(1+L)^2/L^2 + K2 / ((1+L) K1)) + K3, expanded
    let k4 = lp * k1 * (8.0 / l + l + 4.0 * lp * lp / (l * l)) + k2 + k3;
    let k5 = 6.0 * lp.powi(3) * k1 + k2 + lp * k4 + 2.0 * lp * lp * k1 + lp * lp * k3
        + 4.0 * lp * lp * k1 * (lp * s + c_u0 * lp * k1 + k2);

    let s2 = s * s;
    let p1 = (1.0 - 0.5 * PI2 * (5.0 / (l * l) + 1.0 / (4.0 * b * b))) / lp
        + c_u0 * s2 * (16.0 + c1 * c_u0 * c_u0 * s2);
    let p2 = c_u0 * s2 * (16.0 + 3.0 * c1 * c_u0 * c_u0 * s);
    let p3 = c1 * c_u0.powi(3) * s2 * (1.0 + 2.0 * s);
    let p4 = c1 * c_u0.powi(3) * s;

    let alt_lhs = c_u0 * s2 * (16.0 + c1 * c_u0 * c_u0 * s2);
    let alt_rhs = (0.5 * PI2 * (5.0 / (l * l) + 1.0 / (4.0 * b * b)) - 1.0) / lp;

    let cond_lhs = data_condition_lhs(s, i0_sq, l)?;
    let cond_rhs = data_condition_rhs(l);

    let mut unmet = Vec::new();
    if cond_rhs <= 0.0 {
        unmet.push("2 pi^2 / L^2 - 1 > 0".to_string());
    }
    if a2 <= 0.0 {
        unmet.push("A^2 > 0".to_string());
    }
    if !(s < threshold) {
        unmet.push("||u0||^2 < smallness threshold".to_string());
    }
    if !(cond_lhs < cond_rhs) {
        unmet.push("data condition".to_string());
    }

    Ok(ConstantsReport {
        l,
        b,
        a2_convention: convention,
        a2,
        smallness_threshold: threshold,
        u0_l2_sq: s,
        i0_sq,
        ut0_l2_sq,
        data_condition_lhs: cond_lhs,
        data_condition_rhs: cond_rhs,
        alt_condition_lhs: alt_lhs,
        alt_condition_rhs: alt_rhs,
        alt_condition_holds: alt_lhs < alt_rhs,
        c_u0,
        c1,
        c2,
        c_omega,
        c_n10,
        gamma0: rates.gamma0,
        gamma1: rates.gamma1,
        gamma2: rates.gamma2,
        k1,
        k2,
        k3,
        k4,
        k5,
        p1,
        p2,
        p3,
        p4,
        admissible: unmet.is_empty(),
        unmet,
    })
}

/// Report with `||u_t||^2(0)` taken from the equation at `t = 0`.
pub fn evaluate(u0: &Field) -> Result<ConstantsReport> {
    k_constants(u0, compute_i0_sq(u0), A2Convention::Theorem)
}

/// `omega(t)` from the current `||u||^2` and `||u_t||^2`.
pub fn omega(u_l2_sq: f64, ut_l2_sq: f64, report: &ConstantsReport) -> f64 {
    let s = ut_l2_sq + u_l2_sq;
    let c = report.c_u0;
    c * u_l2_sq * s * (16.0 + report.c1 * c * c * s * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RectGrid;

    fn product_sine(l: f64, b: f64, n: usize, eps: f64) -> Field {
        let g = RectGrid::new(l, b, n, n).unwrap();
        Field::from_fn_conformant(g, |x, y| eps * (PI * x / l).sin().powi(2) * (PI * y / (2.0 * b)).cos())
    }

    // Reference values from an independent 30-digit evaluation.
    #[test]
    fn unit_square_values() {
        assert!((compute_a2(1.0, 1.0) - 15.038_107_151_770_208).abs() < 1e-12);
        assert!((smallness_threshold(1.0, 1.0).unwrap() - 0.609_471_526_543_064_9).abs() < 1e-12);
        let r = decay_rates(1.0, 1.0).unwrap();
        assert!((r.gamma0 - 7.519_053_575_885_104).abs() < 1e-12);
        assert!((r.gamma1 - 3.084_251_375_340_424_6).abs() < 1e-12);
        assert_eq!(r.gamma2, r.gamma1);
    }

    #[test]
    fn closed_form_domain() {
        let (l, b) = (PI, PI / 2.0);
        assert!((compute_a2(l, b) - 1.0).abs() < 1e-14);
        assert!((smallness_threshold(l, b).unwrap() - 0.25).abs() < 1e-14);
        let r = decay_rates(l, b).unwrap();
        let expect = 1.0 / (1.0 + PI);
        assert!((r.gamma0 - expect).abs() < 1e-14);
        assert!((r.gamma1 - expect).abs() < 1e-14);
        assert!((r.gamma2 - expect).abs() < 1e-14);
    }

    #[test]
    fn large_domain_is_inadmissible() {
        assert!(compute_a2(1e8, 1e8) + 1.0 < 1e-12);
        assert!(compute_a2(10.0, 10.0) < 0.0);
        assert!(matches!(smallness_threshold(10.0, 10.0), Err(Error::InadmissibleDomain { .. })));
        assert!(decay_rates(10.0, 10.0).is_err());
    }

    #[test]
    fn halved_convention() {
        assert!((compute_a2_with(1.0, 1.0, A2Convention::Halved) - 15.538_107_151_770_208 / 2.0 * 2.0 / 2.0 * 2.0 / 2.0 * 2.0).abs() > 0.0);
        let a = compute_a2_with(1.0, 1.0, A2Convention::Halved);
        assert!((a - (PI2 * 3.25 - 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn gamma2_is_min_on_random_domains() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut seen = 0;
        for _ in 0..100 {
            let (l, b) = (rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0));
            if let Ok(r) = decay_rates(l, b) {
                assert_eq!(r.gamma2, r.gamma0.min(r.gamma1));
                seen += 1;
            }
        }
        assert!(seen > 20);
    }

    #[test]
    fn domain_quantities_decrease_in_l_and_b() {
        let ls: Vec<f64> = (0..20).map(|k| 0.5 + 0.1 * k as f64).collect();
        for &b in &[0.5, 1.0, 2.0] {
            for w in ls.windows(2) {
                let (a0, a1) = (compute_a2(w[0], b), compute_a2(w[1], b));
                assert!(a1 < a0);
                if a1 > 0.0 {
                    assert!(smallness_threshold(w[1], b).unwrap() < smallness_threshold(w[0], b).unwrap());
                }
                // the threshold is not monotone in B, only A^2 is
                assert!(compute_a2(b, w[1]) < compute_a2(b, w[0]));
            }
        }
    }

    #[test]
    fn c_constants_by_substitution() {
        let g = RectGrid::new(1.0, 1.0, 16, 16).unwrap();
        let z = Field::zeros(g);
        let r = k_constants(&z, 0.0, A2Convention::Theorem).unwrap();
        assert_eq!(r.c1, 497_664.0);
        // C_{||u0||} = 2 (1+L)^2 / (1 - 2 * 0.1) with ||u0||^2 = 0.1
        let u = product_sine(1.0, 1.0, 64, 1.0);
        let scale = (0.1 / grid::norm_sq(&u)).sqrt();
        let r = k_constants(&u.scaled(scale), 0.0, A2Convention::Theorem).unwrap();
        assert!((r.c_u0 - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_data_degenerates_exactly() {
        let g = RectGrid::new(1.0, 1.0, 16, 16).unwrap();
        let r = evaluate(&Field::zeros(g)).unwrap();
        assert_eq!([r.k1, r.k2, r.k3, r.k4, r.k5], [0.0; 5]);
        assert_eq!([r.p2, r.p3, r.p4], [0.0; 3]);
        assert_eq!(r.p1, (1.0 - 0.5 * PI2 * (5.0 + 0.25)) / 2.0);
        assert_eq!(omega(0.0, 0.0, &r), 0.0);
        let c = check_data_condition(&Field::zeros(g)).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!((c.rhs - 18.739_208_802_178_716).abs() < 1e-12);
        assert!(c.holds && r.admissible);
    }

    #[test]
    fn i0_scales_quadratically() {
        let a = compute_i0_sq(&product_sine(1.0, 1.0, 64, 1e-3));
        let b = compute_i0_sq(&product_sine(1.0, 1.0, 64, 5e-4));
        assert!((a / b - 4.0).abs() < 1e-6);
        assert_eq!(compute_i0_sq(&product_sine(1.0, 1.0, 32, 0.0)), 0.0);
    }

    #[test]
    fn i0_regression_value() {
        // continuum: eps^2 pi^2 (1 - 4 pi^2 - pi^2/4)^2 / 2 = 82.67... for eps = 0.1
        let v = compute_i0_sq(&product_sine(1.0, 1.0, 128, 0.1));
        let continuum = 0.01 * PI2 * (1.0 - 4.0 * PI2 - PI2 / 4.0).powi(2) / 2.0;
        assert!((v - continuum).abs() / continuum < 2e-3, "{v} vs {continuum}");
        assert!((v - I0_REGRESSION).abs() < 1e-9 * I0_REGRESSION, "{v}");
    }

    const I0_REGRESSION: f64 = 82.62653815648069;

    #[test]
    fn data_condition_verdicts() {
        // small admissible amplitude
        let c = check_data_condition(&product_sine(1.0, 1.0, 64, 0.002)).unwrap();
        assert!(c.holds, "{c:?}");
        // amplitude 0.05 fails: I0^2 ~ 8270 eps^2 makes the product huge
        let c = check_data_condition(&product_sine(1.0, 1.0, 64, 0.05)).unwrap();
        assert!(!c.holds && c.lhs > 1e3 * c.rhs);
        // ||u0||^2 = 0.49
        let u = product_sine(1.0, 1.0, 64, 1.0);
        let u = u.scaled((0.49 / grid::norm_sq(&u)).sqrt());
        let c = check_data_condition(&u).unwrap();
        assert!(!c.holds);
        let u = u.scaled(1.02);
        assert!(matches!(check_data_condition(&u), Err(Error::Precondition(_))));
    }

    #[test]
    fn data_condition_monotone_under_scaling() {
        let base = product_sine(1.0, 1.0, 64, 0.004);
        assert!(check_data_condition(&base).unwrap().holds);
        let mut prev = f64::INFINITY;
        for alpha in [1.0, 0.8, 0.5, 0.3, 0.1, 0.01] {
            let c = check_data_condition(&base.scaled(alpha)).unwrap();
            assert!(c.holds);
            assert!(c.lhs < prev);
            prev = c.lhs;
        }
    }

    #[test]
    fn omega_reductions() {
        let r = evaluate(&product_sine(1.0, 1.0, 32, 0.002)).unwrap();
        let s: f64 = 0.01;
        let expect = r.c_u0 * s * s * (16.0 + r.c1 * r.c_u0 * r.c_u0 * s * s);
        assert!((omega(s, 0.0, &r) - expect).abs() < 1e-12 * expect);
        let pts = [(0.001, 0.002), (0.01, 0.002), (0.01, 0.02)];
        assert!(omega(pts[1].0, pts[1].1, &r) >= omega(pts[0].0, pts[0].1, &r));
        assert!(omega(pts[2].0, pts[2].1, &r) >= omega(pts[1].0, pts[1].1, &r));
    }

    #[test]
    fn k_constants_positive_for_nonzero_data() {
        let r = evaluate(&product_sine(1.0, 1.0, 32, 0.003)).unwrap();
        for k in [r.k1, r.k2, r.k3, r.k4, r.k5] {
            assert!(k > 0.0 && k.is_finite());
        }
        assert_eq!(r.k1, r.ut0_l2_sq.max(r.u0_l2_sq));
    }

    #[test]
    fn negative_ut_rejected() {
        let g = RectGrid::new(1.0, 1.0, 16, 16).unwrap();
        assert!(k_constants(&Field::zeros(g), -1.0, A2Convention::Theorem).is_err());
    }

    #[test]
    fn report_json_field_names() {
        let g = RectGrid::new(1.0, 1.0, 16, 16).unwrap();
        let r = evaluate(&Field::zeros(g)).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["A2", "smallness_threshold", "u0_l2_sq", "I0_sq", "C_u0", "C1", "C2", "K1", "K5", "p1", "p4", "gamma2", "admissible"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: ConstantsReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, r);
    }
}
