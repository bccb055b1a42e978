//! Right-hand sides of the tail inequalities, as pure functions of moment
//! aggregates.
//!
//! Each Fuk–Nagaev style bound has the shape
//!
//! ```text
//! P(statistic > x) <= P(max-site statistic > cutoff) + analytic_term
//! ```
//!
//! The max-site probability is estimated by Monte Carlo elsewhere; this
//! module computes the analytic term and reports the cutoff. Values above
//! one are returned as computed.

pub mod aggregates;
pub mod registry;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub use aggregates::MomentAggregates;
pub use registry::{evaluate_named, tail_bound, Cutoff, Evaluation, TailBound, EVALUATORS, TAIL_BOUNDS};

/// Max-term cutoff plus closed-form remainder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundValue {
    pub max_term_threshold: f64,
    pub analytic_term: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        invalid(format!("{name} must be positive and finite, got {v}"))
    }
}

/// `1 - prod(1 - a_i)`, evaluated as `-expm1(sum ln(1 - a_i))`.
pub fn product_gap(a: &[f64]) -> Result<f64> {
    if let Some(bad) = a.iter().find(|&&v| !(0.0..1.0).contains(&v)) {
        return invalid(format!("entries must lie in [0, 1), got {bad}"));
    }
    Ok(-a.iter().map(|&v| (-v).ln_1p()).sum::<f64>().exp_m1())
}

/// `1 - prod(1 - a_i)`, which is at least `(1 - δ) sum a_i` once
/// `sum a_i <= δ(1 - δ)`. Fails with [`Error::ConditionNotMet`] otherwise.
pub fn product_gap_lower_bound(a: &[f64], delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return invalid(format!("delta must lie in (0, 1), got {delta}"));
    }
    let gap = product_gap(a)?;
    let total: f64 = a.iter().sum();
    let limit = delta * (1.0 - delta);
    if total > limit {
        return Err(Error::ConditionNotMet(format!("sum of a = {total} exceeds delta(1 - delta) = {limit}")));
    }
    Ok(gap)
}

/// `exp(-t x + κ₁ σ² |n|)` for `0 < t < 1/b`, exactly in this form.
pub fn nd_exponential_bound(x: f64, t: f64, b: f64, kappa1: f64, sigma2: f64, n_count: u64) -> Result<f64> {
    positive("b", b)?;
    positive("kappa1", kappa1)?;
    if !(x >= 0.0) {
        return invalid(format!("x must be >= 0, got {x}"));
    }
    if !(sigma2 >= 0.0) {
        return invalid(format!("sigma2 must be >= 0, got {sigma2}"));
    }
    if n_count == 0 {
        return invalid("n_count must be >= 1");
    }
    if !(t > 0.0 && t < 1.0 / b) {
        return invalid(format!("t must lie in (0, 1/b) = (0, {}), got {t}", 1.0 / b));
    }
    Ok((-t * x + kappa1 * sigma2 * n_count as f64).exp())
}

/// `exp{x/y - (x/y - L/y + M/y^r) ln(1 + x y^{r-1}/M)}` with caller prefactor applied.
fn fuk_nagaev_core(x: f64, y: f64, r: f64, shift: f64, moment: f64) -> f64 {
    if moment == 0.0 {
        return 0.0;
    }
    let ratio = x / y;
    let coeff = ratio - shift / y + moment / y.powf(r);
    let log = (x * y.powf(r - 1.0) / moment).ln_1p();
    (ratio - coeff * log).exp()
}

/// Analytic term `2 exp{x/y - (x/y - Λ/y + M_r/y^r) ln(1 + x y^{r-1}/M_r)}`;
/// the cutoff is `y`.
pub fn nd_fuk_nagaev_bound(x: f64, y: f64, agg: &MomentAggregates) -> Result<BoundValue> {
    positive("x", x)?;
    positive("y", y)?;
    Ok(BoundValue { max_term_threshold: y, analytic_term: 2.0 * fuk_nagaev_core(x, y, agg.r, agg.lambda, agg.m_r) })
}

/// `e^j j^{(r-1)j} (M/x^r)^j`, zero when `M = 0`.
fn polynomial_core(x: f64, j: f64, r: f64, moment: f64) -> f64 {
    if moment == 0.0 {
        return 0.0;
    }
    (j + (r - 1.0) * j * j.ln() + j * (moment.ln() - r * x.ln())).exp()
}

/// Analytic term `2 e^j j^{(r-1)j} (M_r/x^r)^j`; the cutoff is `x/j`.
pub fn nd_hj_bound(x: f64, j: f64, agg: &MomentAggregates) -> Result<BoundValue> {
    positive("x", x)?;
    positive("j", j)?;
    Ok(BoundValue { max_term_threshold: x / j, analytic_term: 2.0 * polynomial_core(x, j, agg.r, agg.m_r) })
}

fn doob_prefactor(d: u32) -> f64 {
    (f64::from(d) - 1.0).exp()
}

/// `e^{d-1} exp{x/y - ((x - D)/y + B_r/y^r) ln(x y^{r-1}/B_r + 1)}` for
/// `P(max S_k >= x)`; the cutoff is `y`.
pub fn martingale_fuk_nagaev_onesided(x: f64, y: f64, agg: &MomentAggregates) -> Result<BoundValue> {
    positive("x", x)?;
    positive("y", y)?;
    Ok(BoundValue {
        max_term_threshold: y,
        analytic_term: doob_prefactor(agg.dim) * fuk_nagaev_core(x, y, agg.r, agg.d, agg.b_r),
    })
}

/// `2 e^{d-1} exp{x/y - ((x - Λ̃)/y + M̃_r/y^r) ln(x y^{r-1}/M̃_r + 1)}` for
/// `P(max |S_k| >= x)`; the cutoff is `y`.
pub fn martingale_fuk_nagaev_twosided(x: f64, y: f64, agg: &MomentAggregates) -> Result<BoundValue> {
    positive("x", x)?;
    positive("y", y)?;
    Ok(BoundValue {
        max_term_threshold: y,
        analytic_term: 2.0 * doob_prefactor(agg.dim) * fuk_nagaev_core(x, y, agg.r, agg.lambda_tilde, agg.m_tilde_r),
    })
}

/// `2 e^{d-1} e^j j^{(r-1)j} (M̃_r/x^r)^j`; the cutoff is `x/j`.
pub fn martingale_hj_bound(x: f64, j: f64, agg: &MomentAggregates) -> Result<BoundValue> {
    positive("x", x)?;
    positive("j", j)?;
    Ok(BoundValue {
        max_term_threshold: x / j,
        analytic_term: 2.0 * doob_prefactor(agg.dim) * polynomial_core(x, j, agg.r, agg.m_tilde_r),
    })
}

/// `(α/(α-1))^{α(d-1)}`, the cost of a maximal inequality over `d` axes.
pub fn doob_factor(alpha: f64, d: u32) -> Result<f64> {
    if !(alpha > 1.0) || !alpha.is_finite() {
        return invalid(format!("alpha must be > 1, got {alpha}"));
    }
    if d == 0 {
        return invalid("d must be >= 1");
    }
    Ok((alpha * (f64::from(d) - 1.0) * (alpha / (alpha - 1.0)).ln()).exp())
}

/// Smallest [`doob_factor`] over a log-spaced grid of `points` values in
/// `(1, alpha_max]`, returned as `(alpha, factor)`.
pub fn doob_factor_scan(d: u32, alpha_max: f64, points: usize) -> Result<(f64, f64)> {
    if !(alpha_max > 1.0) || points < 2 {
        return invalid("doob_factor_scan needs alpha_max > 1 and at least two grid points");
    }
    let span = (alpha_max - 1.0).ln();
    let lo = span - 12.0 * std::f64::consts::LN_10;
    let mut best = (f64::NAN, f64::INFINITY);
    for i in 0..points {
        let alpha = 1.0 + (lo + (span - lo) * i as f64 / (points - 1) as f64).exp();
        let v = doob_factor(alpha, d)?;
        if v < best.1 {
            best = (alpha, v);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn agg(r: f64, m: f64) -> MomentAggregates {
        MomentAggregates { r, m_r: m, m_tilde_r: m, b_r: m, ..MomentAggregates::zero(r, 1) }
    }

    #[test]
    fn product_gap_examples() {
        assert_eq!(product_gap_lower_bound(&[0.0, 0.0, 0.0], 0.5).unwrap(), 0.0);
        let g = product_gap_lower_bound(&[0.1, 0.1], 0.5).unwrap();
        assert_relative_eq!(g, 0.19, max_relative = 1e-14);
        assert!(g >= 0.5 * 0.2);
        assert!(matches!(product_gap_lower_bound(&[0.3], 0.1), Err(Error::ConditionNotMet(_))));
        assert_relative_eq!(product_gap(&[0.3]).unwrap(), 0.3, max_relative = 1e-15);
        assert!(product_gap(&[1.0]).is_err());
    }

    #[test]
    fn nd_exponential_examples() {
        assert_relative_eq!(nd_exponential_bound(0.0, 0.05, 10.0, 1.0, 1.0, 4).unwrap(), 4f64.exp());
        assert_relative_eq!(nd_exponential_bound(20.0, 0.05, 10.0, 1.0, 1.0, 4).unwrap(), 3f64.exp());
        assert!(nd_exponential_bound(20.0, 0.5, 2.0, 1.0, 1.0, 4).is_err());
        assert_relative_eq!(nd_exponential_bound(7.0, 0.05, 10.0, 2.0, 0.0, 9).unwrap(), (-0.35f64).exp());
        assert!(nd_exponential_bound(1.0, 0.0, 1.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn nd_exponential_spec_point() {
        // t = 0.5 needs b < 2
        let v = nd_exponential_bound(20.0, 0.5, 1.9, 1.0, 1.0, 4).unwrap();
        assert_relative_eq!(v, (-6f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(v, 0.0024788, epsilon = 1e-7);
    }

    #[test]
    fn nd_fuk_nagaev_examples() {
        let v = nd_fuk_nagaev_bound(2.0, 1.0, &agg(2.0, 1.0)).unwrap();
        assert_relative_eq!(v.analytic_term, 2.0 * E * E / 27.0, max_relative = 1e-14);
        assert_eq!(v.max_term_threshold, 1.0);
        assert_eq!(nd_fuk_nagaev_bound(2.0, 1.0, &agg(2.0, 0.0)).unwrap().analytic_term, 0.0);
        assert!(nd_fuk_nagaev_bound(2.0, 1.0, &agg(2.0, 1e-12)).unwrap().analytic_term < 1e-20);
        let v = nd_fuk_nagaev_bound(1.0, 1.0, &agg(1.0, 1.0)).unwrap();
        assert_relative_eq!(v.analytic_term, E / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn nd_hj_examples() {
        assert_eq!(nd_hj_bound(3.0, 2.0, &agg(2.0, 0.0)).unwrap().analytic_term, 0.0);
        let v = nd_hj_bound(3.0, 1.0, &agg(1.5, 2.0)).unwrap();
        assert_relative_eq!(v.analytic_term, 2.0 * E * 2.0 / 3f64.powf(1.5), max_relative = 1e-14);
        assert_eq!(v.max_term_threshold, 3.0);
        let v = nd_hj_bound(1.0, 2.0, &agg(2.0, 1.0)).unwrap();
        assert_relative_eq!(v.analytic_term, 8.0 * E * E, max_relative = 1e-14);
        assert!(nd_hj_bound(0.0, 1.0, &agg(2.0, 1.0)).is_err());
        assert!(nd_hj_bound(1.0, 0.0, &agg(2.0, 1.0)).is_err());
    }

    #[test]
    fn martingale_examples() {
        let mut a = agg(2.0, 1.0);
        let v = martingale_fuk_nagaev_onesided(2.0, 1.0, &a).unwrap();
        assert_relative_eq!(v.analytic_term, E * E / 27.0, max_relative = 1e-14);
        a.dim = 3;
        let v = martingale_fuk_nagaev_onesided(2.0, 1.0, &a).unwrap();
        assert_relative_eq!(v.analytic_term, E * E * E * E / 27.0, max_relative = 1e-14);

        let mut a = agg(1.0, 1.0);
        a.d = 1.0;
        let v = martingale_fuk_nagaev_onesided(1.0, 1.0, &a).unwrap();
        assert_relative_eq!(v.analytic_term, E / 2.0, max_relative = 1e-14);

        let a = agg(2.0, 1.0);
        let two = martingale_fuk_nagaev_twosided(2.0, 1.0, &a).unwrap();
        assert_relative_eq!(two.analytic_term, 2.0 * E * E / 27.0, max_relative = 1e-14);
        let one = martingale_fuk_nagaev_onesided(2.0, 1.0, &a).unwrap();
        assert_relative_eq!(two.analytic_term, 2.0 * one.analytic_term, max_relative = 1e-15);
        let mut a2 = a;
        a2.dim = 2;
        let v = martingale_fuk_nagaev_twosided(2.0, 1.0, &a2).unwrap();
        assert_relative_eq!(v.analytic_term, 2.0 * E * E * E / 27.0, max_relative = 1e-14);
        let b0 = MomentAggregates::zero(2.0, 2);
        assert_eq!(martingale_fuk_nagaev_onesided(2.0, 1.0, &b0).unwrap().analytic_term, 0.0);
    }

    #[test]
    fn martingale_hj_examples() {
        let mut a = agg(2.0, 0.0);
        assert_eq!(martingale_hj_bound(2.0, 2.0, &a).unwrap().analytic_term, 0.0);
        a.m_tilde_r = 3.0;
        let v = martingale_hj_bound(2.0, 1.0, &a).unwrap();
        assert_relative_eq!(v.analytic_term, 2.0 * E * 3.0 / 4.0, max_relative = 1e-14);
        let mut a = agg(2.0, 1.0);
        a.dim = 2;
        let v = martingale_hj_bound(1.0, 2.0, &a).unwrap();
        assert_relative_eq!(v.analytic_term, 8.0 * E.powi(3), max_relative = 1e-14);
        assert_relative_eq!(v.analytic_term, 160.68, epsilon = 5e-3);
    }

    #[test]
    fn doob_examples() {
        for alpha in [1.1, 2.0, 50.0] {
            assert_eq!(doob_factor(alpha, 1).unwrap(), 1.0);
        }
        assert_relative_eq!(doob_factor(2.0, 2).unwrap(), 4.0, max_relative = 1e-15);
        assert!(doob_factor(1.0, 2).is_err());
        let (alpha, v) = doob_factor_scan(3, 50.0, 2000).unwrap();
        assert!(v > E * E);
        assert_relative_eq!(alpha, 50.0, max_relative = 1e-12);
        assert!(v / (E * E) - 1.0 < 0.03);
    }
}
