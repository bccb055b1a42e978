//! Moment sums over a rectangle, computed exactly from site laws.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::samplers::{Boundary, ScalarDistribution};

/// Moment sums over `k <= n` feeding the analytic terms.
///
/// `lambda` is `sum E|X_k| I[|X_k| >= y]`, the variant the Fuk–Nagaev chain
/// of inequalities actually controls. The one-sided `sum E X_k I[X_k >= -y]`
/// is available from [`printed_lambda`].
///
/// The martingale sums (`b_r`, `d`, `m_tilde_r`, `lambda_tilde`) bound
/// conditional moments. [`MomentAggregates::exact`] fills them with the
/// unconditional site moments, which coincide with the conditional ones
/// when `|X_k|` is a.s. constant (two-point axis products).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentAggregates {
    #[serde(default)]
    pub m_r: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub b_r: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub m_tilde_r: f64,
    #[serde(default)]
    pub lambda_tilde: f64,
    pub r: f64,
    #[serde(default = "one")]
    pub dim: u32,
}

fn one() -> u32 {
    1
}

impl MomentAggregates {
    pub fn zero(r: f64, dim: u32) -> Self {
        Self { m_r: 0.0, lambda: 0.0, b_r: 0.0, d: 0.0, m_tilde_r: 0.0, lambda_tilde: 0.0, r, dim }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1.0..=2.0).contains(&self.r) {
            return invalid(format!("r must lie in [1, 2], got {}", self.r));
        }
        if self.dim == 0 {
            return invalid("dim must be >= 1");
        }
        for (name, v) in [
            ("m_r", self.m_r),
            ("lambda", self.lambda),
            ("b_r", self.b_r),
            ("d", self.d),
            ("m_tilde_r", self.m_tilde_r),
            ("lambda_tilde", self.lambda_tilde),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("aggregate {name} must be finite and >= 0, got {v}"));
            }
        }
        Ok(())
    }

    /// Exact sums over `laws` with truncation level `y`.
    pub fn exact(laws: &[ScalarDistribution], r: f64, y: f64, dim: u32) -> Result<Self> {
        if !(y > 0.0) {
            return invalid(format!("truncation level must be > 0, got {y}"));
        }
        let mut agg = Self::zero(r, dim);
        for law in laws {
            let m = law.abs_moment(r);
            agg.m_r += m;
            agg.lambda += law.abs_moment_above(1.0, y, Boundary::Included);
            agg.b_r += law.abs_moment_below(r, y, Boundary::Included);
            agg.d += law.signed_mean_above(y, Boundary::Excluded);
            agg.m_tilde_r += m;
            agg.lambda_tilde += law.abs_moment_above(1.0, y, Boundary::Excluded);
        }
        // centered laws give d >= 0 up to rounding
        agg.d = agg.d.max(0.0);
        agg.validate()?;
        Ok(agg)
    }
}

/// `sum E X_k I[X_k >= -y]`.
pub fn printed_lambda(laws: &[ScalarDistribution], y: f64) -> f64 {
    laws.iter().map(|l| l.signed_mean_above(y, Boundary::Included)).sum()
}
