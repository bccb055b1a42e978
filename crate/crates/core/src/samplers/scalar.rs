//! Single-site laws with closed-form tails and truncated moments.

use std::f64::consts::{PI, SQRT_2};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};

use crate::error::{invalid, Result};
use crate::rng::Stream;

/// Law of a single site (or of the dominating variable `ξ`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarDistribution {
    /// Point mass at `c`.
    Constant {
        c: f64,
    },
    /// `±c` with probability 1/2 each (Rademacher when `c = 1`).
    TwoPoint {
        c: f64,
    },
    Uniform {
        a: f64,
        b: f64,
    },
    /// Centered normal with standard deviation `sigma`.
    Gaussian {
        sigma: f64,
    },
    /// `U(a, b) - (a + b)/2`.
    ShiftedUniform {
        a: f64,
        b: f64,
    },
}

/// Which side of a cut the boundary point belongs to. Only matters for
/// atoms; continuous kinds ignore it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Included,
    Excluded,
}

impl ScalarDistribution {
    pub const RADEMACHER: ScalarDistribution = ScalarDistribution::TwoPoint { c: 1.0 };

    pub fn validate(&self) -> Result<()> {
        use ScalarDistribution::*;
        match *self {
            Constant { c } | TwoPoint { c } if !c.is_finite() => invalid("c must be finite"),
            Uniform { a, b } | ShiftedUniform { a, b } if !(a.is_finite() && b.is_finite() && a < b) => {
                invalid(format!("uniform needs finite a < b, got a={a}, b={b}"))
            }
            Gaussian { sigma } if !(sigma.is_finite() && sigma > 0.0) => {
                invalid(format!("gaussian needs sigma > 0, got {sigma}"))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        use ScalarDistribution::*;
        match *self {
            Constant { c } => c,
            TwoPoint { .. } | Gaussian { .. } | ShiftedUniform { .. } => 0.0,
            Uniform { a, b } => 0.5 * (a + b),
        }
    }

    pub fn second_moment(&self) -> f64 {
        use ScalarDistribution::*;
        match *self {
            Constant { c } | TwoPoint { c } => c * c,
            Gaussian { sigma } => sigma * sigma,
            Uniform { a, b } => (a * a + a * b + b * b) / 3.0,
            ShiftedUniform { a, b } => (b - a) * (b - a) / 12.0,
        }
    }

    pub fn is_centered(&self) -> bool {
        self.mean() == 0.0
    }

    /// Essential supremum of `|X|`, infinite for the Gaussian.
    pub fn abs_bound(&self) -> f64 {
        use ScalarDistribution::*;
        match *self {
            Constant { c } | TwoPoint { c } => c.abs(),
            Uniform { a, b } => a.abs().max(b.abs()),
            ShiftedUniform { a, b } => 0.5 * (b - a),
            Gaussian { .. } => f64::INFINITY,
        }
    }

    pub fn sample(&self, s: &mut Stream) -> f64 {
        use ScalarDistribution::*;
        match *self {
            Constant { c } => c,
            TwoPoint { c } => {
                if s.coin() {
                    c
                } else {
                    -c
                }
            }
            Uniform { a, b } => a + (b - a) * s.uniform(),
            ShiftedUniform { a, b } => (b - a) * (s.uniform() - 0.5),
            Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(s);
                sigma * z
            }
        }
    }

    /// `P(|X| > x)`.
    pub fn tail_abs(&self, x: f64) -> f64 {
        use ScalarDistribution::*;
        match *self {
            Constant { c } | TwoPoint { c } => indicator(c.abs() > x),
            Uniform { a, b } => {
                if x < 0.0 {
                    return 1.0;
                }
                1.0 - overlap(a, b, -x, x) / (b - a)
            }
            ShiftedUniform { .. } => self.centered_uniform().tail_abs(x),
            Gaussian { sigma } => {
                if x < 0.0 {
                    1.0
                } else {
                    erfc(x / (sigma * SQRT_2))
                }
            }
        }
    }

    /// `E|X|^s`.
    pub fn abs_moment(&self, s: f64) -> f64 {
        use ScalarDistribution::*;
        match *self {
            Constant { c } | TwoPoint { c } => c.abs().powf(s),
            Uniform { a, b } => abs_power_integral(s, a, b) / (b - a),
            ShiftedUniform { .. } => self.centered_uniform().abs_moment(s),
            Gaussian { sigma } => gaussian_abs_moment(sigma, s),
        }
    }

    /// `E|X|^s I[|X| <= t]` (boundary included) or `I[|X| < t]`.
    pub fn abs_moment_below(&self, s: f64, t: f64, boundary: Boundary) -> f64 {
        use ScalarDistribution::*;
        if t < 0.0 {
            return 0.0;
        }
        match *self {
            Constant { c } | TwoPoint { c } => {
                let keep = match boundary {
                    Boundary::Included => c.abs() <= t,
                    Boundary::Excluded => c.abs() < t,
                };
                indicator(keep) * c.abs().powf(s)
            }
            Uniform { a, b } => {
                let (lo, hi) = (a.max(-t), b.min(t));
                if lo >= hi {
                    0.0
                } else {
                    abs_power_integral(s, lo, hi) / (b - a)
                }
            }
            ShiftedUniform { .. } => self.centered_uniform().abs_moment_below(s, t, boundary),
            Gaussian { sigma } => {
                gaussian_abs_moment(sigma, s) * gamma_lr(0.5 * (s + 1.0), t * t / (2.0 * sigma * sigma))
            }
        }
    }

    /// `E|X|^s I[|X| >= t]` (boundary included) or `I[|X| > t]`.
    pub fn abs_moment_above(&self, s: f64, t: f64, boundary: Boundary) -> f64 {
        use ScalarDistribution::*;
        match *self {
            Gaussian { sigma } if t > 0.0 => {
                gaussian_abs_moment(sigma, s) * gamma_ur(0.5 * (s + 1.0), t * t / (2.0 * sigma * sigma))
            }
            Uniform { a, b } if t >= 0.0 => {
                let mut acc = 0.0;
                if a < -t {
                    acc += abs_power_integral(s, a, b.min(-t));
                }
                if b > t {
                    acc += abs_power_integral(s, a.max(t), b);
                }
                acc / (b - a)
            }
            ShiftedUniform { .. } => self.centered_uniform().abs_moment_above(s, t, boundary),
            _ => {
                let flipped = match boundary {
                    Boundary::Included => Boundary::Excluded,
                    Boundary::Excluded => Boundary::Included,
                };
                (self.abs_moment(s) - self.abs_moment_below(s, t, flipped)).max(0.0)
            }
        }
    }

    /// `E X I[X >= -y]` (boundary included) or `E X I[X > -y]`.
    pub fn signed_mean_above(&self, y: f64, boundary: Boundary) -> f64 {
        use ScalarDistribution::*;
        let keep = |v: f64| match boundary {
            Boundary::Included => v >= -y,
            Boundary::Excluded => v > -y,
        };
        match *self {
            Constant { c } => indicator(keep(c)) * c,
            TwoPoint { c } => 0.5 * (indicator(keep(c)) * c - indicator(keep(-c)) * c),
            Uniform { a, b } => {
                let lo = a.max(-y);
                if lo >= b {
                    0.0
                } else {
                    0.5 * (b * b - lo * lo) / (b - a)
                }
            }
            ShiftedUniform { .. } => self.centered_uniform().signed_mean_above(y, boundary),
            Gaussian { sigma } => sigma / (2.0 * PI).sqrt() * (-(y * y) / (2.0 * sigma * sigma)).exp(),
        }
    }

    fn centered_uniform(&self) -> ScalarDistribution {
        match *self {
            ScalarDistribution::ShiftedUniform { a, b } => {
                let h = 0.5 * (b - a);
                ScalarDistribution::Uniform { a: -h, b: h }
            }
            other => other,
        }
    }

    /// Lebesgue density, `None` for atomic kinds.
    pub fn density(&self, x: f64) -> Option<f64> {
        use ScalarDistribution::*;
        match *self {
            Constant { .. } | TwoPoint { .. } => None,
            Uniform { a, b } => Some(if (a..=b).contains(&x) { 1.0 / (b - a) } else { 0.0 }),
            ShiftedUniform { .. } => self.centered_uniform().density(x),
            Gaussian { sigma } => {
                let z = x / sigma;
                Some((-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt()))
            }
        }
    }

    /// Atoms and their probabilities, `None` for continuous kinds.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match *self {
            ScalarDistribution::Constant { c } => Some(vec![(c, 1.0)]),
            ScalarDistribution::TwoPoint { c } => Some(vec![(c, 0.5), (-c, 0.5)]),
            _ => None,
        }
    }

    /// Support of the density, `None` for atomic kinds.
    pub fn support(&self) -> Option<(f64, f64)> {
        use ScalarDistribution::*;
        match *self {
            Constant { .. } | TwoPoint { .. } => None,
            Uniform { a, b } => Some((a, b)),
            ShiftedUniform { .. } => self.centered_uniform().support(),
            Gaussian { .. } => Some((f64::NEG_INFINITY, f64::INFINITY)),
        }
    }
}

fn indicator(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Length of `[a, b] ∩ [lo, hi]`.
fn overlap(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    (b.min(hi) - a.max(lo)).max(0.0)
}

/// `∫_lo^hi |u|^s du`.
fn abs_power_integral(s: f64, lo: f64, hi: f64) -> f64 {
    let g = |u: f64| u.signum() * u.abs().powf(s + 1.0) / (s + 1.0);
    g(hi) - g(lo)
}

fn gaussian_abs_moment(sigma: f64, s: f64) -> f64 {
    sigma.powf(s) * 2f64.powf(0.5 * s) * gamma(0.5 * (s + 1.0)) / PI.sqrt()
}
