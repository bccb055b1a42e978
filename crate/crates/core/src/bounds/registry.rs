//! Named bounds and evaluators, selected at runtime from config or CLI.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{BoundValue, MomentAggregates};
use crate::error::{Error, Result};
use crate::montecarlo::{Event, Statistic};
use crate::samplers::Hypothesis;

/// How the second argument of a tail bound is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cutoff {
    /// The truncation level `y` itself.
    Level,
    /// A ratio `j`, with truncation level `x/j`.
    Ratio,
}

/// A maximal-summand plus analytic-term tail inequality
/// `P(main > x) <= P(max > cutoff) + analytic_term`.
pub trait TailBound: Send + Sync {
    fn name(&self) -> &'static str;
    /// The dependence class the inequality is proved for.
    fn hypothesis(&self) -> Hypothesis;
    fn cutoff(&self) -> Cutoff;
    /// Statistic on the left-hand side.
    fn main_statistic(&self) -> Statistic;
    /// Statistic in the maximal-summand term.
    fn max_statistic(&self) -> Statistic;
    /// Exceedance convention used by the inequality.
    fn event(&self) -> Event;
    fn evaluate(&self, x: f64, cutoff: f64, agg: &MomentAggregates) -> Result<BoundValue>;
}

macro_rules! tail_bound {
    ($ty:ident, $name:literal, $hyp:ident, $cut:ident, $main:ident, $max:ident, $event:ident, $f:path) => {
        struct $ty;
        impl TailBound for $ty {
            fn name(&self) -> &'static str {
                $name
            }
            fn hypothesis(&self) -> Hypothesis {
                Hypothesis::$hyp
            }
            fn cutoff(&self) -> Cutoff {
                Cutoff::$cut
            }
            fn main_statistic(&self) -> Statistic {
                Statistic::$main
            }
            fn max_statistic(&self) -> Statistic {
                Statistic::$max
            }
            fn event(&self) -> Event {
                Event::$event
            }
            fn evaluate(&self, x: f64, cutoff: f64, agg: &MomentAggregates) -> Result<BoundValue> {
                agg.validate()?;
                $f(x, cutoff, agg)
            }
        }
    };
}

tail_bound!(
    NdFukNagaev,
    "nd_fuk_nagaev_bound",
    NegativelyDependent,
    Level,
    AbsSum,
    MaxSiteAbs,
    Gt,
    super::nd_fuk_nagaev_bound
);
tail_bound!(NdHj, "nd_hj_bound", NegativelyDependent, Ratio, AbsSum, MaxSiteAbs, Gt, super::nd_hj_bound);
tail_bound!(
    MartingaleOneSided,
    "martingale_fuk_nagaev_onesided",
    MartingaleDifferences,
    Level,
    MaxSum,
    MaxSiteOnesided,
    Ge,
    super::martingale_fuk_nagaev_onesided
);
tail_bound!(
    MartingaleTwoSided,
    "martingale_fuk_nagaev_twosided",
    MartingaleDifferences,
    Level,
    MaxAbs,
    MaxSiteAbs,
    Ge,
    super::martingale_fuk_nagaev_twosided
);
tail_bound!(
    MartingaleHj,
    "martingale_hj_bound",
    MartingaleDifferences,
    Ratio,
    MaxAbs,
    MaxSiteAbs,
    Ge,
    super::martingale_hj_bound
);

pub static TAIL_BOUNDS: &[&dyn TailBound] =
    &[&NdFukNagaev, &NdHj, &MartingaleOneSided, &MartingaleTwoSided, &MartingaleHj];

pub fn tail_bound(name: &str) -> Result<&'static dyn TailBound> {
    TAIL_BOUNDS.iter().copied().find(|b| b.name() == name).ok_or_else(|| {
        let known: Vec<_> = TAIL_BOUNDS.iter().map(|b| b.name()).collect();
        Error::InvalidInput(format!("unknown bound {name:?}; known: {}", known.join(", ")))
    })
}

/// Output of a named evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Evaluation {
    Scalar(f64),
    Bound(BoundValue),
}

type Evaluator = fn(&serde_json::Value) -> Result<Evaluation>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelParams {
    x: f64,
    y: f64,
    agg: MomentAggregates,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RatioParams {
    x: f64,
    j: f64,
    agg: MomentAggregates,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductGapParams {
    a: Vec<f64>,
    delta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExponentialParams {
    x: f64,
    t: f64,
    b: f64,
    kappa1: f64,
    sigma2: f64,
    n_count: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DoobParams {
    alpha: f64,
    d: u32,
}

fn params<T: DeserializeOwned>(v: &serde_json::Value) -> Result<T> {
    T::deserialize(v).map_err(|e| Error::InvalidInput(format!("bad parameters: {e}")))
}

fn by_level(name: &str, v: &serde_json::Value) -> Result<Evaluation> {
    let p: LevelParams = params(v)?;
    tail_bound(name)?.evaluate(p.x, p.y, &p.agg).map(Evaluation::Bound)
}

fn by_ratio(name: &str, v: &serde_json::Value) -> Result<Evaluation> {
    let p: RatioParams = params(v)?;
    tail_bound(name)?.evaluate(p.x, p.j, &p.agg).map(Evaluation::Bound)
}

/// Every closed-form evaluator by name, with JSON parameters.
pub static EVALUATORS: &[(&str, Evaluator)] = &[
    ("product_gap_lower_bound", |v| {
        let p: ProductGapParams = params(v)?;
        super::product_gap_lower_bound(&p.a, p.delta).map(Evaluation::Scalar)
    }),
    ("nd_exponential_bound", |v| {
        let p: ExponentialParams = params(v)?;
        super::nd_exponential_bound(p.x, p.t, p.b, p.kappa1, p.sigma2, p.n_count).map(Evaluation::Scalar)
    }),
    ("nd_fuk_nagaev_bound", |v| by_level("nd_fuk_nagaev_bound", v)),
    ("nd_hj_bound", |v| by_ratio("nd_hj_bound", v)),
    ("martingale_fuk_nagaev_onesided", |v| by_level("martingale_fuk_nagaev_onesided", v)),
    ("martingale_fuk_nagaev_twosided", |v| by_level("martingale_fuk_nagaev_twosided", v)),
    ("martingale_hj_bound", |v| by_ratio("martingale_hj_bound", v)),
    ("doob_factor", |v| {
        let p: DoobParams = params(v)?;
        super::doob_factor(p.alpha, p.d).map(Evaluation::Scalar)
    }),
];

pub fn evaluate_named(name: &str, params: &serde_json::Value) -> Result<Evaluation> {
    let (_, f) = EVALUATORS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        let known: Vec<_> = EVALUATORS.iter().map(|(n, _)| *n).collect();
        Error::InvalidInput(format!("unknown evaluator {name:?}; known: {}", known.join(", ")))
    })?;
    f(params)
}
