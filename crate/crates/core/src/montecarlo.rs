//! Seeded, parallel tail-probability estimation and domination verdicts.
//!
//! Trials are split into fixed blocks evaluated on the current rayon pool.
//! Each trial's field is a pure function of `(seed, trial)`, per-trial
//! statistics are collected in trial order, and hits are integer counts, so
//! the worker count can never change a result.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{tail_bound, Cutoff, MomentAggregates};
use crate::error::{invalid, Error, Result};
use crate::lattice::{accumulate_in_place, MultiIndex};
use crate::rng::CounterRng;
use crate::samplers::{FieldDistribution, FieldSampler};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

const BLOCK: usize = 512;

/// Per-trial statistic of a field on a rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// `|S_n|`
    AbsSum,
    /// `max_{k<=n} |S_k|`
    MaxAbs,
    /// `max_{k<=n} S_k`
    MaxSum,
    /// `max_{k<=n} |X_k|`
    MaxSiteAbs,
    /// `max_{k<=n} X_k`
    MaxSiteOnesided,
}

impl Statistic {
    pub const ALL: [Statistic; 5] =
        [Statistic::AbsSum, Statistic::MaxAbs, Statistic::MaxSum, Statistic::MaxSiteAbs, Statistic::MaxSiteOnesided];

    pub fn name(&self) -> &'static str {
        match self {
            Statistic::AbsSum => "abs_sum",
            Statistic::MaxAbs => "max_abs",
            Statistic::MaxSum => "max_sum",
            Statistic::MaxSiteAbs => "max_site_abs",
            Statistic::MaxSiteOnesided => "max_site_onesided",
        }
    }

    fn needs_partial_sums(&self) -> bool {
        matches!(self, Statistic::MaxAbs | Statistic::MaxSum)
    }
}

impl FromStr for Statistic {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Statistic::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown statistic {s:?}")))
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Strict (`>`) or non-strict (`>=`) exceedance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    #[default]
    Gt,
    Ge,
}

impl Event {
    #[inline]
    pub fn hit(&self, value: f64, threshold: f64) -> bool {
        match self {
            Event::Gt => value > threshold,
            Event::Ge => value >= threshold,
        }
    }
}

/// `hits / trials` with a 95% Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailEstimate {
    pub hits: u64,
    pub trials: u64,
    pub p_hat: f64,
    /// Half-width of the Wilson interval; the rule-of-three upper bound
    /// `3/trials` when there are no hits.
    pub ci_halfwidth: f64,
}

impl TailEstimate {
    pub fn from_counts(hits: u64, trials: u64) -> Self {
        assert!(trials >= 1 && hits <= trials, "need 0 <= hits <= trials, trials >= 1");
        let (lo, hi) = wilson_interval(hits, trials);
        let ci_halfwidth = if hits == 0 { (3.0 / trials as f64).min(1.0) } else { 0.5 * (hi - lo) };
        Self { hits, trials, p_hat: hits as f64 / trials as f64, ci_halfwidth }
    }

    /// Interval endpoints, `[0, 3/trials]` for zero hits.
    pub fn interval(&self) -> (f64, f64) {
        if self.hits == 0 {
            (0.0, self.ci_halfwidth)
        } else {
            wilson_interval(self.hits, self.trials)
        }
    }
}

/// 95% Wilson score interval for `hits` out of `trials`.
pub fn wilson_interval(hits: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::NumericFailure(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Evaluates `statistics` on trials `0..trials`; `out[s][t]` is statistic
/// `s` on trial `t`.
pub fn sample_statistics(
    sampler: &dyn FieldSampler,
    statistics: &[Statistic],
    trials: u64,
    seed: u64,
) -> Vec<Vec<f64>> {
    let rng = CounterRng::new(seed);
    let shape = sampler.shape().clone();
    let sites = shape.volume();
    let need_sums = statistics.iter().any(Statistic::needs_partial_sums);
    let blocks: Vec<u64> = (0..trials).step_by(BLOCK).collect();
    let per_block: Vec<Vec<f64>> = blocks
        .par_iter()
        .map(|&start| {
            let end = (start + BLOCK as u64).min(trials);
            let mut buf = vec![0.0; sites];
            let mut scratch = Vec::new();
            let mut out = Vec::with_capacity((end - start) as usize * statistics.len());
            for trial in start..end {
                sampler.sample_into(&rng, trial, &mut buf, &mut scratch);
                evaluate_statistics(&shape, &mut buf, statistics, need_sums, &mut out);
            }
            out
        })
        .collect();
    let mut columns = vec![Vec::with_capacity(trials as usize); statistics.len()];
    for block in per_block {
        for row in block.chunks_exact(statistics.len()) {
            for (col, &v) in columns.iter_mut().zip(row) {
                col.push(v);
            }
        }
    }
    columns
}

fn evaluate_statistics(
    shape: &MultiIndex,
    buf: &mut [f64],
    statistics: &[Statistic],
    need_sums: bool,
    out: &mut Vec<f64>,
) {
    let start = out.len();
    for st in statistics {
        let v = match st {
            Statistic::AbsSum => buf.iter().sum::<f64>().abs(),
            Statistic::MaxSiteAbs => buf.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
            Statistic::MaxSiteOnesided => buf.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Statistic::MaxAbs | Statistic::MaxSum => f64::NAN,
        };
        out.push(v);
    }
    if need_sums {
        accumulate_in_place(shape, buf);
        for (slot, st) in out[start..].iter_mut().zip(statistics) {
            match st {
                Statistic::MaxAbs => *slot = buf.iter().fold(0.0_f64, |m, s| m.max(s.abs())),
                Statistic::MaxSum => *slot = buf.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                _ => {}
            }
        }
    }
}

/// Counts exceedances of `threshold` among per-trial statistic values.
pub fn tail_from_samples(values: &[f64], event: Event, threshold: f64) -> TailEstimate {
    let hits = values.iter().filter(|&&v| event.hit(v, threshold)).count() as u64;
    TailEstimate::from_counts(hits, values.len() as u64)
}

/// `P(statistic > threshold)` over `trials` seeded trials.
pub fn estimate_tail(
    dist: &FieldDistribution,
    n: &MultiIndex,
    statistic: Statistic,
    threshold: f64,
    trials: u64,
    seed: u64,
) -> Result<TailEstimate> {
    Ok(estimate_tails(dist, n, statistic, Event::Gt, &[threshold], trials, seed)?.remove(0))
}

/// One estimate per threshold, all from the same trials.
pub fn estimate_tails(
    dist: &FieldDistribution,
    n: &MultiIndex,
    statistic: Statistic,
    event: Event,
    thresholds: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<TailEstimate>> {
    if trials == 0 {
        return invalid("trials must be >= 1");
    }
    if thresholds.iter().any(|t| t.is_nan()) {
        return invalid("threshold must not be NaN");
    }
    let sampler = dist.prepare(n)?;
    let values = sample_statistics(sampler.as_ref(), &[statistic], trials, seed).remove(0);
    Ok(thresholds.iter().map(|&t| tail_from_samples(&values, event, t)).collect())
}

/// A named bound at one `(x, cutoff)` point; `cutoff` is `y` or `j`
/// according to the bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundCheck {
    pub bound: String,
    pub x: f64,
    pub cutoff: f64,
    pub r: f64,
    /// Overrides the bound's own exceedance convention for the main statistic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<Event>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DominationVerdict {
    pub bound: String,
    pub x: f64,
    pub cutoff: f64,
    pub empirical: TailEstimate,
    pub max_term: TailEstimate,
    pub analytic_term: f64,
    /// `max_term.p_hat + analytic_term`
    pub bound_total: f64,
    /// `bound_total - empirical.p_hat`
    pub margin: f64,
    pub pass: bool,
}

impl DominationVerdict {
    fn new(check: &BoundCheck, empirical: TailEstimate, max_term: TailEstimate, analytic_term: f64) -> Self {
        let bound_total = max_term.p_hat + analytic_term;
        let margin = bound_total - empirical.p_hat;
        let slack = 3.0 * empirical.ci_halfwidth.hypot(max_term.ci_halfwidth);
        Self {
            bound: check.bound.clone(),
            x: check.x,
            cutoff: check.cutoff,
            empirical,
            max_term,
            analytic_term,
            bound_total,
            margin,
            pass: bound_total >= 1.0 || margin >= -slack,
        }
    }
}

/// Checks one bound against Monte Carlo estimates of both probabilities.
pub fn verify_domination(
    dist: &FieldDistribution,
    n: &MultiIndex,
    check: &BoundCheck,
    trials: u64,
    seed: u64,
) -> Result<DominationVerdict> {
    Ok(verify_grid(dist, n, std::slice::from_ref(check), trials, seed)?.remove(0))
}

/// Like [`verify_domination`] for many checks, sampling each statistic once.
/// Verdicts are identical to checking each point separately.
pub fn verify_grid(
    dist: &FieldDistribution,
    n: &MultiIndex,
    checks: &[BoundCheck],
    trials: u64,
    seed: u64,
) -> Result<Vec<DominationVerdict>> {
    if trials == 0 {
        return invalid("trials must be >= 1");
    }
    let laws = dist.site_laws(n)?;
    if let Some(l) = laws.iter().find(|l| !l.is_centered()) {
        return invalid(format!("domination checks need zero-mean sites, got {l:?}"));
    }
    let mut prepared = Vec::with_capacity(checks.len());
    let mut statistics: Vec<Statistic> = Vec::new();
    for check in checks {
        let bound = tail_bound(&check.bound)?;
        if bound.hypothesis() != dist.hypothesis() {
            return invalid(format!(
                "bound {} assumes {:?} fields but the field is {} ({:?})",
                bound.name(),
                bound.hypothesis(),
                dist.dependence.name(),
                dist.hypothesis()
            ));
        }
        if !(check.x > 0.0) || !(check.cutoff > 0.0) {
            return invalid(format!("x and cutoff must be positive, got x={}, cutoff={}", check.x, check.cutoff));
        }
        let level = match bound.cutoff() {
            Cutoff::Level => check.cutoff,
            Cutoff::Ratio => check.x / check.cutoff,
        };
        let agg = MomentAggregates::exact(&laws, check.r, level, n.dim() as u32)?;
        let value = bound.evaluate(check.x, check.cutoff, &agg)?;
        for st in [bound.main_statistic(), bound.max_statistic()] {
            if !statistics.contains(&st) {
                statistics.push(st);
            }
        }
        prepared.push((bound, value));
    }
    let sampler = dist.prepare(n)?;
    let columns = sample_statistics(sampler.as_ref(), &statistics, trials, seed);
    let column = |st: Statistic| &columns[statistics.iter().position(|&s| s == st).expect("collected")];
    Ok(checks
        .iter()
        .zip(prepared)
        .map(|(check, (bound, value))| {
            let event = check.event.unwrap_or(bound.event());
            let empirical = tail_from_samples(column(bound.main_statistic()), event, check.x);
            let max_term = tail_from_samples(column(bound.max_statistic()), bound.event(), value.max_term_threshold);
            DominationVerdict::new(check, empirical, max_term, value.analytic_term)
        })
        .collect())
}
