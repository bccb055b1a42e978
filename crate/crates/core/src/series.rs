//! Truncated Baum–Katz series `sum_n w(n) P(statistic_n > threshold_n)`
//! over cubes, decomposed into shells by largest coordinate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::{index_norm, log_norm, AlphaVector, MultiIndex};
use crate::montecarlo::{sample_statistics, tail_from_samples, Event, Statistic, TailEstimate};
use crate::samplers::FieldDistribution;

/// One entry of an explicit weight table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightEntry {
    pub n: MultiIndex,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightKind {
    /// `|n|^{α₁r-2}` with threshold `|n^α| ε`.
    Power,
    /// `|n|^{r/2-2}` with the logarithmic norming
    /// `sqrt(P log P) prod_{i>p} nᵢ^{αᵢ} ε`; needs `α₁ = 1/2`, `r >= 2`.
    HalfLog,
    /// Explicit `a_n` with threshold `ε`. Indices missing from the table
    /// have weight 0 and are not sampled.
    CustomArray { table: Vec<WeightEntry> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSpec {
    pub alpha: AlphaVector,
    pub r: f64,
    pub epsilon: f64,
    pub weight: WeightKind,
    pub statistic: Statistic,
    /// Exceedance convention, `>` unless set.
    #[serde(default)]
    pub event: Event,
    pub cube_n: usize,
}

impl SeriesSpec {
    pub fn validate(&self) -> Result<()> {
        let a1 = self.alpha.first();
        if !(self.r >= 1.0 && self.r.is_finite()) {
            return invalid(format!("r must be >= 1, got {}", self.r));
        }
        if a1 * self.r < 1.0 {
            return invalid(format!("need alpha_1 * r >= 1, got {}", a1 * self.r));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return invalid(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.cube_n == 0 {
            return invalid("cube_n must be >= 1");
        }
        if !matches!(self.statistic, Statistic::AbsSum | Statistic::MaxAbs) {
            return invalid(format!("series statistic must be abs_sum or max_abs, got {}", self.statistic));
        }
        match &self.weight {
            WeightKind::HalfLog if a1 != 0.5 => invalid(format!("half_log weights need alpha_1 = 1/2, got {a1}")),
            WeightKind::HalfLog if self.r < 2.0 => invalid(format!("half_log weights need r >= 2, got {}", self.r)),
            WeightKind::CustomArray { table } => {
                if let Some(e) = table.iter().find(|e| !(e.weight >= 0.0 && e.weight.is_finite())) {
                    return invalid(format!("weights must be finite and >= 0, got {} at {}", e.weight, e.n));
                }
                if let Some(e) = table.iter().find(|e| e.n.dim() != self.alpha.dim()) {
                    return invalid(format!("weight index {} does not have dimension {}", e.n, self.alpha.dim()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `(weight, threshold)` at index `n`.
    pub fn term(&self, n: &MultiIndex) -> Result<(f64, f64)> {
        let volume = n.volume() as f64;
        let a1 = self.alpha.first();
        Ok(match &self.weight {
            WeightKind::Power => (volume.powf(a1 * self.r - 2.0), index_norm(n, &self.alpha)? * self.epsilon),
            WeightKind::HalfLog => (volume.powf(0.5 * self.r - 2.0), log_norm(n, &self.alpha)? * self.epsilon),
            WeightKind::CustomArray { table } => {
                (table.iter().find(|e| &e.n == n).map_or(0.0, |e| e.weight), self.epsilon)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShellContribution {
    pub shell: usize,
    pub contribution: f64,
    /// Weighted CI half-widths of the shell's terms, added.
    pub ci_halfwidth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesTerm {
    pub n: MultiIndex,
    pub weight: f64,
    pub threshold: f64,
    pub estimate: TailEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesReport {
    /// Sum of the shell contributions in shell order.
    pub partial_sum: f64,
    pub per_shell: Vec<ShellContribution>,
    /// Terms whose estimate had no exceedances.
    pub terms_skipped_zero: usize,
    pub terms: Vec<SeriesTerm>,
}

impl SeriesReport {
    pub fn shell(&self, s: usize) -> Option<&ShellContribution> {
        self.per_shell.iter().find(|c| c.shell == s)
    }

    fn from_terms(terms: Vec<SeriesTerm>) -> Self {
        let mut per_shell: Vec<ShellContribution> = Vec::new();
        let mut shells: Vec<usize> = terms.iter().map(|t| t.n.max_coord()).collect();
        shells.sort_unstable();
        shells.dedup();
        for shell in shells {
            let (mut contribution, mut ci) = (0.0, 0.0);
            for t in terms.iter().filter(|t| t.n.max_coord() == shell) {
                contribution += t.weight * t.estimate.p_hat;
                ci += t.weight * t.estimate.ci_halfwidth;
            }
            per_shell.push(ShellContribution { shell, contribution, ci_halfwidth: ci });
        }
        Self {
            partial_sum: per_shell.iter().map(|s| s.contribution).sum(),
            per_shell,
            terms_skipped_zero: terms.iter().filter(|t| t.estimate.hits == 0).count(),
            terms,
        }
    }
}

/// Estimates every term of the series on `[1, cube_n]^d` by Monte Carlo.
pub fn scan_series(
    spec: &SeriesSpec,
    dist: &FieldDistribution,
    trials_per_index: u64,
    seed: u64,
) -> Result<SeriesReport> {
    scan(spec, dist, trials_per_index, seed, false)
}

/// With `force_exceed`, every tail probability is taken to be 1 so the
/// report sums the bare weights.
pub(crate) fn scan(
    spec: &SeriesSpec,
    dist: &FieldDistribution,
    trials: u64,
    seed: u64,
    force_exceed: bool,
) -> Result<SeriesReport> {
    spec.validate()?;
    if trials < 100 {
        return invalid(format!("need at least 100 trials per index, got {trials}"));
    }
    let cube = MultiIndex::cube(spec.alpha.dim(), spec.cube_n)?;
    let mut terms = Vec::with_capacity(cube.volume());
    for coords in cube.rectangle() {
        let n = MultiIndex::new(coords)?;
        let (weight, threshold) = spec.term(&n)?;
        if weight == 0.0 {
            continue;
        }
        let estimate = if force_exceed {
            TailEstimate::from_counts(trials, trials)
        } else {
            let sampler = dist.prepare(&n)?;
            let values = sample_statistics(sampler.as_ref(), &[spec.statistic], trials, seed).remove(0);
            tail_from_samples(&values, spec.event, threshold)
        };
        terms.push(SeriesTerm { n, weight, threshold, estimate });
    }
    Ok(SeriesReport::from_terms(terms))
}

/// `sum_n a_n p_n` for given weights and tail estimates over the same
/// index set, with weighted half-widths added.
pub fn weighted_array_series(weights: &[WeightEntry], tails: &[(MultiIndex, TailEstimate)]) -> Result<SeriesReport> {
    if weights.len() != tails.len() {
        return invalid(format!("{} weights for {} tail estimates", weights.len(), tails.len()));
    }
    let mut terms = Vec::with_capacity(weights.len());
    for w in weights {
        if !(w.weight >= 0.0 && w.weight.is_finite()) {
            return invalid(format!("weights must be finite and >= 0, got {} at {}", w.weight, w.n));
        }
        let (_, estimate) = tails
            .iter()
            .find(|(n, _)| n == &w.n)
            .ok_or_else(|| crate::Error::InvalidInput(format!("no tail estimate for index {}", w.n)))?;
        terms.push(SeriesTerm { n: w.n.clone(), weight: w.weight, threshold: f64::NAN, estimate: *estimate });
    }
    Ok(SeriesReport::from_terms(terms))
}

/// `sqrt(κ₁σ²) sqrt(r - 2)`, the ε above which the logarithmic series is
/// finite.
pub fn theorem32_threshold(kappa1: f64, sigma2: f64, r: f64) -> Result<f64> {
    if !(kappa1 > 0.0) || !(sigma2 >= 0.0) {
        return invalid(format!("need kappa1 > 0 and sigma2 >= 0, got {kappa1}, {sigma2}"));
    }
    if !(r >= 2.0) {
        return invalid(format!("r must be >= 2, got {r}"));
    }
    Ok((kappa1 * sigma2).sqrt() * (r - 2.0).sqrt())
}
