//! Numerical checks of the hypotheses: mean domination of site tails,
//! moment functionals of the dominating variable, the divisor-count weight
//! and the truncated second-moment series.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::lattice::{index_norm, AlphaVector, MultiIndex};
use crate::samplers::{Boundary, ScalarDistribution};

/// One probe point of a [`WmbReport`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WmbProbe {
    pub x: f64,
    /// `(1/|n|) sum_k P(|X_k| > x)`
    pub mean_tail: f64,
    /// `P(|ξ| > x)`
    pub xi_tail: f64,
    /// `mean_tail / xi_tail`, absent when `xi_tail = 0`.
    pub ratio: Option<f64>,
}

/// Grid-relative domination constants for
/// `κ₂ P(|ξ| > x) <= (1/|n|) sum_k P(|X_k| > x) <= κ₁ P(|ξ| > x)`.
///
/// A finite grid can refute the condition but never certify it for every
/// `x > x₀`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WmbReport {
    /// Smallest κ₁ for the upper inequality on the grid; infinite when some
    /// probe has a positive mean tail but a zero ξ-tail.
    pub kappa1_hat: f64,
    /// Largest κ₂ for the lower inequality over probes with a positive ξ-tail.
    pub kappa2_hat: f64,
    pub probe_xs: Vec<f64>,
    pub holds_wmd: bool,
    pub holds_wmb: bool,
    pub probes: Vec<WmbProbe>,
}

/// Evaluates mean-tail domination of the site laws by `xi` on `probe_xs`.
pub fn check_wmb(
    site_laws: &[ScalarDistribution],
    xi: &ScalarDistribution,
    probe_xs: &[f64],
    n: &MultiIndex,
) -> Result<WmbReport> {
    if site_laws.len() != n.volume() {
        return invalid(format!("{} site laws for a rectangle of {} sites", site_laws.len(), n.volume()));
    }
    if probe_xs.is_empty() {
        return invalid("probe grid is empty");
    }
    if let Some(x) = probe_xs.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return invalid(format!("probe points must be positive and finite, got {x}"));
    }
    xi.validate()?;
    // identical laws are grouped so an i.i.d. field averages to exactly one tail
    let mut groups: Vec<(ScalarDistribution, usize)> = Vec::new();
    for law in site_laws {
        law.validate()?;
        match groups.iter_mut().find(|(l, _)| l == law) {
            Some((_, c)) => *c += 1,
            None => groups.push((*law, 1)),
        }
    }
    let total = site_laws.len() as f64;
    let mut kappa1 = 0.0_f64;
    let mut kappa2 = f64::INFINITY;
    let mut probes = Vec::with_capacity(probe_xs.len());
    for &x in probe_xs {
        let mean_tail: f64 = groups.iter().map(|(l, c)| *c as f64 / total * l.tail_abs(x)).sum();
        let xi_tail = xi.tail_abs(x);
        let ratio = (xi_tail > 0.0).then(|| mean_tail / xi_tail);
        match ratio {
            Some(q) => {
                kappa1 = kappa1.max(q);
                kappa2 = kappa2.min(q);
            }
            None if mean_tail > 0.0 => kappa1 = f64::INFINITY,
            None => {}
        }
        probes.push(WmbProbe { x, mean_tail, xi_tail, ratio });
    }
    if kappa2.is_infinite() {
        kappa2 = 0.0;
    }
    let holds_wmd = kappa1.is_finite();
    Ok(WmbReport {
        kappa1_hat: kappa1,
        kappa2_hat: kappa2,
        probe_xs: probe_xs.to_vec(),
        holds_wmd,
        holds_wmb: holds_wmd && kappa2 > 0.0,
        probes,
    })
}

/// Gaussian integrals are cut at this many standard deviations.
const GAUSSIAN_CUT: f64 = 40.0;

/// `E|ξ|^r (log₊|ξ|)^{p-1}`.
///
/// Exact for atomic laws and for `p = 1`; otherwise adaptive quadrature
/// over `|x| >= 1`, where `log₊` is non-zero.
pub fn moment_functional(xi: &ScalarDistribution, r: f64, p: u32) -> Result<f64> {
    xi.validate()?;
    if !(r >= 1.0 && r.is_finite()) {
        return invalid(format!("r must be >= 1, got {r}"));
    }
    if p == 0 {
        return invalid("p must be >= 1");
    }
    if p == 1 {
        return Ok(xi.abs_moment(r));
    }
    if let Some(atoms) = xi.atoms() {
        return Ok(atoms.iter().map(|&(v, w)| w * log_weighted_power(v.abs(), r, p)).sum());
    }
    quadrature_moment(xi, r, p)
}

fn log_weighted_power(t: f64, r: f64, p: u32) -> f64 {
    if t <= 1.0 {
        return if p == 1 { t.powf(r) } else { 0.0 };
    }
    t.powf(r) * t.ln().powi(p as i32 - 1)
}

/// `∫_{|x| >= 1} |x|^r (ln|x|)^{p-1} f(x) dx` for a continuous law.
fn quadrature_moment(xi: &ScalarDistribution, r: f64, p: u32) -> Result<f64> {
    let (lo, hi) = xi.support().ok_or_else(|| Error::NumericFailure("law has no density".into()))?;
    let mut breaks = vec![1.0];
    let upper = match *xi {
        ScalarDistribution::Gaussian { sigma } => {
            let cut = GAUSSIAN_CUT * sigma;
            let mut t = sigma;
            while t < cut {
                breaks.push(t);
                t += sigma;
            }
            cut
        }
        _ => {
            breaks.push(lo.abs());
            breaks.push(hi.abs());
            lo.abs().max(hi.abs())
        }
    };
    if upper <= 1.0 {
        return Ok(0.0);
    }
    breaks.push(upper);
    breaks.retain(|&b| (1.0..=upper).contains(&b));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let density = |x: f64| xi.density(x).unwrap_or(0.0);
    let integrand = |t: f64| log_weighted_power(t, r, p) * (density(t) + density(-t));
    let mut total = 0.0;
    let mut error = 0.0;
    for w in breaks.windows(2) {
        let out = quadrature::double_exponential::integrate(integrand, w[0], w[1], 1e-13);
        total += out.integral;
        error += out.error_estimate;
    }
    let tolerance = 1e-9 * total.abs().max(1e-12);
    if !total.is_finite() || error > tolerance {
        return Err(Error::NumericFailure(format!(
            "quadrature did not converge for {xi:?}, r={r}, p={p}: integral {total}, error estimate {error} > {tolerance}"
        )));
    }
    Ok(total)
}

/// Number of ordered `p`-tuples of positive integers with product `nu`.
pub fn divisor_count(nu: u64, p: u32) -> u64 {
    if nu == 0 {
        return 0;
    }
    if p == 0 {
        return u64::from(nu == 1);
    }
    let mut count = 1u64;
    let mut rest = nu;
    let mut q = 2u64;
    while q * q <= rest {
        let mut e = 0u64;
        while rest.is_multiple_of(q) {
            rest /= q;
            e += 1;
        }
        if e > 0 {
            count *= binomial(e + u64::from(p) - 1, u64::from(p) - 1);
        }
        q += 1;
    }
    if rest > 1 {
        count *= u64::from(p);
    }
    count
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc as u64
}

/// Partial sums of `sum_n E ξ² I[|ξ| <= |n^α|] / |n^α|²` over the cube.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentSeries {
    pub partial_sum: f64,
    /// `(shell, contribution)` where shell is the largest coordinate.
    pub per_shell: Vec<(usize, f64)>,
}

impl MomentSeries {
    /// Contribution of the outermost shell.
    pub fn last_shell(&self) -> f64 {
        self.per_shell.last().map_or(0.0, |s| s.1)
    }
}

/// The series over `n` with every `nᵢ <= cube_n`, using exact truncated
/// second moments.
pub fn truncated_second_moment_series(
    xi: &ScalarDistribution,
    alpha: &AlphaVector,
    cube_n: usize,
) -> Result<MomentSeries> {
    xi.validate()?;
    if !(alpha.first() > 0.5) {
        return invalid(format!("the series needs alpha_1 > 1/2, got {}", alpha.first()));
    }
    if cube_n == 0 {
        return invalid("cube side must be >= 1");
    }
    let cube = MultiIndex::cube(alpha.dim(), cube_n)?;
    let mut shells = vec![0.0; cube_n];
    for coords in cube.rectangle() {
        let n = MultiIndex::new(coords)?;
        let norm = index_norm(&n, alpha)?;
        shells[n.max_coord() - 1] += xi.abs_moment_below(2.0, norm, Boundary::Included) / (norm * norm);
    }
    let per_shell: Vec<(usize, f64)> = shells.into_iter().enumerate().map(|(i, c)| (i + 1, c)).collect();
    Ok(MomentSeries { partial_sum: per_shell.iter().map(|s| s.1).sum(), per_shell })
}
