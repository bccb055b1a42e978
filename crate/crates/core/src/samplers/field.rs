//! Field laws and their samplers.
//!
//! Each dependence kind is a [`FieldSampler`] strategy, looked up by name in
//! [`SAMPLERS`] and prepared once per rectangle. Preparation does the heavy
//! lifting (site lanes, covariance square root); sampling a trial is then a
//! pure function of `(seed, trial)`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::{FieldSample, MultiIndex};
use crate::rng::{axis_lane, site_lane, CounterRng};
use crate::samplers::scalar::ScalarDistribution;

/// Largest rectangle the dense Gaussian factorization accepts.
pub const MAX_GAUSSIAN_SITES: usize = 4096;

/// Which neighbours share the negative correlation `rho`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborScheme {
    /// Sites at lattice (L1) distance one.
    #[default]
    Nearest,
    /// Every pair of distinct sites.
    All,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependence {
    #[default]
    Independent,
    NaGaussian {
        rho: f64,
        #[serde(default)]
        neighbors: NeighborScheme,
    },
    MartingaleProduct,
}

impl Dependence {
    pub fn name(&self) -> &'static str {
        match self {
            Dependence::Independent => "independent",
            Dependence::NaGaussian { .. } => "na_gaussian",
            Dependence::MartingaleProduct => "martingale_product",
        }
    }

    pub fn hypothesis(&self) -> Hypothesis {
        match self {
            Dependence::Independent | Dependence::NaGaussian { .. } => Hypothesis::NegativelyDependent,
            Dependence::MartingaleProduct => Hypothesis::MartingaleDifferences,
        }
    }
}

/// Hypothesis class a field family satisfies, used to gate bound checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hypothesis {
    NegativelyDependent,
    MartingaleDifferences,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteOverride {
    pub site: MultiIndex,
    pub dist: ScalarDistribution,
}

/// Law of a random field on a rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDistribution {
    /// Shared site law; for `martingale_product` the shared axis law.
    pub dist: ScalarDistribution,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_site: Vec<SiteOverride>,
    #[serde(default)]
    pub dependence: Dependence,
    /// Per-axis generators for `martingale_product`; defaults to `dist` on every axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axes: Option<Vec<ScalarDistribution>>,
}

impl FieldDistribution {
    pub fn independent(dist: ScalarDistribution) -> Self {
        Self { dist, per_site: Vec::new(), dependence: Dependence::Independent, axes: None }
    }

    pub fn na_gaussian(sigma: f64, rho: f64, neighbors: NeighborScheme) -> Self {
        Self {
            dist: ScalarDistribution::Gaussian { sigma },
            per_site: Vec::new(),
            dependence: Dependence::NaGaussian { rho, neighbors },
            axes: None,
        }
    }

    pub fn martingale_product(axis: ScalarDistribution) -> Self {
        Self { dist: axis, per_site: Vec::new(), dependence: Dependence::MartingaleProduct, axes: None }
    }

    pub fn hypothesis(&self) -> Hypothesis {
        self.dependence.hypothesis()
    }

    /// Site laws in row-major order over `n`, after per-site overrides.
    fn marginals(&self, n: &MultiIndex) -> Result<Vec<ScalarDistribution>> {
        self.dist.validate()?;
        let mut overrides = HashMap::with_capacity(self.per_site.len());
        for o in &self.per_site {
            if o.site.dim() != n.dim() {
                return invalid(format!("per_site entry {} has wrong dimension for lattice {n}", o.site));
            }
            o.dist.validate()?;
            overrides.insert(o.site.coords().to_vec(), o.dist);
        }
        Ok(n.rectangle().map(|k| overrides.get(&k).copied().unwrap_or(self.dist)).collect())
    }

    fn axis_laws(&self, d: usize) -> Result<Vec<ScalarDistribution>> {
        let axes = match &self.axes {
            Some(a) if a.len() != d => {
                return invalid(format!("martingale_product needs {d} axis laws, got {}", a.len()))
            }
            Some(a) => a.clone(),
            None => vec![self.dist; d],
        };
        for (i, a) in axes.iter().enumerate() {
            a.validate()?;
            if !a.is_centered() {
                return invalid(format!(
                    "martingale_product axis {} generator {a:?} is not centered (mean {})",
                    i + 1,
                    a.mean()
                ));
            }
        }
        Ok(axes)
    }

    /// Exact marginal law of every site, row-major over `n`.
    pub fn site_laws(&self, n: &MultiIndex) -> Result<Vec<ScalarDistribution>> {
        match self.dependence {
            Dependence::Independent => self.marginals(n),
            Dependence::NaGaussian { .. } => {
                let laws = self.marginals(n)?;
                for l in &laws {
                    if !matches!(l, ScalarDistribution::Gaussian { .. }) {
                        return invalid(format!("na_gaussian needs gaussian marginals, got {l:?}"));
                    }
                }
                Ok(laws)
            }
            Dependence::MartingaleProduct => {
                if !self.per_site.is_empty() {
                    return invalid("martingale_product does not take per_site overrides");
                }
                let axes = self.axis_laws(n.dim())?;
                let law = product_law(&axes)?;
                Ok(vec![law; n.volume()])
            }
        }
    }

    /// Builds the sampler for rectangle `n`.
    pub fn prepare(&self, n: &MultiIndex) -> Result<Box<dyn FieldSampler>> {
        let name = self.dependence.name();
        let (_, factory) = SAMPLERS
            .iter()
            .find(|(k, _)| *k == name)
            .ok_or_else(|| Error::InvalidInput(format!("no sampler registered for {name}")))?;
        factory(self, n)
    }
}

/// Law of `prod_i ε_i` for independent two-point or zero axis laws.
fn product_law(axes: &[ScalarDistribution]) -> Result<ScalarDistribution> {
    let mut c = 1.0;
    for a in axes {
        match *a {
            ScalarDistribution::Constant { c: 0.0 } => return Ok(ScalarDistribution::Constant { c: 0.0 }),
            ScalarDistribution::TwoPoint { c: ci } => c *= ci.abs(),
            other => {
                return Err(Error::InvalidInput(format!(
                    "no closed-form site law for martingale_product with {other:?} axes; \
                     use two_point axis generators"
                )))
            }
        }
    }
    Ok(ScalarDistribution::TwoPoint { c })
}

/// A field law prepared for one rectangle.
pub trait FieldSampler: Send + Sync {
    fn shape(&self) -> &MultiIndex;

    /// Writes trial `trial` into `out` (row-major, `|n|` values). `scratch`
    /// is caller-owned working memory reused across trials.
    fn sample_into(&self, rng: &CounterRng, trial: u64, out: &mut [f64], scratch: &mut Vec<f64>);

    fn sample(&self, rng: &CounterRng, trial: u64) -> FieldSample {
        let mut out = vec![0.0; self.shape().volume()];
        self.sample_into(rng, trial, &mut out, &mut Vec::new());
        FieldSample::new(self.shape().clone(), out).expect("sampler output is well-formed")
    }
}

type SamplerFactory = fn(&FieldDistribution, &MultiIndex) -> Result<Box<dyn FieldSampler>>;

/// Registered dependence kinds.
pub const SAMPLERS: &[(&str, SamplerFactory)] = &[
    ("independent", IndependentSampler::build),
    ("na_gaussian", GaussianSampler::build),
    ("martingale_product", ProductMartingaleSampler::build),
];

fn lanes(n: &MultiIndex) -> Vec<u64> {
    n.rectangle().map(|k| site_lane(&k)).collect()
}

/// Independent sites, each drawn from its own lane.
pub struct IndependentSampler {
    shape: MultiIndex,
    laws: Vec<ScalarDistribution>,
    lanes: Vec<u64>,
}

impl IndependentSampler {
    fn build(dist: &FieldDistribution, n: &MultiIndex) -> Result<Box<dyn FieldSampler>> {
        Ok(Box::new(Self { shape: n.clone(), laws: dist.site_laws(n)?, lanes: lanes(n) }))
    }
}

impl FieldSampler for IndependentSampler {
    fn shape(&self) -> &MultiIndex {
        &self.shape
    }

    fn sample_into(&self, rng: &CounterRng, trial: u64, out: &mut [f64], _: &mut Vec<f64>) {
        for ((o, law), &lane) in out.iter_mut().zip(&self.laws).zip(&self.lanes) {
            *o = law.sample(&mut rng.stream(trial, lane));
        }
    }
}

/// Jointly Gaussian field with non-positive correlations, `X = A Z` with
/// `A` the symmetric square root of the covariance.
pub struct GaussianSampler {
    shape: MultiIndex,
    root: DMatrix<f64>,
    lanes: Vec<u64>,
}

impl GaussianSampler {
    fn build(dist: &FieldDistribution, n: &MultiIndex) -> Result<Box<dyn FieldSampler>> {
        let Dependence::NaGaussian { rho, neighbors } = dist.dependence else {
            return invalid("gaussian sampler needs na_gaussian dependence");
        };
        let sites = n.volume();
        if sites > MAX_GAUSSIAN_SITES {
            return invalid(format!("na_gaussian supports at most {MAX_GAUSSIAN_SITES} sites, got {sites}"));
        }
        let cov = covariance(dist, n, rho, neighbors)?;
        let root = psd_sqrt(cov)?;
        Ok(Box::new(Self { shape: n.clone(), root, lanes: lanes(n) }))
    }

    /// Covariance matrix the sampler realizes.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.root * &self.root
    }
}

/// Covariance of an `na_gaussian` field on `n`.
pub fn covariance(
    dist: &FieldDistribution,
    n: &MultiIndex,
    rho: f64,
    neighbors: NeighborScheme,
) -> Result<DMatrix<f64>> {
    if !rho.is_finite() || rho > 0.0 {
        return invalid(format!("na_gaussian needs rho <= 0, got {rho}"));
    }
    if rho < -1.0 {
        return invalid(format!("correlation must be >= -1, got {rho}"));
    }
    let sigmas: Vec<f64> = dist
        .site_laws(n)?
        .iter()
        .map(|l| match *l {
            ScalarDistribution::Gaussian { sigma } => sigma,
            _ => unreachable!("site_laws checked gaussian marginals"),
        })
        .collect();
    let sites: Vec<Vec<usize>> = n.rectangle().collect();
    let m = sites.len();
    Ok(DMatrix::from_fn(m, m, |i, j| {
        if i == j {
            return sigmas[i] * sigmas[i];
        }
        let linked = match neighbors {
            NeighborScheme::All => true,
            NeighborScheme::Nearest => sites[i].iter().zip(&sites[j]).map(|(a, b)| a.abs_diff(*b)).sum::<usize>() == 1,
        };
        if linked {
            rho * sigmas[i] * sigmas[j]
        } else {
            0.0
        }
    }))
}

fn psd_sqrt(cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let scale = cov.diagonal().max();
    let eig = SymmetricEigen::new(cov);
    let min = eig.eigenvalues.min();
    if min < -1e-10 * scale {
        return invalid(format!(
            "requested correlations do not form a positive semidefinite covariance (min eigenvalue {min:.3e})"
        ));
    }
    let roots = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()));
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

impl FieldSampler for GaussianSampler {
    fn shape(&self) -> &MultiIndex {
        &self.shape
    }

    fn sample_into(&self, rng: &CounterRng, trial: u64, out: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.clear();
        scratch.extend(self.lanes.iter().map(|&lane| {
            let z: f64 = StandardNormal.sample(&mut rng.stream(trial, lane));
            z
        }));
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, z) in scratch.iter().enumerate() {
                acc += self.root[(i, j)] * z;
            }
            *o = acc;
        }
    }
}

/// `X_k = prod_i ε^{(i)}_{k_i}` with independent centered axis variables.
pub struct ProductMartingaleSampler {
    shape: MultiIndex,
    axes: Vec<ScalarDistribution>,
}

impl ProductMartingaleSampler {
    fn build(dist: &FieldDistribution, n: &MultiIndex) -> Result<Box<dyn FieldSampler>> {
        if !dist.per_site.is_empty() {
            return invalid("martingale_product does not take per_site overrides");
        }
        Ok(Box::new(Self { shape: n.clone(), axes: dist.axis_laws(n.dim())? }))
    }
}

impl FieldSampler for ProductMartingaleSampler {
    fn shape(&self) -> &MultiIndex {
        &self.shape
    }

    fn sample_into(&self, rng: &CounterRng, trial: u64, out: &mut [f64], scratch: &mut Vec<f64>) {
        let coords = self.shape.coords();
        scratch.clear();
        for (axis, law) in self.axes.iter().enumerate() {
            for m in 1..=coords[axis] {
                scratch.push(law.sample(&mut rng.stream(trial, axis_lane(axis, m))));
            }
        }
        // offsets[i] = start of axis i in scratch
        let mut offsets = [0usize; 16];
        let mut heap_offsets = Vec::new();
        let offsets: &mut [usize] = if coords.len() <= 16 {
            &mut offsets[..coords.len()]
        } else {
            heap_offsets.resize(coords.len(), 0);
            &mut heap_offsets
        };
        let mut acc = 0;
        for (i, &c) in coords.iter().enumerate() {
            offsets[i] = acc;
            acc += c;
        }
        let strides = self.shape.strides();
        for (ord, o) in out.iter_mut().enumerate() {
            let mut v = 1.0;
            for i in 0..coords.len() {
                let ki = (ord / strides[i]) % coords[i];
                v *= scratch[offsets[i] + ki];
            }
            *o = v;
        }
    }
}

/// One realization of `dist` on `n` for `(seed, trial)`.
pub fn sample_field(dist: &FieldDistribution, n: &MultiIndex, seed: u64, trial: u64) -> Result<FieldSample> {
    Ok(dist.prepare(n)?.sample(&CounterRng::new(seed), trial))
}
