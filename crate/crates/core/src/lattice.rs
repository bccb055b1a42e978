//! Multi-indices on the positive integer lattice, rectangle fields and
//! their partial sums, and the norming sequences `|n^α|`.
//!
//! Fields are stored row-major with coordinate 1 varying slowest. Every
//! rectangle `{1..n_1} x ... x {1..n_d}` is anchored at the all-ones corner.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// A point of `N^d`, `d >= 1`, every coordinate `>= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(coords: Vec<usize>) -> Result<Self> {
        if coords.is_empty() {
            return invalid("multi-index must have at least one coordinate");
        }
        if coords.contains(&0) {
            return invalid(format!("multi-index coordinates must be >= 1, got {coords:?}"));
        }
        Ok(Self(coords))
    }

    /// The cube `(side, ..., side)` in dimension `d`.
    pub fn cube(d: usize, side: usize) -> Result<Self> {
        Self::new(vec![side; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    /// `|n| = n_1 * ... * n_d`, the number of lattice points `k <= n`.
    pub fn volume(&self) -> usize {
        self.0.iter().product()
    }

    /// Coordinatewise partial order.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Largest coordinate; the shell a cube index belongs to.
    pub fn max_coord(&self) -> usize {
        *self.0.iter().max().expect("non-empty")
    }

    /// Row-major ordinal of `k` inside the rectangle `self` (0-based).
    pub fn ordinal_of(&self, k: &[usize]) -> usize {
        debug_assert_eq!(k.len(), self.dim());
        let mut ord = 0;
        for (&ki, &ni) in k.iter().zip(&self.0) {
            ord = ord * ni + (ki - 1);
        }
        ord
    }

    /// Row-major strides (in elements) of the rectangle `self`.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for i in (0..self.dim().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.0[i + 1];
        }
        strides
    }

    /// All `k <= self` in row-major order.
    pub fn rectangle(&self) -> Rectangle<'_> {
        Rectangle { shape: self, next: Some(vec![1; self.dim()]) }
    }
}

impl TryFrom<Vec<usize>> for MultiIndex {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<MultiIndex> for Vec<usize> {
    fn from(m: MultiIndex) -> Self {
        m.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Row-major iterator over a rectangle.
pub struct Rectangle<'a> {
    shape: &'a MultiIndex,
    next: Option<Vec<usize>>,
}

impl Iterator for Rectangle<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        let mut axis = succ.len();
        while axis > 0 {
            axis -= 1;
            if succ[axis] < self.shape.0[axis] {
                succ[axis] += 1;
                self.next = Some(succ);
                return Some(cur);
            }
            succ[axis] = 1;
        }
        Some(cur)
    }
}

/// Exponent vector `α`, non-decreasing with `α_1 >= 1/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AlphaVector {
    alphas: Vec<f64>,
    p: usize,
}

impl AlphaVector {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return invalid("alpha vector must be non-empty");
        }
        if alphas.iter().any(|a| !a.is_finite()) {
            return invalid("alpha entries must be finite");
        }
        if alphas[0] < 0.5 {
            return invalid(format!("min alpha must be >= 1/2, got {}", alphas[0]));
        }
        if alphas.windows(2).any(|w| w[1] < w[0]) {
            return invalid(format!("alphas must be non-decreasing, got {alphas:?}"));
        }
        let p = alphas.iter().take_while(|&&a| a == alphas[0]).count();
        Ok(Self { alphas, p })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn first(&self) -> f64 {
        self.alphas[0]
    }

    /// `p = max{k : α_k = α_1}`.
    pub fn p(&self) -> usize {
        self.p
    }
}

impl TryFrom<Vec<f64>> for AlphaVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<AlphaVector> for Vec<f64> {
    fn from(a: AlphaVector) -> Self {
        a.alphas
    }
}

/// One realization `{X_k, k <= n}` of a random field.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    shape: MultiIndex,
    values: Vec<f64>,
}

impl FieldSample {
    pub fn new(shape: MultiIndex, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.volume() {
            return invalid(format!("field of shape {shape} needs {} values, got {}", shape.volume(), values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("field values must be finite");
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: MultiIndex) -> Self {
        let values = vec![0.0; shape.volume()];
        Self { shape, values }
    }

    pub fn shape(&self) -> &MultiIndex {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, k: &[usize]) -> f64 {
        self.values[self.shape.ordinal_of(k)]
    }

    /// Same shape, values mapped sitewise.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> FieldSample {
        FieldSample { shape: self.shape.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// CSV form: first line `dim,n_1,...,n_d`, then one value per line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "{}", self.shape.dim())?;
        for c in self.shape.coords() {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
        for v in &self.values {
            writeln!(w, "{v:?}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| Error::InvalidInput("empty field csv".into()))??;
        let nums: Vec<usize> = header
            .trim()
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("bad field csv header {header:?}: {e}")))?;
        match nums.split_first() {
            Some((&d, shape)) if d == shape.len() => {
                let shape = MultiIndex::new(shape.to_vec())?;
                let mut values = Vec::with_capacity(shape.volume());
                for line in lines {
                    let line = line?;
                    let t = line.trim();
                    if t.is_empty() {
                        continue;
                    }
                    values.push(
                        t.parse::<f64>().map_err(|e| Error::InvalidInput(format!("bad field value {t:?}: {e}")))?,
                    );
                }
                Self::new(shape, values)
            }
            _ => invalid(format!("field csv header {header:?} must be `dim,shape...`")),
        }
    }
}

/// Partial sums `S_k` for every `k <= n`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefixSumTable {
    shape: MultiIndex,
    sums: Vec<f64>,
}

impl PrefixSumTable {
    pub fn shape(&self) -> &MultiIndex {
        &self.shape
    }

    pub fn sums(&self) -> &[f64] {
        &self.sums
    }

    /// `S_k`.
    pub fn at(&self, k: &[usize]) -> f64 {
        self.sums[self.shape.ordinal_of(k)]
    }

    /// `S_n` for the full rectangle.
    pub fn total(&self) -> f64 {
        *self.sums.last().expect("non-empty")
    }

    pub fn max_abs(&self) -> f64 {
        self.sums.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    pub fn max(&self) -> f64 {
        self.sums.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Summed-area table of `field`, one cumulative pass per axis in axis order.
pub fn prefix_sums(field: &FieldSample) -> PrefixSumTable {
    let mut sums = field.values.clone();
    accumulate_in_place(&field.shape, &mut sums);
    PrefixSumTable { shape: field.shape.clone(), sums }
}

/// Turns `buf` (site values, row-major over `shape`) into partial sums.
pub(crate) fn accumulate_in_place(shape: &MultiIndex, buf: &mut [f64]) {
    let strides = shape.strides();
    for (axis, &stride) in strides.iter().enumerate() {
        let len = shape.coords()[axis];
        if len == 1 {
            continue;
        }
        let block = stride * len;
        for base in (0..buf.len()).step_by(block) {
            for off in 0..stride {
                let mut acc = buf[base + off];
                for step in 1..len {
                    let idx = base + off + step * stride;
                    acc += buf[idx];
                    buf[idx] = acc;
                }
            }
        }
    }
}

/// `max_{k <= n} |S_k|`.
pub fn max_abs_partial_sum(field: &FieldSample) -> f64 {
    prefix_sums(field).max_abs()
}

/// `|n^α| = n_1^{α_1} * ... * n_d^{α_d}`.
pub fn index_norm(n: &MultiIndex, alpha: &AlphaVector) -> Result<f64> {
    if n.dim() != alpha.dim() {
        return invalid(format!("dimension mismatch: n has {}, alpha has {}", n.dim(), alpha.dim()));
    }
    Ok(n.coords().iter().zip(alpha.alphas()).map(|(&ni, &a)| (ni as f64).powf(a)).product())
}

/// `sqrt(P * max(1, ln P)) * prod_{i>p} n_i^{α_i}` with `P = prod_{i<=p} n_i`.
///
/// The log factor is floored at 1 so the normalizer never vanishes at `P = 1`.
pub fn log_norm(n: &MultiIndex, alpha: &AlphaVector) -> Result<f64> {
    if n.dim() != alpha.dim() {
        return invalid(format!("dimension mismatch: n has {}, alpha has {}", n.dim(), alpha.dim()));
    }
    if alpha.first() != 0.5 {
        return invalid(format!("log norming requires alpha_1 = 1/2, got {}", alpha.first()));
    }
    let p = alpha.p();
    let head: f64 = n.coords()[..p].iter().map(|&c| c as f64).product();
    let log_factor = head.ln().max(1.0);
    let tail: f64 = n.coords()[p..].iter().zip(&alpha.alphas()[p..]).map(|(&ni, &a)| (ni as f64).powf(a)).product();
    Ok((head * log_factor).sqrt() * tail)
}

/// `card{(n_1..n_p) in N^p : n_1 * ... * n_p <= bound}` by direct recursion.
pub fn count_points_with_product_at_most(bound: u64, p: u32) -> u64 {
    assert!(bound >= 1 && p >= 1, "count_points_with_product_at_most needs bound >= 1, p >= 1");
    fn rec(bound: u64, p: u32) -> u64 {
        if p == 1 {
            return bound;
        }
        (1..=bound).map(|first| rec(bound / first, p - 1)).sum()
    }
    rec(bound, p)
}
