//! Monte Carlo properties of the samplers and estimators.

use nalgebra::{DMatrix, DVector};

use fieldconc::lattice::MultiIndex;
use fieldconc::montecarlo::{estimate_tail, sample_statistics, wilson_interval, with_workers, Statistic};
use fieldconc::rng::CounterRng;
use fieldconc::samplers::{sample_field, FieldDistribution, NeighborScheme, ScalarDistribution};
use fieldconc::series::{scan_series, SeriesSpec, WeightKind};

fn shape(c: &[usize]) -> MultiIndex {
    MultiIndex::new(c.to_vec()).unwrap()
}

fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c *= (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

#[test]
fn wilson_coverage_by_enumeration() {
    for n in 1..=30u64 {
        let mut total = 0.0;
        let mut worst = 1.0_f64;
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let coverage: f64 = (0..=n)
                .filter(|&k| {
                    let (lo, hi) = wilson_interval(k, n);
                    lo <= p && p <= hi
                })
                .map(|k| binomial_pmf(n, k, p))
                .sum();
            total += coverage;
            worst = worst.min(coverage);
        }
        let mean = total / 99.0;
        assert!(mean >= 0.94, "trials {n}: mean coverage {mean}");
        assert!(worst >= 0.75, "trials {n}: worst coverage {worst}");
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let dist = FieldDistribution::na_gaussian(1.0, -0.1, NeighborScheme::Nearest);
    let n = shape(&[3, 4]);
    let run = |w| {
        with_workers(w, || {
            let sampler = dist.prepare(&n).unwrap();
            let cols = sample_statistics(sampler.as_ref(), &Statistic::ALL, 3000, 11);
            let tail = estimate_tail(&dist, &n, Statistic::MaxAbs, 2.0, 3000, 11).unwrap();
            (cols, tail)
        })
        .unwrap()
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(
        a.0.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>(),
        b.0.iter().flatten().map(|v| v.to_bits()).collect::<Vec<_>>()
    );
    assert_eq!(a.1, b.1);
    let spec = SeriesSpec {
        alpha: fieldconc::lattice::AlphaVector::new(vec![0.75, 0.75]).unwrap(),
        r: 2.0,
        epsilon: 0.5,
        weight: WeightKind::Power,
        statistic: Statistic::MaxAbs,
        event: Default::default(),
        cube_n: 3,
    };
    let rad = FieldDistribution::independent(ScalarDistribution::RADEMACHER);
    let s1 = with_workers(1, || scan_series(&spec, &rad, 1000, 2).unwrap()).unwrap();
    let s3 = with_workers(3, || scan_series(&spec, &rad, 1000, 2).unwrap()).unwrap();
    assert_eq!(s1, s3);
}

#[test]
fn na_gaussian_neighbor_correlation() {
    let dist = FieldDistribution::na_gaussian(1.0, -0.5, NeighborScheme::Nearest);
    let n = shape(&[2]);
    let trials = 200_000;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for t in 0..trials {
        let f = sample_field(&dist, &n, 5, t).unwrap();
        let (x, y) = (f.values()[0], f.values()[1]);
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
    }
    let corr = sxy / (sxx * syy).sqrt();
    assert!((corr + 0.5).abs() < 0.01, "correlation {corr}");
}

#[test]
fn rademacher_sites_have_zero_mean() {
    let dist = FieldDistribution::independent(ScalarDistribution::RADEMACHER);
    let n = shape(&[4, 4]);
    let trials = 20_000;
    let mut total = 0.0;
    for t in 0..trials {
        total += sample_field(&dist, &n, 8, t).unwrap().values().iter().sum::<f64>();
    }
    let mean = total / (trials as f64 * 16.0);
    assert!(mean.abs() < 3.0 / (trials as f64 * 16.0).sqrt(), "mean {mean}");
}

#[test]
fn na_products_of_increasing_maps() {
    // E prod f(X_k) <= prod E f(X_k) for non-decreasing f >= 0
    let f = |x: f64| x.exp().min(3.0);
    for (sites, rho) in [(2usize, -0.4), (3, -0.3), (4, -0.2)] {
        let dist = FieldDistribution::na_gaussian(1.0, rho, NeighborScheme::All);
        let n = shape(&[sites]);
        let trials = 100_000u64;
        let mut marginal = vec![0.0; sites];
        let (mut prod_sum, mut prod_sq) = (0.0, 0.0);
        let sampler = dist.prepare(&n).unwrap();
        let rng = CounterRng::new(17);
        for t in 0..trials {
            let field = sampler.sample(&rng, t);
            let mut prod = 1.0;
            for (m, &x) in marginal.iter_mut().zip(field.values()) {
                let v = f(x);
                *m += v;
                prod *= v;
            }
            prod_sum += prod;
            prod_sq += prod * prod;
        }
        let tn = trials as f64;
        let mean_prod = prod_sum / tn;
        let se = ((prod_sq / tn - mean_prod * mean_prod) / tn).sqrt();
        let prod_means: f64 = marginal.iter().map(|m| m / tn).product();
        assert!(mean_prod <= prod_means + 3.0 * se, "{sites} sites: {mean_prod} vs {prod_means} (se {se})");
    }
}

#[test]
fn martingale_product_regression_on_past() {
    let axis = ScalarDistribution::Uniform { a: -1.0, b: 1.0 };
    let dist = FieldDistribution::martingale_product(axis);
    let n = shape(&[3, 3]);
    let sampler = dist.prepare(&n).unwrap();
    let rng = CounterRng::new(21);
    let trials = 50_000usize;
    // regress X_(3,3) on an intercept and the eight sites of its past quadrant
    let cols = 9;
    let mut design = DMatrix::<f64>::zeros(trials, cols);
    let mut target = DVector::<f64>::zeros(trials);
    for t in 0..trials {
        let f = sampler.sample(&rng, t as u64);
        let v = f.values();
        design[(t, 0)] = 1.0;
        for (j, &x) in v[..8].iter().enumerate() {
            design[(t, j + 1)] = x;
        }
        target[t] = v[8];
    }
    let gram = design.transpose() * &design;
    let inv = gram.clone().try_inverse().unwrap();
    let beta = &inv * design.transpose() * &target;
    let resid = &target - &design * &beta;
    let sigma2 = resid.norm_squared() / (trials - cols) as f64;
    for j in 0..cols {
        let se = (sigma2 * inv[(j, j)]).sqrt();
        assert!(beta[j].abs() <= 3.0 * se, "coefficient {j}: {} (se {se})", beta[j]);
    }
}

#[test]
fn product_field_is_determined_by_its_past_for_sign_axes() {
    // with ±1 axes, X_(2,2) = X_(1,1) X_(1,2) X_(2,1): zero linear regression,
    // but not a strong martingale difference
    let dist = FieldDistribution::martingale_product(ScalarDistribution::RADEMACHER);
    let n = shape(&[2, 2]);
    for t in 0..1000 {
        let v = sample_field(&dist, &n, 3, t).unwrap().into_values();
        assert_eq!(v[3], v[0] * v[1] * v[2]);
    }
}
