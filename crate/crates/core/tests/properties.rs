use proptest::prelude::*;

use fieldconc::bounds::{
    martingale_fuk_nagaev_onesided, martingale_fuk_nagaev_twosided, martingale_hj_bound, nd_fuk_nagaev_bound,
    nd_hj_bound, MomentAggregates, TAIL_BOUNDS,
};
use fieldconc::conditions::divisor_count;
use fieldconc::lattice::{
    count_points_with_product_at_most, index_norm, max_abs_partial_sum, prefix_sums, AlphaVector, FieldSample,
    MultiIndex,
};
use fieldconc::montecarlo::wilson_interval;
use fieldconc::samplers::{sample_field, truncate, FieldDistribution, NeighborScheme, ScalarDistribution};

type BoundFn = fn(f64, f64, &MomentAggregates) -> fieldconc::Result<fieldconc::bounds::BoundValue>;

fn field_strategy() -> impl Strategy<Value = FieldSample> {
    prop::collection::vec(1usize..=6, 1..=3).prop_flat_map(|shape| {
        let len: usize = shape.iter().product();
        prop::collection::vec(-10.0f64..10.0, len)
            .prop_map(move |v| FieldSample::new(MultiIndex::new(shape.clone()).unwrap(), v).unwrap())
    })
}

fn brute_force_sum(field: &FieldSample, k: &[usize]) -> f64 {
    let upper = MultiIndex::new(k.to_vec()).unwrap();
    upper.rectangle().map(|j| field.get(&j)).sum()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// Aggregates with `Λ`, `D`, `Λ̃` no larger than `M/y^{r-1}`, as for real laws.
fn agg_at(r: f64, m: f64, shift_frac: f64, y: f64, dim: u32) -> MomentAggregates {
    let shift = shift_frac * m / y.powf(r - 1.0);
    MomentAggregates { m_r: m, lambda: shift, b_r: m, d: shift, m_tilde_r: m, lambda_tilde: shift, r, dim }
}

const FUK_NAGAEV: [(&str, BoundFn); 3] = [
    ("nd_fuk_nagaev", nd_fuk_nagaev_bound),
    ("onesided", martingale_fuk_nagaev_onesided),
    ("twosided", martingale_fuk_nagaev_twosided),
];
const POLYNOMIAL: [(&str, BoundFn); 2] = [("nd_hj", nd_hj_bound), ("martingale_hj", martingale_hj_bound)];

proptest! {
    #[test]
    fn max_abs_partial_sum_matches_enumeration(field in field_strategy()) {
        let table = prefix_sums(&field);
        let mut brute_max = 0.0_f64;
        for k in field.shape().rectangle() {
            let s = brute_force_sum(&field, &k);
            prop_assert!(close(table.at(&k), s), "S_{:?}: {} vs {}", k, table.at(&k), s);
            brute_max = brute_max.max(s.abs());
        }
        prop_assert!(close(max_abs_partial_sum(&field), brute_max));
    }

    #[test]
    fn prefix_sums_are_linear(x in field_strategy(), a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        let dist = FieldDistribution::independent(ScalarDistribution::Uniform { a: -5.0, b: 5.0 });
        let y = sample_field(&dist, x.shape(), seed, 0).unwrap();
        let combo: Vec<f64> = x.values().iter().zip(y.values()).map(|(u, v)| a * u + b * v).collect();
        let combo = FieldSample::new(x.shape().clone(), combo).unwrap();
        let (sx, sy, sc) = (prefix_sums(&x), prefix_sums(&y), prefix_sums(&combo));
        // rounding in a summed-area table is bounded relative to the total absolute mass
        let mass = |f: &FieldSample| f.values().iter().map(|v| v.abs()).sum::<f64>();
        let scale = mass(&combo) + a.abs() * mass(&x) + b.abs() * mass(&y);
        for ((c, u), v) in sc.sums().iter().zip(sx.sums()).zip(sy.sums()) {
            prop_assert!((c - (a * u + b * v)).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn equal_exponents_reduce_to_a_power(coords in prop::collection::vec(1usize..=50, 1..=4), a in 0.5f64..3.0) {
        let n = MultiIndex::new(coords.clone()).unwrap();
        let alpha = AlphaVector::new(vec![a; coords.len()]).unwrap();
        let volume = coords.iter().product::<usize>() as f64;
        let norm = index_norm(&n, &alpha).unwrap();
        let power = volume.powf(a);
        prop_assert!((norm - power).abs() <= 1e-12 * power, "{} vs {}", norm, power);
    }

    #[test]
    fn divisor_sums_count_points(bound in 1u64..=2000, p in 1u32..=4) {
        let sum: u64 = (1..=bound).map(|nu| divisor_count(nu, p)).sum();
        prop_assert_eq!(sum, count_points_with_product_at_most(bound, p));
    }

    #[test]
    fn truncation_splits_exactly(field in field_strategy(), a in 0.01f64..12.0, flip in any::<bool>()) {
        // sprinkle signed zeros in as well
        let values: Vec<f64> = field.values().iter().map(|&v| if v.abs() < 0.5 { if flip { -0.0 } else { 0.0 } } else { v }).collect();
        let field = FieldSample::new(field.shape().clone(), values).unwrap();
        let pair = truncate(&field, a).unwrap();
        for ((lo, hi), x) in pair.low_part.values().iter().zip(pair.high_part.values()).zip(field.values()) {
            prop_assert_eq!((lo + hi).to_bits(), x.to_bits());
            prop_assert!(*lo == 0.0 || *hi == 0.0);
        }
    }

    #[test]
    fn sampling_is_bit_reproducible(seed in any::<u64>(), trial in any::<u64>(), rho in -0.2f64..0.0) {
        let dist = FieldDistribution::na_gaussian(1.0, rho, NeighborScheme::Nearest);
        let n = MultiIndex::new(vec![3, 3]).unwrap();
        let a = sample_field(&dist, &n, seed, trial).unwrap().into_values();
        let b = sample_field(&dist, &n, seed, trial).unwrap().into_values();
        prop_assert_eq!(a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn wilson_stays_in_unit_interval(trials in 1u64..100_000, at_top in any::<bool>()) {
        let hits = if at_top { trials } else { 0 };
        let (lo, hi) = wilson_interval(hits, trials);
        prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo <= hi);
    }

    #[test]
    fn fuk_nagaev_terms_decrease_in_x(
        r in 1.0f64..=2.0, m in 0.01f64..50.0, y in 0.1f64..10.0, dim in 1u32..=4,
        x0 in 0.01f64..100.0, step in 1.0001f64..2.0,
    ) {
        // without a shift the terms fall for every x
        let agg = agg_at(r, m, 0.0, y, dim);
        for (name, f) in FUK_NAGAEV {
            let mut x = x0;
            let mut prev = f(x, y, &agg).unwrap().analytic_term;
            for _ in 0..20 {
                x *= step;
                let cur = f(x, y, &agg).unwrap().analytic_term;
                prop_assert!(cur <= prev, "{}: x={} {} > {}", name, x, cur, prev);
                prev = cur;
            }
        }
    }

    #[test]
    fn shifted_fuk_nagaev_terms_decrease_in_x(
        r in 1.0f64..=2.0, m in 0.01f64..50.0, y in 0.1f64..10.0, dim in 1u32..=4,
        frac in 0.0f64..=1.0, u0 in 1.7183f64..1e4, step in 1.0001f64..2.0,
    ) {
        // x y^{r-1}/M = u0 >= e - 1 at the first grid point
        let agg = agg_at(r, m, frac, y, dim);
        let x = u0 * m / y.powf(r - 1.0);
        for (name, f) in FUK_NAGAEV {
            let mut prev = f(x, y, &agg).unwrap().analytic_term;
            let mut xi = x;
            for _ in 0..20 {
                xi *= step;
                let cur = f(xi, y, &agg).unwrap().analytic_term;
                prop_assert!(cur <= prev, "{}: x={} {} > {}", name, xi, cur, prev);
                prev = cur;
            }
        }
    }

    #[test]
    fn polynomial_terms_decrease_in_x(
        r in 1.0f64..=2.0, m in 0.0f64..50.0, j in 0.5f64..5.0, dim in 1u32..=4,
        x0 in 0.01f64..100.0, step in 1.0001f64..2.0,
    ) {
        let agg = agg_at(r, m, 0.0, 1.0, dim);
        for (name, f) in POLYNOMIAL {
            let mut x = x0;
            let mut prev = f(x, j, &agg).unwrap().analytic_term;
            for _ in 0..20 {
                x *= step;
                let cur = f(x, j, &agg).unwrap().analytic_term;
                prop_assert!(cur <= prev, "{}: x={} {} > {}", name, x, cur, prev);
                prev = cur;
            }
        }
    }

    #[test]
    fn terms_grow_with_the_moment(
        r in 1.0f64..=2.0, y in 0.1f64..10.0, dim in 1u32..=4, frac in 0.0f64..=1.0,
        m1 in 0.01f64..10.0, growth in 1.0001f64..3.0, u_end in 1.7183f64..1e4, j in 0.5f64..5.0,
    ) {
        let m2 = m1 * growth;
        // the larger moment still gives x y^{r-1}/M >= e - 1
        let x = u_end * m2 / y.powf(r - 1.0);
        let lo = agg_at(r, m1, frac, y, dim);
        let hi = MomentAggregates { m_r: m2, b_r: m2, m_tilde_r: m2, ..lo };
        for (name, f) in FUK_NAGAEV {
            let (a, b) = (f(x, y, &lo).unwrap().analytic_term, f(x, y, &hi).unwrap().analytic_term);
            prop_assert!(a <= b, "{}: M={} gives {}, M={} gives {}", name, m1, a, m2, b);
        }
        for (name, f) in POLYNOMIAL {
            let (a, b) = (f(x, j, &lo).unwrap().analytic_term, f(x, j, &hi).unwrap().analytic_term);
            prop_assert!(a <= b, "{}: M={} gives {}, M={} gives {}", name, m1, a, m2, b);
        }
    }

    #[test]
    fn fuk_nagaev_at_x_over_j_is_below_hj(
        r in 1.0f64..=2.0, m in 0.01f64..50.0, scaled_x in 1.0f64..=100.0, j in 1u32..=3,
    ) {
        let j = f64::from(j);
        let x = scaled_x * m.powf(1.0 / r);
        let agg = agg_at(r, m, 0.0, x / j, 1);
        let fnv = nd_fuk_nagaev_bound(x, x / j, &agg).unwrap().analytic_term;
        let hj = nd_hj_bound(x, j, &agg).unwrap().analytic_term;
        prop_assert!(fnv <= hj, "x={} j={}: {} > {}", x, j, fnv, hj);
    }

    #[test]
    fn evaluators_are_pure(
        r in 1.0f64..=2.0, m in 0.0f64..50.0, frac in 0.0f64..=1.0, dim in 1u32..=4,
        x in 0.01f64..100.0, cutoff in 0.1f64..10.0,
    ) {
        let agg = agg_at(r, m, frac, cutoff, dim);
        for bound in TAIL_BOUNDS {
            let a = bound.evaluate(x, cutoff, &agg).unwrap();
            let b = bound.evaluate(x, cutoff, &agg).unwrap();
            prop_assert_eq!(a.analytic_term.to_bits(), b.analytic_term.to_bits(), "{}", bound.name());
            prop_assert_eq!(a.max_term_threshold.to_bits(), b.max_term_threshold.to_bits());
        }
    }
}
