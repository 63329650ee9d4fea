mod common;

use distreg::bounds::{effective_sample_size, knn_bound, minimax_rate, ClassParams};
use distreg::functionals::{covariance_functional, quantile_functional, tail_expectation};
use distreg::measures::{make_discrete, DiscreteDistribution, Points};
use distreg::ot::{max_sliced_wp, projected_wp, sliced_wp, w1_cdf, wp_exact, wp_quantile, SlicedConfig};
use distreg::regressor::{fit, Dataset, FittedRegressor};
use distreg::weights::{kernel_weights, knn_weights, KernelKind, KernelScheme, KnnScheme, SortedIndex, WeightScheme};
use proptest::prelude::*;

fn dist_1d() -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec((-5.0f64..5.0, 0.01f64..1.0), 1..25).prop_map(|pairs| {
        let s: f64 = pairs.iter().map(|p| p.1).sum();
        let atoms: Vec<f64> = pairs.iter().map(|p| (p.0 * 8.0).round() / 8.0).collect();
        let w: Vec<f64> = pairs.iter().map(|p| p.1 / s).collect();
        DiscreteDistribution::from_1d(&atoms, &w).unwrap()
    })
}

fn dist_2d(max: usize) -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec((-2.0f64..2.0, -2.0f64..2.0, 0.01f64..1.0), 1..=max).prop_map(|t| {
        let s: f64 = t.iter().map(|p| p.2).sum();
        let rows: Vec<[f64; 2]> = t.iter().map(|p| [p.0, p.1]).collect();
        make_discrete(Points::from_rows(&rows).unwrap(), t.iter().map(|p| p.2 / s).collect()).unwrap()
    })
}

/// Covariates on a coarse grid so that distance ties are common.
fn covariates_1d() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0u32..=40).prop_map(|v| v as f64 / 40.0), 1..60)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn constructed_distributions_are_normalized(d in dist_1d()) {
        let total: f64 = d.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-12);
        prop_assert!(d.weights().iter().all(|&w| w > 0.0));
        let c = d.cumulative().unwrap();
        prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!((c.last().unwrap() - 1.0).abs() <= 1e-12);
        prop_assert!(d.sorted_atoms().unwrap().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn quantile_is_generalized_inverse(d in dist_1d(), u in 0.001f64..0.999) {
        let q = d.quantile(u).unwrap();
        prop_assert!(d.cdf(q).unwrap() >= u - 1e-12);
        for &a in d.sorted_atoms().unwrap() {
            if a < q {
                prop_assert!(d.cdf(a).unwrap() < u + 1e-12);
            }
        }
    }

    #[test]
    fn w1_formulas_agree(a in dist_1d(), b in dist_1d()) {
        prop_assert!((wp_quantile(&a, &b, 1.0).unwrap() - w1_cdf(&a, &b).unwrap()).abs() <= 1e-10);
    }

    #[test]
    fn wp_is_nondecreasing_in_p(a in dist_1d(), b in dist_1d()) {
        let w: Vec<f64> = [1.0, 1.5, 2.0, 3.0].iter().map(|&p| wp_quantile(&a, &b, p).unwrap()).collect();
        prop_assert!(w.windows(2).all(|x| x[0] <= x[1] + 1e-12));
    }

    #[test]
    fn wp_is_a_metric_on_the_line(a in dist_1d(), b in dist_1d(), c in dist_1d(), p in 1.0f64..3.0) {
        let ab = wp_quantile(&a, &b, p).unwrap();
        prop_assert!((ab - wp_quantile(&b, &a, p).unwrap()).abs() <= 1e-12);
        prop_assert!(wp_quantile(&a, &a, p).unwrap() <= 1e-12);
        prop_assert!(ab <= wp_quantile(&a, &c, p).unwrap() + wp_quantile(&c, &b, p).unwrap() + 1e-9);
    }

    #[test]
    fn transport_plan_has_the_right_marginals(a in dist_2d(5), b in dist_2d(5)) {
        let (w, plan) = wp_exact(&a, &b, 2.0).unwrap();
        for (s, t) in plan.row_sums(a.len()).iter().zip(a.weights()) {
            prop_assert!((s - t).abs() < 1e-12);
        }
        for (s, t) in plan.column_sums(b.len()).iter().zip(b.weights()) {
            prop_assert!((s - t).abs() < 1e-12);
        }
        prop_assert!(plan.entries.iter().all(|e| e.mass > 0.0));
        prop_assert!((w * w - plan.cost).abs() < 1e-12 * (1.0 + plan.cost));
        let brute = common::brute_force_cost(&a, &b, 2.0);
        prop_assert!((plan.cost - brute).abs() < 1e-9 * (1.0 + brute));
    }

    #[test]
    fn projections_do_not_increase_distance(a in dist_2d(5), b in dist_2d(5), t in 0.0f64..std::f64::consts::PI) {
        let exact = wp_exact(&a, &b, 2.0).unwrap().0;
        let proj = projected_wp(&a, &b, &[t.cos(), t.sin()], 2.0).unwrap();
        let max = max_sliced_wp(&a, &b, &SlicedConfig::new(2.0, 64, 1)).unwrap().distance;
        let sliced = sliced_wp(&a, &b, &SlicedConfig::new(2.0, 64, 1)).unwrap().distance;
        prop_assert!(proj <= exact + 1e-9);
        prop_assert!(max <= exact + 1e-9);
        prop_assert!(proj <= max + 1e-9);
        prop_assert!(sliced <= max + 1e-9);
    }

    #[test]
    fn kernel_weights_are_probabilities(xs in covariates_1d(), q in 0.0f64..1.0, h in 0.01f64..0.5) {
        let cov = Points::from_scalars(&xs).unwrap();
        let w = kernel_weights(&KernelScheme::uniform(h).unwrap(), &cov, &[q]).unwrap();
        prop_assert!((w.values.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(w.values.iter().all(|&v| v >= 0.0));
        if xs.iter().any(|x| (x - q) * (x - q) <= h * h) {
            for (x, v) in xs.iter().zip(&w.values) {
                prop_assert_eq!(*v > 0.0, (x - q) * (x - q) <= h * h);
            }
        }
    }

    #[test]
    fn knn_weights_have_kappa_equal_entries(xs in covariates_1d(), q in 0.0f64..1.0, k in 1usize..60) {
        let kappa = k.min(xs.len());
        let cov = Points::from_scalars(&xs).unwrap();
        let w = knn_weights(&KnnScheme { kappa }, &cov, &[q]).unwrap();
        prop_assert_eq!(w.support().len(), kappa);
        prop_assert!((w.sum_of_squares() - 1.0 / kappa as f64).abs() < 1e-12);
        prop_assert!((effective_sample_size(&w) - kappa as f64).abs() < 1e-9);
        // every neighbor is at least as close as every non-neighbor
        let dist = |x: f64| (x - q) * (x - q);
        let outer = w.support().iter().map(|&i| dist(xs[i])).fold(0.0, f64::max);
        prop_assert!(xs.iter().zip(&w.values).all(|(x, v)| *v > 0.0 || dist(*x) >= outer));
    }

    #[test]
    fn sorted_index_matches_linear_scan(xs in covariates_1d(), q in -0.1f64..1.1, h in 0.01f64..0.5, k in 1usize..60) {
        let cov = Points::from_scalars(&xs).unwrap();
        let ix = SortedIndex::new(&cov).unwrap();
        let knn = KnnScheme { kappa: k.min(xs.len()) };
        prop_assert_eq!(ix.knn_weights(&knn, &[q]).unwrap(), knn_weights(&knn, &cov, &[q]).unwrap());
        let ker = KernelScheme::uniform(h).unwrap();
        prop_assert_eq!(ix.kernel_weights(&ker, &[q]).unwrap(), kernel_weights(&ker, &cov, &[q]).unwrap());
        let boxed = KernelScheme { bandwidth: h, kernel: KernelKind::Boxed { m1: 0.5, m2: 1.5, r1: 0.5, r2: 1.0 } };
        prop_assert_eq!(ix.kernel_weights(&boxed, &[q]).unwrap(), kernel_weights(&boxed, &cov, &[q]).unwrap());
    }

    #[test]
    fn knn_is_permutation_equivariant(seed in 0u64..1000, q in 0.0f64..1.0, kappa in 1usize..10) {
        use rand::seq::SliceRandom;
        let mut r = common::rng(seed);
        let xs: Vec<f64> = (0..20).map(|i| (i as f64 + 0.5) / 20.0).collect();
        let mut perm: Vec<usize> = (0..20).collect();
        perm.shuffle(&mut r);
        let shuffled: Vec<f64> = perm.iter().map(|&i| xs[i]).collect();
        // off-grid query so that distances are distinct
        let q = q + 1e-7;
        let a = knn_weights(&KnnScheme { kappa }, &Points::from_scalars(&xs).unwrap(), &[q]).unwrap();
        let b = knn_weights(&KnnScheme { kappa }, &Points::from_scalars(&shuffled).unwrap(), &[q]).unwrap();
        for (j, &i) in perm.iter().enumerate() {
            prop_assert_eq!(a.values[i], b.values[j]);
        }
    }

    #[test]
    fn prediction_identities(xs in covariates_1d(), ys_seed in 0u64..1000, q in 0.0f64..1.0, p in 1.0f64..3.0, use_knn in any::<bool>()) {
        use rand::Rng;
        let mut r = common::rng(ys_seed);
        let ys: Vec<f64> = xs.iter().map(|_| 4.0 * r.random::<f64>() - 2.0).collect();
        let data = Dataset::new(Points::from_scalars(&xs).unwrap(), Points::from_scalars(&ys).unwrap()).unwrap();
        let scheme = if use_knn {
            WeightScheme::Knn(KnnScheme { kappa: (xs.len() / 3).max(1) })
        } else {
            WeightScheme::Kernel(KernelScheme::uniform(0.2).unwrap())
        };
        let est = fit(&data, scheme).unwrap();
        let naive = FittedRegressor::unindexed(&data, scheme).unwrap();
        let pred = est.predict_distribution(&[q]).unwrap();
        prop_assert_eq!(&pred, &naive.predict_distribution(&[q]).unwrap());
        let w = est.weights(&[q]).unwrap();
        // W_p(F̂, δ₀) = (Σ W |Y|^p)^{1/p}
        let direct: f64 = w.values.iter().zip(&ys).map(|(wi, y)| wi * y.abs().powf(p)).sum::<f64>().powf(1.0 / p);
        let zero = DiscreteDistribution::dirac(&[0.0]).unwrap();
        prop_assert!((wp_quantile(&pred, &zero, p).unwrap() - direct).abs() < 1e-10);
        let mean: f64 = w.values.iter().zip(&ys).map(|(wi, y)| wi * y).sum();
        prop_assert!((est.predict_mean(&[q]).unwrap()[0] - mean).abs() < 1e-12);
        prop_assert!((pred.mean()[0] - mean).abs() < 1e-12);
    }

    #[test]
    fn mean_difference_is_bounded_by_w1(a in dist_1d(), b in dist_1d()) {
        let gap = (a.mean()[0] - b.mean()[0]).abs();
        prop_assert!(gap <= w1_cdf(&a, &b).unwrap() + 1e-12);
    }

    #[test]
    fn functional_growth_bounds(d in dist_1d(), a in 0.01f64..0.99, p in 1.0f64..3.0) {
        let s = quantile_functional(&d, a).unwrap();
        let mp = d.moment_p(p).unwrap();
        prop_assert!(s.abs().powf(p) <= (1.0 / a + 1.0 / (1.0 - a)) * mp.powf(p) * (1.0 + 1e-12));
        let b = (a + 0.5 * (1.0 - a)).min(0.999);
        prop_assert!(tail_expectation(&d, a).unwrap() <= tail_expectation(&d, b).unwrap() + 1e-12);
    }

    #[test]
    fn covariance_is_bounded_by_second_moment(d in dist_2d(8)) {
        let m2 = d.moment_p(2.0).unwrap();
        prop_assert!(covariance_functional(&d).unwrap().abs() <= m2 * m2 * (1.0 + 1e-12));
    }

    #[test]
    fn knn_bound_estimation_term_is_m_over_root_kappa(n in 1usize..10_000, frac in 0.0f64..1.0, m in 0.1f64..2.0) {
        let kappa = ((n as f64 * frac) as usize).clamp(1, n);
        let b = knn_bound(&ClassParams::new(1.0, 1.0, m, 1).unwrap(), n, kappa, None).unwrap();
        prop_assert!((b.estimation - m / (kappa as f64).sqrt()).abs() < 1e-14);
        prop_assert!(b.total > 0.0 && (b.total - b.approximation - b.estimation).abs() < 1e-15);
    }

    #[test]
    fn minimax_exponent_is_monotone(h1 in 0.05f64..1.0, h2 in 0.05f64..1.0, k in 1usize..6) {
        let e = |h: f64, k: usize| minimax_rate(&ClassParams::new(h, 1.0, 1.0, k).unwrap()).unwrap().exponent;
        let (lo, hi) = if h1 <= h2 { (h1, h2) } else { (h2, h1) };
        // smoother classes and fewer covariates give a more negative exponent
        prop_assert!(e(hi, k) <= e(lo, k) + 1e-15);
        prop_assert!(e(lo, k) <= e(lo, k + 1) + 1e-15);
    }
}
