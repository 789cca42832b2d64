use marleval::aggregate::{bootstrap_distributions, mean, median};
use marleval::compare::default_taus;
use marleval::synth::oracle_probability_of_improvement;
use marleval::{
    iqm, optimality_gap, performance_profile, pooled_statistic, probability_of_improvement, stratified_bootstrap_ci,
    BootstrapOptions, EvalMatrix, Execution, Statistic, TaskId,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e6f64..1e6, 1..60)
}

fn unit_matrix(runs: usize, tasks: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0f64..=1.0, runs), tasks)
}

fn matrix(name: &str, columns: Vec<Vec<f64>>) -> EvalMatrix {
    let ids = (0..columns.len()).map(|t| TaskId::new("env", format!("t{t}"))).collect();
    EvalMatrix::new(name, "return", ids, columns, true).unwrap()
}

fn small() -> BootstrapOptions {
    BootstrapOptions::new(100, 0.95, 11)
}

proptest! {
    #[test]
    fn iqm_lies_within_range(xs in scores()) {
        let v = iqm(&xs).unwrap();
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= v && v <= hi);
    }

    #[test]
    fn iqm_is_permutation_invariant(xs in scores(), seed in any::<u64>()) {
        let mut shuffled = xs.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        prop_assert_eq!(iqm(&xs).unwrap(), iqm(&shuffled).unwrap());
    }

    #[test]
    fn iqm_is_translation_equivariant(xs in scores(), c in -1e3f64..1e3) {
        let shifted: Vec<f64> = xs.iter().map(|x| x + c).collect();
        let diff = iqm(&shifted).unwrap() - (iqm(&xs).unwrap() + c);
        prop_assert!(diff.abs() <= 1e-9 * (1.0 + c.abs() + xs.iter().map(|x| x.abs()).fold(0.0, f64::max)));
    }

    #[test]
    fn iqm_ignores_a_growing_outlier(mut xs in prop::collection::vec(-100.0f64..100.0, 4..40), bump in 0.0f64..1e9) {
        let (imax, _) = xs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let max = xs[imax];
        prop_assume!(xs.iter().filter(|&&x| x == max).count() == 1);
        let before = iqm(&xs).unwrap();
        xs[imax] += bump;
        prop_assert_eq!(before, iqm(&xs).unwrap());
    }

    #[test]
    fn optimality_gap_is_nonnegative_and_zero_iff_all_above(xs in prop::collection::vec(0.0f64..2.0, 1..40), gamma in 0.0f64..2.0) {
        let gap = optimality_gap(&xs, gamma).unwrap();
        prop_assert!(gap >= 0.0);
        prop_assert_eq!(gap == 0.0, xs.iter().all(|&x| x >= gamma));
    }

    #[test]
    fn simple_statistics_agree_on_constants(c in -1e3f64..1e3, n in 1usize..30) {
        let xs = vec![c; n];
        prop_assert_eq!(mean(&xs).unwrap(), c);
        prop_assert_eq!(median(&xs).unwrap(), c);
        prop_assert_eq!(iqm(&xs).unwrap(), c);
    }

    #[test]
    fn within_column_permutation_leaves_replicates_unchanged(cols in unit_matrix(6, 3), seed in any::<u64>()) {
        let mut permuted = cols.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for column in &mut permuted {
            for i in (1..column.len()).rev() {
                column.swap(i, rng.random_range(0..=i));
            }
        }
        let stats = Statistic::all(1.0);
        let a = bootstrap_distributions(&matrix("m", cols), &stats, &small()).unwrap();
        let b = bootstrap_distributions(&matrix("m", permuted), &stats, &small()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ci_is_ordered(cols in unit_matrix(5, 4)) {
        let m = matrix("m", cols);
        for s in Statistic::all(1.0) {
            let e = stratified_bootstrap_ci(&m, s, &small()).unwrap();
            prop_assert!(e.ci.lower() <= e.ci.upper());
        }
    }

    #[test]
    fn improvement_is_complementary(x in unit_matrix(4, 3), y in unit_matrix(5, 3)) {
        let (x, y) = (matrix("x", x), matrix("y", y));
        let xy = probability_of_improvement(&x, &y, &small()).unwrap().probability;
        let yx = probability_of_improvement(&y, &x, &small()).unwrap().probability;
        prop_assert!((xy + yx - 1.0).abs() <= 1e-12);
        prop_assert_eq!(probability_of_improvement(&x, &x, &small()).unwrap().probability, 0.5);
        prop_assert_eq!(xy, oracle_probability_of_improvement(x.columns(), y.columns()).unwrap());
    }

    #[test]
    fn improvement_is_rank_invariant(x in unit_matrix(4, 2), y in unit_matrix(4, 2)) {
        let warp = |cols: &[Vec<f64>]| -> Vec<Vec<f64>> {
            cols.iter().map(|c| c.iter().map(|v| v.powi(3) * 0.5 + 0.1).collect()).collect()
        };
        let (xm, ym) = (matrix("x", x.clone()), matrix("y", y.clone()));
        let (xw, yw) = (matrix("x", warp(&x)), matrix("y", warp(&y)));
        prop_assert_eq!(
            probability_of_improvement(&xm, &ym, &small()).unwrap().probability,
            probability_of_improvement(&xw, &yw, &small()).unwrap().probability
        );
    }

    #[test]
    fn profile_is_non_increasing(cols in unit_matrix(5, 3)) {
        let curve = performance_profile(&matrix("m", cols), &default_taus(101), &small()).unwrap();
        let est: Vec<f64> = curve.points().iter().map(|p| p.estimate).collect();
        prop_assert!(est.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn profile_area_matches_pooled_mean(cols in unit_matrix(5, 3)) {
        let m = matrix("m", cols);
        let taus = default_taus(1001);
        let curve = performance_profile(&m, &taus, &BootstrapOptions::new(1, 0.95, 0)).unwrap();
        let p: Vec<f64> = curve.points().iter().map(|p| p.estimate).collect();
        let area: f64 = taus.windows(2).zip(p.windows(2)).map(|(t, v)| (t[1] - t[0]) * (v[0] + v[1]) / 2.0).sum();
        let mean = pooled_statistic(&m, Statistic::Mean).unwrap();
        prop_assert!((area - mean).abs() <= 0.01, "area {} mean {}", area, mean);
    }
}

#[test]
fn lower_bound_rarely_exceeds_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let options = BootstrapOptions::new(200, 0.95, 77);
    let mut ok = 0;
    for _ in 0..1000 {
        let cols = (0..4).map(|_| (0..6).map(|_| rng.random::<f64>()).collect()).collect();
        let m = matrix("m", cols);
        let e = stratified_bootstrap_ci(&m, Statistic::Iqm, &options).unwrap();
        assert!(e.ci.lower() <= e.ci.upper());
        if e.ci.lower() <= pooled_statistic(&m, Statistic::Iqm).unwrap() {
            ok += 1;
        }
    }
    assert!(ok >= 990, "{ok}/1000");
}

#[test]
fn execution_mode_does_not_change_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cols: Vec<Vec<f64>> = (0..5).map(|_| (0..10).map(|_| rng.random::<f64>()).collect()).collect();
    let m = matrix("m", cols);
    let seq = BootstrapOptions::new(500, 0.95, 1).with_execution(Execution::Sequential);
    let par = BootstrapOptions::new(500, 0.95, 1).with_execution(Execution::Parallel);
    assert_eq!(
        stratified_bootstrap_ci(&m, Statistic::Iqm, &seq).unwrap(),
        stratified_bootstrap_ci(&m, Statistic::Iqm, &par).unwrap()
    );
    assert_eq!(
        performance_profile(&m, &default_taus(11), &seq).unwrap(),
        performance_profile(&m, &default_taus(11), &par).unwrap()
    );
}
