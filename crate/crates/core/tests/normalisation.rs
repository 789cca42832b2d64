mod common;

use std::collections::BTreeMap;

use marleval::metrics::{absolute_return, run_interval_mean};
use marleval::synth::{generate_synthetic_log, CurveShape, ScoreModel, SynthAlgorithm, SynthEnvironment, SynthSpec};
use marleval::{build_evaluation_matrix, min_max_normalise, MetricDescriptor, Pooling, TaskBounds, TaskId};
use proptest::prelude::*;

fn spec(seed: u64, runs: usize, means: (f64, f64)) -> SynthSpec {
    let alg = |name: &str, mean: f64| SynthAlgorithm {
        name: name.into(),
        default: ScoreModel { mean, std: 3.0 },
        tasks: BTreeMap::new(),
        curve: CurveShape::Linear,
    };
    SynthSpec {
        environments: vec![SynthEnvironment {
            name: "env".into(),
            tasks: vec!["a".into(), "b".into()],
        }],
        algorithms: vec![alg("x", means.0), alg("y", means.1)],
        runs,
        intervals: 4,
        eval_interval: 50,
        eval_episodes: 3,
        absolute_episodes: 6,
        seed,
    }
}

proptest! {
    #[test]
    fn affine_maps_cancel(seed in any::<u64>(), runs in 2usize..6, a in 0.1f64..10.0, b in -100.0f64..100.0) {
        let log = generate_synthetic_log(&spec(seed, runs, (5.0, -5.0))).unwrap();
        let mapped = common::map_runs(log.clone(), |k, r| {
            let (a, b) = if k.task == "a" { (a, b) } else { (1.0 / a, -b) };
            Some(common::map_values(r, |x| a * x + b))
        });
        let d = MetricDescriptor::episode_return();
        for pooling in [Pooling::Global, Pooling::AbsoluteOnly, Pooling::IntervalsOnly] {
            for alg in ["x", "y"] {
                let m0 = build_evaluation_matrix(&log, alg, "return", pooling, &d).unwrap().matrix;
                let m1 = build_evaluation_matrix(&mapped, alg, "return", pooling, &d).unwrap().matrix;
                for (c0, c1) in m0.columns().iter().zip(m1.columns()) {
                    for (v0, v1) in c0.iter().zip(c1) {
                        prop_assert!((v0 - v1).abs() <= 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn entries_lie_in_unit_interval(seed in any::<u64>(), mx in -50.0f64..50.0, my in -50.0f64..50.0) {
        let log = generate_synthetic_log(&spec(seed, 3, (mx, my))).unwrap();
        let d = MetricDescriptor::episode_return();
        for pooling in [Pooling::Global, Pooling::AbsoluteOnly, Pooling::IntervalsOnly] {
            let m = build_evaluation_matrix(&log, "x", "return", pooling, &d).unwrap().matrix;
            prop_assert!(m.pooled().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn normalisation_is_monotone(lo in -1e3f64..1e3, width in 1e-3f64..1e3, u in -2e3f64..2e3, v in -2e3f64..2e3) {
        let bounds = TaskBounds::new(&TaskId::new("e", "t"), "return", lo, lo + width, Pooling::Global, 2).unwrap();
        let (small, large) = if u <= v { (u, v) } else { (v, u) };
        prop_assert!(min_max_normalise(small, &bounds).value <= min_max_normalise(large, &bounds).value);
    }

    #[test]
    fn raw_means_ignore_episode_order(seed in any::<u64>()) {
        let log = generate_synthetic_log(&spec(seed, 2, (1.0, 2.0))).unwrap();
        let reversed = common::map_runs(log.clone(), |_, r| {
            Some(common::map_episode_lists(r, |_, v| v.iter().rev().copied().collect(), |v| v.iter().rev().copied().collect()))
        });
        for ((_, _, _, runs), (_, _, _, rev)) in log.groups().zip(reversed.groups()) {
            for (r0, r1) in runs.values().zip(rev.values()) {
                let (a0, a1) = (absolute_return(r0, "return").unwrap(), absolute_return(r1, "return").unwrap());
                prop_assert!((a0 - a1).abs() <= 1e-12 * (1.0 + a0.abs()));
                for (i0, i1) in r0.intervals().iter().zip(r1.intervals()) {
                    let (m0, m1) = (run_interval_mean(i0, "return").unwrap(), run_interval_mean(i1, "return").unwrap());
                    prop_assert!((m0 - m1).abs() <= 1e-12 * (1.0 + m0.abs()));
                }
            }
        }
    }
}

#[test]
fn missing_absolute_block_is_reported_with_its_location() {
    let log = generate_synthetic_log(&spec(1, 2, (1.0, 2.0))).unwrap();
    let log = common::map_runs(log, |k, r| {
        if k.algorithm == "x" && k.task == "b" && k.run == "seed_1" {
            let (ivs, _) = r.into_parts();
            Some(marleval::model::RunRecord::new(ivs, None).unwrap())
        } else {
            Some(r)
        }
    });
    let d = MetricDescriptor::episode_return();
    let err = build_evaluation_matrix(&log, "x", "return", Pooling::Global, &d).unwrap_err();
    assert!(matches!(err, marleval::Error::MissingAbsolute(ref at) if at.contains("seed_1")), "{err}");
    // other algorithms on the same task are unaffected
    assert!(build_evaluation_matrix(&log, "y", "return", Pooling::Global, &d).is_ok());
}
