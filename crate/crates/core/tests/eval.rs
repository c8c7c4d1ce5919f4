mod common;

use std::collections::BTreeMap;

use common::checks;
use common::fixtures::{rescaled, rng, small_corpus, toy_encoder};
use drobias::eval::{
    build_synthetic_suites, compare_table, crows_from_plls, effect_size, icat, scores_from_candidates, seat_scores,
    stereoset_scores, Metric, OVERALL,
};
use drobias::model::EncoderParams;
use proptest::prelude::*;
use rand::Rng;

#[test]
fn published_icat_values() {
    checks::icat_identity().unwrap();
}

#[test]
fn uniform_model_scores_the_fixed_points() {
    checks::uniform_fixed_points().unwrap();
}

#[test]
fn synthetic_suite_sizes() {
    let (_, spec) = small_corpus(0);
    let s = build_synthetic_suites(&spec).unwrap();
    assert_eq!(s.stereoset.len(), 432);
    assert_eq!(s.crows.len(), 432);
    assert_eq!(s.seat.len(), 9);
}

#[test]
fn scores_do_not_depend_on_thread_count() {
    let (corpus, spec) = small_corpus(8);
    let params: EncoderParams = rescaled(&toy_encoder(&corpus, 8), 0.3, 8).cast();
    let suites = build_synthetic_suites(&spec).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| (stereoset_scores(&params, &suites.stereoset).unwrap(), seat_scores(&params, &suites.seat).unwrap()));
    let b = three.install(|| (stereoset_scores(&params, &suites.stereoset).unwrap(), seat_scores(&params, &suites.seat).unwrap()));
    assert_eq!(a, b);
}

#[test]
fn crows_ties_count_half() {
    assert_eq!(crows_from_plls(&[(1.0, 1.0)]).unwrap(), 50.0);
    assert_eq!(crows_from_plls(&[(2.0, 1.0), (0.0, 1.0), (3.0, 3.0), (5.0, 1.0)]).unwrap(), 62.5);
}

#[test]
fn compare_bolds_every_tied_best() {
    let row = |ss: f64| {
        let mut m = BTreeMap::new();
        m.insert(Metric::Ss, ss);
        m
    };
    let table = compare_table(&[("a".into(), row(55.0)), ("b".into(), row(45.0)), ("c".into(), row(60.0))]);
    assert!(table.contains("**55.00**") && table.contains("**45.00**"));
    assert!(!table.contains("**60.00**"));
}

fn givens(vs: &mut [Vec<f32>], i: usize, j: usize, theta: f64) {
    let (c, s) = (theta.cos() as f32, theta.sin() as f32);
    for v in vs.iter_mut() {
        let (a, b) = (v[i], v[j]);
        v[i] = c * a - s * b;
        v[j] = s * a + c * b;
    }
}

fn random_set(r: &mut impl Rng, n: usize, d: usize) -> Vec<Vec<f32>> {
    (0..n).map(|_| (0..d).map(|_| r.gen_range(-1.0f32..1.0)).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn icat_is_symmetric_and_peaks_at_fifty(lms in 0.0f64..100.0, ss in 0.0f64..100.0) {
        prop_assert!((icat(lms, ss) - icat(lms, 100.0 - ss)).abs() < 1e-9);
        prop_assert!((icat(lms, 50.0) - lms).abs() < 1e-12);
        prop_assert!(icat(lms, ss) <= lms + 1e-12);
        prop_assert!(icat(lms, 0.0) == 0.0 && icat(lms, 100.0) == 0.0);
    }

    #[test]
    fn stereo_scores_depend_only_on_ranks(
        raw in prop::collection::vec((-5.0f64..0.0, -5.0f64..0.0, -5.0f64..0.0), 1..40),
        scale in 0.1f64..10.0,
        shift in -3.0f64..3.0,
    ) {
        let a: Vec<[f64; 3]> = raw.iter().map(|&(s, t, u)| [s, t, u]).collect();
        let b: Vec<[f64; 3]> = a.iter().map(|c| c.map(|x| (x * scale + shift).exp())).collect();
        let (x, y) = (scores_from_candidates(&a).unwrap(), scores_from_candidates(&b).unwrap());
        prop_assert!((x.ss - y.ss).abs() < 1e-9 && (x.lms - y.lms).abs() < 1e-9);
    }

    #[test]
    fn swapping_candidates_mirrors_ss(raw in prop::collection::vec((-5.0f64..0.0, -5.0f64..0.0, -5.0f64..0.0), 1..40)) {
        let a: Vec<[f64; 3]> = raw.iter().map(|&(s, t, u)| [s, t, u]).collect();
        let b: Vec<[f64; 3]> = raw.iter().map(|&(s, t, u)| [t, s, u]).collect();
        let (x, y) = (scores_from_candidates(&a).unwrap(), scores_from_candidates(&b).unwrap());
        prop_assert!((x.ss + y.ss - 100.0).abs() < 1e-9);
        prop_assert!((x.lms - y.lms).abs() < 1e-9);
    }

    #[test]
    fn seat_is_rotation_and_scale_invariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = 6;
        let mut sets = [random_set(&mut r, 4, d), random_set(&mut r, 4, d), random_set(&mut r, 3, d), random_set(&mut r, 3, d)];
        let base = effect_size(&sets[0], &sets[1], &sets[2], &sets[3]).unwrap();
        prop_assume!(!base.degenerate);
        for _ in 0..5 {
            let (i, j) = (r.gen_range(0..d), r.gen_range(0..d));
            if i == j {
                continue;
            }
            let theta = r.gen_range(0.0..std::f64::consts::TAU);
            for s in sets.iter_mut() {
                givens(s, i, j, theta);
            }
        }
        for s in sets.iter_mut() {
            for v in s.iter_mut() {
                let k = r.gen_range(0.5f32..3.0);
                v.iter_mut().for_each(|x| *x *= k);
            }
        }
        let turned = effect_size(&sets[0], &sets[1], &sets[2], &sets[3]).unwrap();
        prop_assert!((base.effect - turned.effect).abs() < 1e-4, "{} vs {}", base.effect, turned.effect);
        let swapped = effect_size(&sets[1], &sets[0], &sets[2], &sets[3]).unwrap();
        prop_assert!((swapped.effect + turned.effect).abs() < 1e-9);
        let flipped = effect_size(&sets[0], &sets[1], &sets[3], &sets[2]).unwrap();
        prop_assert!((flipped.effect + turned.effect).abs() < 1e-9);
        prop_assert!(turned.effect.abs() <= 2.0 + 1e-9);
    }
}

#[test]
fn seat_summary_has_overall_entry() {
    let (corpus, spec) = small_corpus(8);
    let params: EncoderParams = rescaled(&toy_encoder(&corpus, 8), 0.3, 8).cast();
    let suites = build_synthetic_suites(&spec).unwrap();
    let s = seat_scores(&params, &suites.seat).unwrap();
    assert_eq!(s[OVERALL].tests, 9);
    assert_eq!(s.len(), 4);
}
