//! Recursive Loewner: selection bookkeeping, history, benchmark accuracy.

mod common;

use common::*;
use proptest::prelude::*;
use ratapprox::analysis;
use ratapprox::greedy::{self, GreedyFit, GreedyOptions};
use ratapprox::sampling::{self, Domain, SampleSet};
use ratapprox::special_fn::h_of_s;

fn bessel_structured() -> SampleSet {
    let grid = sampling::structured_grid(&Domain::omega(), 101, 21, true).unwrap();
    sampling::sample_oracle(&grid, h_of_s).unwrap()
}

fn check_bookkeeping(fit: &GreedyFit, samples: &SampleSet, target: usize) {
    assert_eq!(fit.model.order(), target);
    let all = samples.points();
    let left: Vec<_> = fit.partition.left.iter().map(|s| s.point).collect();
    let right: Vec<_> = fit.partition.right.iter().map(|s| s.point).collect();
    assert!(sampling::is_conjugate_closed(&left));
    assert!(sampling::is_conjugate_closed(&right));
    assert!(left.iter().all(|p| !right.contains(p)));
    for s in fit.partition.left.iter().chain(&fit.partition.right) {
        assert!(samples.samples.contains(s), "{s:?} is not a sample");
    }
    for step in &fit.history {
        for z in &step.chosen {
            assert!(all.contains(z), "chose {z}, not a sample point");
        }
    }
}

#[test]
fn structured_benchmark() {
    let samples = bessel_structured();
    let fit = greedy::fit_greedy(&samples, &GreedyOptions::new(11, 0)).unwrap();
    check_bookkeeping(&fit, &samples, 11);
    let report = analysis::error_grid(&fit.model, h_of_s, &Domain::omega(), 200, 200).unwrap();
    assert!(report.max_error <= 1e-8, "max error {:e}", report.max_error);

    let errs: Vec<f64> = fit.history.iter().map(|h| h.max_error).collect();
    let steps = errs.len() - 1;
    let down = errs.windows(2).filter(|w| w[1] <= w[0]).count();
    assert!(down as f64 >= 0.8 * steps as f64, "{down}/{steps} non-increasing: {errs:?}");
}

#[test]
fn same_seed_same_fit() {
    let grid = sampling::structured_grid(&Domain::omega(), 41, 9, true).unwrap();
    let samples = sampling::sample_oracle(&grid, h_of_s).unwrap();
    let a = greedy::fit_greedy(&samples, &GreedyOptions::new(8, 3)).unwrap();
    let b = greedy::fit_greedy(&samples, &GreedyOptions::new(8, 3)).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.history, b.history);
    assert_eq!(a.partition, b.partition);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_rationals(seed in any::<u64>(), degree in 1usize..=6) {
        let truth = random_real_rational(seed, degree);
        let samples = samples_of(&truth, 11, 9);
        let fit = greedy::fit_greedy(&samples, &GreedyOptions::new(degree, seed)).unwrap();
        check_bookkeeping(&fit, &samples, degree);
        let scale = samples.max_abs_value();
        for smp in &samples.samples {
            let err = (fit.model.eval(smp.point).unwrap() - smp.value).norm();
            prop_assert!(err <= 1e-9 * scale, "error {} at {}", err, smp.point);
        }
    }
}
