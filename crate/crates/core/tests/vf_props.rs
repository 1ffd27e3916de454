//! Vector Fitting: evaluation, pole relocation, realness, benchmark structure.

mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratapprox::analysis;
use ratapprox::sampling::{self, Domain, SampleSet};
use ratapprox::special_fn::{h_of_s, J0_ZEROS};
use ratapprox::vectorfit::{self, InitialPoles, PoleResidueModel, VfFit, VfOptions};
use ratapprox::Complex64;

fn bessel_structured() -> SampleSet {
    let grid = sampling::structured_grid(&Domain::omega(), 101, 21, true).unwrap();
    sampling::sample_oracle(&grid, h_of_s).unwrap()
}

fn bessel_uniform(seed: u64) -> SampleSet {
    let grid = sampling::uniform_random_grid(&Domain::omega(), 1000, seed).unwrap();
    sampling::sample_oracle(&grid, h_of_s).unwrap()
}

fn exact_pole_residue(m: &PoleResidueModel, s: Complex64) -> Complex64 {
    let xs = Exact::from(s);
    let mut acc = Exact::from(c(m.d, 0.0)).add(&xs.mul(&Exact::from(c(m.h, 0.0))));
    for (a, r) in m.poles.iter().zip(&m.residues) {
        acc = acc.add(&Exact::from(*r).div(&xs.sub(&Exact::from(*a))));
    }
    acc.to_f64()
}

/// Poles closed under conjugation, real poles with real residues.
fn assert_real_model(m: &PoleResidueModel) {
    assert!(conjugate_closed(&m.poles, 1e-12), "{:?}", m.poles);
    for (a, r) in m.poles.iter().zip(&m.residues) {
        if a.im == 0.0 {
            assert!(r.im.abs() <= 1e-10 * r.norm(), "residue {r} at real pole {a}");
        } else if let Some(j) = m.poles.iter().position(|b| *b == a.conj()) {
            assert!((m.residues[j] - r.conj()).norm() <= 1e-10 * r.norm());
        }
    }
}

fn benchmark_checks(fit: &VfFit) {
    assert_real_model(&fit.model);
    let report = analysis::error_grid(&fit.model, h_of_s, &Domain::omega(), 200, 200).unwrap();
    assert!(report.max_error <= 1e-4, "max error {:e}", report.max_error);
    let (poles, zeros) = vectorfit::pr_poles_zeros(&fit.model).unwrap();
    assert!(conjugate_closed(&zeros, 1e-8), "{zeros:?}");
    let pairs = analysis::detect_cancellations(&poles, &zeros, analysis::DEFAULT_CANCEL_TOL);
    assert!(pairs.iter().any(|p| p.gap <= 1e-6), "{pairs:?}");
    let kept = analysis::surviving_poles(&poles, &pairs);
    for z in &J0_ZEROS[..3] {
        let d = nearest(&kept, c(*z, 0.0));
        assert!(d <= 1e-6, "pole near {z} off by {d:e}");
    }
}

#[test]
fn evaluation_matches_exact_arithmetic() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let n = rng.random_range(1..10);
        let poles: Vec<Complex64> = (0..n).map(|_| c(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0))).collect();
        let residues: Vec<Complex64> = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let m = PoleResidueModel::new(poles, residues, rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).unwrap();
        for _ in 0..10 {
            let s = c(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            let want = exact_pole_residue(&m, s);
            let got = vectorfit::eval_pole_residue(&m, s).unwrap();
            assert!((got - want).norm() <= 1e-13 * want.norm(), "{got} vs {want} at {s}");
        }
    }
}

#[test]
fn auto_start_recovers_degree_three() {
    let truth = random_real_rational(17, 3);
    let samples = samples_of(&truth, 15, 11);
    let fit = vectorfit::fit_vf(&samples, &VfOptions::new(3, 10)).unwrap();
    assert!(pairing_distance(&fit.model.poles, &truth.poles) <= 1e-8, "{:?}", fit.model.poles);
}

#[test]
fn structured_benchmark() {
    let fit = vectorfit::fit_vf(&bessel_structured(), &VfOptions::new(12, 20)).unwrap();
    assert_eq!(fit.model.order(), 12);
    benchmark_checks(&fit);
}

#[test]
fn uniform_benchmark() {
    let fit = vectorfit::fit_vf(&bessel_uniform(0), &VfOptions::new(12, 20)).unwrap();
    benchmark_checks(&fit);
}

#[test]
fn linearized_residual_mostly_decreases() {
    let fit = vectorfit::fit_vf(&bessel_structured(), &VfOptions::new(12, 20)).unwrap();
    let r: Vec<f64> = fit.history.iter().map(|h| h.linearized_residual).collect();
    let steps = r.len() - 1;
    let down = r.windows(2).filter(|w| w[1] <= w[0]).count();
    assert!(down as f64 >= 0.7 * steps as f64, "{down}/{steps} non-increasing: {r:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn true_poles_are_recovered(seed in any::<u64>(), degree in 1usize..=8) {
        let truth = random_real_rational(seed, degree);
        let samples = samples_of(&truth, 15, 11);
        let opts = VfOptions { initial_poles: InitialPoles::Given(truth.poles.clone()), ..VfOptions::new(degree, 3) };
        let fit = vectorfit::fit_vf(&samples, &opts).unwrap();
        prop_assert!(pairing_distance(&fit.model.poles, &truth.poles) <= 1e-8, "{:?}", fit.model.poles);
        prop_assert!(fit.history[0].max_pole_move <= 1e-8 * (1.0 + 4.0));
        assert_real_model(&fit.model);
        for s in fresh_points(seed, 50) {
            let want = truth.eval(s).unwrap();
            prop_assert!((fit.model.eval(s).unwrap() - want).norm() <= 1e-9 * want.norm());
        }
    }

    #[test]
    fn iterates_stay_real(seed in any::<u64>(), degree in 2usize..=8) {
        let truth = random_real_rational(seed, degree);
        let samples = samples_of(&truth, 15, 11);
        // The fit is deterministic, so a run capped at k iterations yields iterate k.
        for k in 1..=5 {
            let fit = vectorfit::fit_vf(&samples, &VfOptions::new(degree, k)).unwrap();
            assert_real_model(&fit.model);
            prop_assert!(fit.model.d.is_finite() && fit.model.h.is_finite());
        }
    }
}
