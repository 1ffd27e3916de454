//! Recursive Loewner: grow the left and right data greedily.
//!
//! Start from one random sample on each side, then repeatedly add the two
//! unused samples where the current model is worst, one to each side. The
//! pencil is rebuilt from scratch after every step.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loewner::{self, DataPartition, StateSpaceModel, TruncationMode};
use crate::sampling::{self, ConjugateGroup, SampleSet};

/// Consecutive non-improving steps tolerated once the target order is reached.
pub const STALL_WINDOW: usize = 5;
/// Required improvement factor over [`STALL_WINDOW`] steps.
pub const STALL_FACTOR: f64 = 0.5;
/// Normalized singular values below this do not count towards the rank.
const RANK_TOL: f64 = 1e-14;
const MAX_CONDITION: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    #[default]
    Absolute,
    /// `|H_r - f| / |f|`.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyOptions {
    pub order_target: usize,
    pub seed: u64,
    pub metric: ErrorMetric,
    /// Disable to run until every sample is used.
    pub early_stop: bool,
}

impl GreedyOptions {
    pub fn new(order_target: usize, seed: u64) -> Self {
        GreedyOptions { order_target, seed, metric: ErrorMetric::Absolute, early_stop: true }
    }
}

/// One row of the greedy history.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyStep {
    pub step: usize,
    pub n_left: usize,
    pub n_right: usize,
    pub order: usize,
    /// Error of the model over the samples not yet used.
    pub max_error: f64,
    /// Points added after this step (upper members of conjugate pairs).
    pub chosen: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct GreedyFit {
    pub model: StateSpaceModel,
    pub history: Vec<GreedyStep>,
    pub partition: DataPartition,
}

pub fn fit_greedy(samples: &SampleSet, opts: &GreedyOptions) -> Result<GreedyFit> {
    let target = opts.order_target;
    if target == 0 {
        return Err(Error::InvalidArgument("order target must be at least 1".into()));
    }
    if samples.len() < 2 * target {
        return Err(Error::InsufficientData(format!(
            "{} samples cannot support order {target} (need {})",
            samples.len(),
            2 * target
        )));
    }
    let groups = sampling::conjugate_groups(&samples.points())?;
    if groups.len() < 2 {
        return Err(Error::InsufficientData("need at least two conjugate groups".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let first = rng.random_range(0..groups.len());
    let mut second = rng.random_range(0..groups.len() - 1);
    if second >= first {
        second += 1;
    }
    let mut used = vec![false; groups.len()];
    let mut left: Vec<usize> = Vec::new();
    let mut right: Vec<usize> = Vec::new();
    let push = |g: usize, side: &mut Vec<usize>, used: &mut Vec<bool>| {
        used[g] = true;
        side.push(g);
    };
    push(first, &mut left, &mut used);
    push(second, &mut right, &mut used);

    let mut history: Vec<GreedyStep> = Vec::new();
    let mut reached_at: Option<usize> = None;
    let mut step = 0;
    loop {
        step += 1;
        let part = collect_partition(samples, &groups, &left, &right);
        let model = build_model(&part, target)?;
        let order = model.order();
        if order == target && reached_at.is_none() {
            reached_at = Some(history.len());
        }

        let errors = unused_errors(samples, &groups, &used, &model, opts.metric);
        let max_error = errors.iter().map(|e| e.1).fold(0.0, f64::max);
        let mut entry = GreedyStep {
            step,
            n_left: part.left.len(),
            n_right: part.right.len(),
            order,
            max_error,
            chosen: Vec::new(),
        };

        let stalled = opts.early_stop
            && reached_at.is_some_and(|k| history.len() >= k + STALL_WINDOW)
            && {
                let n = history.len();
                let base = history[n - STALL_WINDOW].max_error;
                let recent = history[n - STALL_WINDOW + 1..].iter().map(|h| h.max_error).fold(max_error, f64::min);
                !(recent <= STALL_FACTOR * base)
            };
        if errors.is_empty() || stalled {
            history.push(entry);
            return Ok(GreedyFit { model, history, partition: part });
        }

        // Largest error first; ties go to the lowest index.
        let mut ranked = errors;
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        // The worst sample goes to the side with fewer points.
        let left_first = count(&left, &groups) <= count(&right, &groups);
        for (k, &(g, _)) in ranked.iter().take(2).enumerate() {
            let side = if (k == 0) == left_first { &mut left } else { &mut right };
            push(g, side, &mut used);
            entry.chosen.push(samples.samples[groups[g].lead()].point);
        }
        history.push(entry);
    }
}

fn count(ids: &[usize], groups: &[ConjugateGroup]) -> usize {
    ids.iter().map(|&g| groups[g].indices().count()).sum()
}

fn collect_partition(samples: &SampleSet, groups: &[ConjugateGroup], left: &[usize], right: &[usize]) -> DataPartition {
    let take = |ids: &[usize]| {
        ids.iter()
            .flat_map(|&g| groups[g].indices())
            .map(|i| samples.samples[i])
            .collect::<Vec<_>>()
    };
    DataPartition { left: take(left), right: take(right) }
}

/// Largest order up to `target` that the current data support with a
/// well-conditioned `E`.
fn build_model(part: &DataPartition, target: usize) -> Result<StateSpaceModel> {
    let pencil = loewner::build_pencil(part)?;
    let mut r = target.min(pencil.rows()).min(pencil.cols());
    let probe = loewner::truncate(&pencil, TruncationMode::ByOrder(1))?;
    r = r.min(loewner::order_for_tolerance(&probe.singular_values, RANK_TOL));
    loop {
        match loewner::truncate_with_limit(&pencil, TruncationMode::ByOrder(r), MAX_CONDITION) {
            Ok(t) => return Ok(t.model),
            Err(Error::IllConditioned { .. }) if r > 1 => r -= 1,
            Err(e) => return Err(e),
        }
    }
}

/// `(group, error)` for every unused group, taking the worse of the two
/// members of a conjugate pair.
fn unused_errors(
    samples: &SampleSet,
    groups: &[ConjugateGroup],
    used: &[bool],
    model: &StateSpaceModel,
    metric: ErrorMetric,
) -> Vec<(usize, f64)> {
    (0..groups.len())
        .into_par_iter()
        .filter(|&g| !used[g])
        .map(|g| {
            let err = groups[g]
                .indices()
                .map(|i| {
                    let smp = samples.samples[i];
                    let diff = match model.eval(smp.point) {
                        Ok(v) => (v - smp.value).norm(),
                        Err(_) => f64::INFINITY,
                    };
                    match metric {
                        ErrorMetric::Absolute => diff,
                        ErrorMetric::Relative => diff / smp.value.norm().max(f64::MIN_POSITIVE),
                    }
                })
                .fold(0.0, f64::max);
            (g, err)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{structured_grid, sample_oracle, Domain};

    fn rational(s: Complex64) -> Result<Complex64> {
        Ok((s + 3.0) / ((s + 1.0) * (s + 2.0)))
    }

    #[test]
    fn recovers_degree_two() {
        let grid = structured_grid(&Domain::omega(), 11, 5, true).unwrap();
        let samples = sample_oracle(&grid, rational).unwrap();
        let fit = fit_greedy(&samples, &GreedyOptions::new(2, 7)).unwrap();
        assert_eq!(fit.model.order(), 2);
        for smp in &samples.samples {
            let err = (fit.model.eval(smp.point).unwrap() - smp.value).norm();
            assert!(err <= 1e-9, "error {err} at {}", smp.point);
        }
    }

    #[test]
    fn sides_stay_disjoint_and_closed() {
        let grid = structured_grid(&Domain::omega(), 11, 5, true).unwrap();
        let samples = sample_oracle(&grid, rational).unwrap();
        let fit = fit_greedy(&samples, &GreedyOptions::new(2, 1)).unwrap();
        let left: Vec<_> = fit.partition.left.iter().map(|s| s.point).collect();
        let right: Vec<_> = fit.partition.right.iter().map(|s| s.point).collect();
        assert!(sampling::is_conjugate_closed(&left));
        assert!(sampling::is_conjugate_closed(&right));
        assert!(left.iter().all(|p| !right.contains(p)));
    }

    #[test]
    fn too_few_samples() {
        let samples = SampleSet::from_samples(
            [1.0, 2.0, 3.0]
                .iter()
                .map(|&x| {
                    let point = Complex64::new(x, 0.0);
                    crate::sampling::ComplexSample { point, value: rational(point).unwrap() }
                })
                .collect(),
            None,
        );
        assert!(matches!(fit_greedy(&samples, &GreedyOptions::new(2, 0)), Err(Error::InsufficientData(_))));
    }
}
