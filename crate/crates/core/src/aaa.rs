//! The AAA algorithm: greedy barycentric rational approximation.
//!
//! ```text
//! r(s) = sum_j w_j f_j / (s - z_j)  /  sum_j w_j / (s - z_j)
//! ```
//!
//! At every step the weights minimize the linearized residual over the
//! samples that are not support points, and the worst-fitted sample joins the
//! support set.

use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, DEFAULT_INFINITY_CUTOFF};
use crate::sampling::{self, ConjugateGroup, SampleSet};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Default relative stopping tolerance.
pub const DEFAULT_TOL: f64 = 1e-13;
/// Default cap on the number of support points.
pub const DEFAULT_MAX_ORDER: usize = 100;
/// Default threshold of [`cleanup`].
pub const DEFAULT_CLEANUP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycentricModel {
    pub support: Vec<Complex64>,
    pub values: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

impl BarycentricModel {
    pub fn new(support: Vec<Complex64>, values: Vec<Complex64>, weights: Vec<Complex64>) -> Result<Self> {
        let m = support.len();
        if m == 0 || values.len() != m || weights.len() != m {
            return Err(Error::InvalidArgument("barycentric model needs matching nonempty support, values and weights".into()));
        }
        if weights.iter().all(|w| *w == ZERO) {
            return Err(Error::InvalidArgument("all barycentric weights are zero".into()));
        }
        for i in 0..m {
            if support[..i].contains(&support[i]) {
                return Err(Error::InvalidArgument(format!("repeated support point {}", support[i])));
            }
        }
        Ok(BarycentricModel { support, values, weights })
    }

    /// Number of support points.
    pub fn order(&self) -> usize {
        self.support.len()
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        eval_barycentric(self, s)
    }
}

/// Evaluates the barycentric quotient. Support points return their stored
/// value; a vanishing denominator returns an infinite value.
pub fn eval_barycentric(m: &BarycentricModel, s: Complex64) -> Complex64 {
    let mut num = ZERO;
    let mut den = ZERO;
    for ((z, f), w) in m.support.iter().zip(&m.values).zip(&m.weights) {
        let d = s - z;
        if d == ZERO {
            return *f;
        }
        let c = w / d;
        num += c * f;
        den += c;
    }
    if den == ZERO {
        return Complex64::new(f64::INFINITY, 0.0);
    }
    num / den
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AaaStart {
    /// The sample whose value lies farthest from the mean value.
    #[default]
    FarthestFromMean,
    /// A sample drawn with the given seed.
    Random(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AaaOptions {
    pub tol: f64,
    pub max_order: usize,
    /// Add conjugate support points together and keep the weights of
    /// conjugate points conjugate.
    pub real_mode: bool,
    pub start: AaaStart,
}

impl Default for AaaOptions {
    fn default() -> Self {
        AaaOptions { tol: DEFAULT_TOL, max_order: DEFAULT_MAX_ORDER, real_mode: false, start: AaaStart::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AaaStep {
    pub iter: usize,
    pub order: usize,
    /// Largest error over the samples that are not support points.
    pub max_error: f64,
}

#[derive(Debug, Clone)]
pub struct AaaFit {
    pub model: BarycentricModel,
    pub history: Vec<AaaStep>,
}

pub fn fit_aaa(samples: &SampleSet, opts: &AaaOptions) -> Result<AaaFit> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} samples, need at least 2")));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {} must be positive", opts.tol)));
    }
    if opts.max_order == 0 {
        return Err(Error::InvalidArgument("max order must be at least 1".into()));
    }
    let points = samples.points();
    let values = samples.values();
    // Greedy units: conjugate groups in real mode, single samples otherwise.
    let units: Vec<Vec<usize>> = if opts.real_mode {
        sampling::conjugate_groups(&points)?.iter().map(|g| g.indices().collect()).collect()
    } else {
        (0..n).map(|i| vec![i]).collect()
    };
    let mut unit_of = vec![0; n];
    for (u, members) in units.iter().enumerate() {
        for &i in members {
            unit_of[i] = u;
        }
    }

    let first = match opts.start {
        AaaStart::FarthestFromMean => {
            let mean = values.iter().sum::<Complex64>() / n as f64;
            argmax((0..n).map(|i| (values[i] - mean).norm()))
        }
        AaaStart::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            units[rng.random_range(0..units.len())][0]
        }
    };

    let scale = samples.max_abs_value();
    let mut is_support = vec![false; n];
    let mut support: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let mut next = first;
    loop {
        for &i in &units[unit_of[next]] {
            is_support[i] = true;
            support.push(i);
        }
        let rest: Vec<usize> = (0..n).filter(|&i| !is_support[i]).collect();
        if rest.len() < support.len() {
            return Err(Error::Stagnation(support.len()));
        }
        let weights = solve_weights(&points, &values, &support, &rest, opts.real_mode)?;
        let model = BarycentricModel {
            support: support.iter().map(|&i| points[i]).collect(),
            values: support.iter().map(|&i| values[i]).collect(),
            weights,
        };
        let errors: Vec<f64> = rest.iter().map(|&i| (model.eval(points[i]) - values[i]).norm()).collect();
        let worst = argmax(errors.iter().copied());
        let max_error = errors.get(worst).copied().unwrap_or(0.0);
        history.push(AaaStep { iter: history.len() + 1, order: model.order(), max_error });

        let grow = units.get(unit_of[rest.get(worst).copied().unwrap_or(0)]).map_or(1, |u| u.len());
        if max_error <= opts.tol * scale || rest.is_empty() || support.len() + grow > opts.max_order {
            return Ok(AaaFit { model, history });
        }
        next = rest[worst];
    }
}

/// Index of the largest value, lowest index on ties; 0 for an empty input.
fn argmax(it: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in it.enumerate() {
        if v > best.1 || (v.is_nan() && !best.1.is_nan()) {
            best = (i, v);
        }
    }
    best.0
}

/// Unit-norm weights minimizing the linearized residual
/// `sum_i |sum_j w_j (F_i - f_j) / (Z_i - z_j)|^2` over the rows `rest`.
fn solve_weights(
    points: &[Complex64],
    values: &[Complex64],
    support: &[usize],
    rest: &[usize],
    real_mode: bool,
) -> Result<Vec<Complex64>> {
    let loewner = Mat::from_fn(rest.len(), support.len(), |r, c| {
        let (i, j) = (rest[r], support[c]);
        (values[i] - values[j]) / (points[i] - points[j])
    });
    if !real_mode {
        return linalg::smallest_singular_vector(&loewner);
    }
    // w = T u with real u. Each conjugate pair (a, b) of support points
    // contributes the columns (e_a + e_b)/sqrt2 and i(e_a - e_b)/sqrt2, a real
    // point contributes e_a. T has orthonormal columns, so |w| = |u|.
    let sup_points: Vec<Complex64> = support.iter().map(|&i| points[i]).collect();
    let groups = sampling::conjugate_groups(&sup_points)?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis: Vec<Vec<(usize, Complex64)>> = Vec::new();
    for g in &groups {
        match *g {
            ConjugateGroup::Real(a) => basis.push(vec![(a, ONE)]),
            ConjugateGroup::Pair { upper, lower } => {
                basis.push(vec![(upper, Complex64::new(h, 0.0)), (lower, Complex64::new(h, 0.0))]);
                basis.push(vec![(upper, Complex64::new(0.0, h)), (lower, Complex64::new(0.0, -h))]);
            }
        }
    }
    let rows = rest.len();
    let k = basis.len();
    if 2 * rows < k {
        return Err(Error::Stagnation(support.len()));
    }
    let mut stacked = Mat::<f64>::zeros(2 * rows, k);
    for (c, col) in basis.iter().enumerate() {
        for r in 0..rows {
            let z: Complex64 = col.iter().map(|&(j, t)| loewner[(r, j)] * t).sum();
            stacked[(r, c)] = z.re;
            stacked[(rows + r, c)] = z.im;
        }
    }
    let u = linalg::smallest_singular_vector_real(&stacked)?;
    let mut w = vec![ZERO; support.len()];
    for (col, uc) in basis.iter().zip(&u) {
        for &(j, t) in col {
            w[j] += t * uc;
        }
    }
    Ok(w)
}

/// Poles and zeros from the `(m+1) x (m+1)` arrowhead pencils
///
/// ```text
/// [0  w^T ]      [0 0]
/// [1  diag(z)] , [0 I]
/// ```
///
/// with `w` replaced by `w .* f` for the zeros.
pub fn barycentric_poles_zeros(m: &BarycentricModel) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let wf: Vec<Complex64> = m.weights.iter().zip(&m.values).map(|(w, f)| w * f).collect();
    let poles = arrowhead_eigenvalues(&m.support, &m.weights)?;
    let zeros = arrowhead_eigenvalues(&m.support, &wf)?;
    Ok((poles, zeros))
}

fn arrowhead_eigenvalues(z: &[Complex64], top: &[Complex64]) -> Result<Vec<Complex64>> {
    let k = z.len();
    if k < 2 {
        return Ok(Vec::new());
    }
    let a = Mat::from_fn(k + 1, k + 1, |i, j| match (i, j) {
        (0, 0) => ZERO,
        (0, j) => top[j - 1],
        (_, 0) => ONE,
        (i, j) if i == j => z[i - 1],
        _ => ZERO,
    });
    let b: ComplexMatrix = Mat::from_fn(k + 1, k + 1, |i, j| if i == j && i > 0 { ONE } else { ZERO });
    linalg::finite_generalized_eigenvalues(&a, &b, DEFAULT_INFINITY_CUTOFF * scale_of(z))
}

fn scale_of(z: &[Complex64]) -> f64 {
    z.iter().fold(1.0f64, |m, p| m.max(p.norm()))
}

/// Residue of the barycentric quotient at a simple pole `p`:
/// `n(p) / d'(p)`.
pub fn residue(m: &BarycentricModel, p: Complex64) -> Complex64 {
    let mut num = ZERO;
    let mut dder = ZERO;
    for ((z, f), w) in m.support.iter().zip(&m.values).zip(&m.weights) {
        let d = p - z;
        num += w * f / d;
        dder -= w / (d * d);
    }
    num / dder
}

/// Removes spurious poles (Froissart doublets).
///
/// A pole is spurious when a zero lies within `pair_tol * (1 + |pole|)` or its
/// residue is at most `pair_tol` times the median residue magnitude. The
/// support point nearest to each spurious pole is dropped (with its conjugate
/// when the support set is conjugate-closed), then the weights are solved
/// again over all remaining samples. A clean model is returned unchanged.
pub fn cleanup(m: &BarycentricModel, samples: &SampleSet, pair_tol: f64) -> Result<BarycentricModel> {
    let (poles, zeros) = barycentric_poles_zeros(m)?;
    if poles.is_empty() {
        return Ok(m.clone());
    }
    let residues: Vec<f64> = poles.iter().map(|&p| residue(m, p).norm()).collect();
    let mut sorted = residues.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];

    let real_mode = sampling::is_conjugate_closed(&m.support) && m.support.iter().any(|z| z.im != 0.0);
    let mut drop = vec![false; m.order()];
    for (p, res) in poles.iter().zip(&residues) {
        let near_zero = zeros.iter().any(|z| (z - p).norm() <= pair_tol * (1.0 + p.norm()));
        if !(near_zero || *res <= pair_tol * median) {
            continue;
        }
        let j = argmax(m.support.iter().map(|z| -(z - p).norm()));
        drop[j] = true;
        if real_mode {
            if let Some(k) = m.support.iter().position(|z| *z == m.support[j].conj()) {
                drop[k] = true;
            }
        }
    }
    if !drop.contains(&true) {
        return Ok(m.clone());
    }
    let kept: Vec<usize> = (0..m.order()).filter(|&j| !drop[j]).collect();
    if kept.is_empty() {
        return Err(Error::InsufficientData("cleanup removed every support point".into()));
    }

    // Kept support points first, then every other sample as a residual row.
    let support_points: Vec<Complex64> = kept.iter().map(|&j| m.support[j]).collect();
    let support_values: Vec<Complex64> = kept.iter().map(|&j| m.values[j]).collect();
    let mut points = support_points.clone();
    let mut values = support_values.clone();
    for smp in samples.samples.iter().filter(|smp| !support_points.contains(&smp.point)) {
        points.push(smp.point);
        values.push(smp.value);
    }
    let support: Vec<usize> = (0..kept.len()).collect();
    let rest: Vec<usize> = (kept.len()..points.len()).collect();
    if rest.len() < support.len() {
        return Err(Error::Stagnation(support.len()));
    }
    let weights = solve_weights(&points, &values, &support, &rest, real_mode)?;
    BarycentricModel::new(support_points, support_values, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_oracle, structured_grid, Domain};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cubic(s: Complex64) -> Result<Complex64> {
        Ok((s * s + 1.0) / ((s + 1.0) * (s + c(2.0, 1.0)) * (s + c(2.0, -1.0))))
    }

    #[test]
    fn single_support_point_is_constant() {
        let m = BarycentricModel::new(vec![c(1.0, 0.0)], vec![c(3.0, -1.0)], vec![ONE]).unwrap();
        assert!((m.eval(c(7.0, 2.0)) - c(3.0, -1.0)).norm() <= 1e-15);
        assert_eq!(m.eval(c(1.0, 0.0)), c(3.0, -1.0));
    }

    #[test]
    fn recovers_cubic() {
        let grid = structured_grid(&Domain::omega(), 21, 5, true).unwrap();
        let samples = sample_oracle(&grid, cubic).unwrap();
        let opts = AaaOptions { tol: 1e-12, ..Default::default() };
        let fit = fit_aaa(&samples, &opts).unwrap();
        assert_eq!(fit.model.order(), 4);
        let err = fit.history.last().unwrap().max_error;
        assert!(err <= 1e-11, "{err}");
        for (z, f) in fit.model.support.iter().zip(&fit.model.values) {
            assert_eq!(fit.model.eval(*z), *f);
        }
    }

    #[test]
    fn pole_of_simple_fraction() {
        let grid = structured_grid(&Domain::omega(), 11, 3, true).unwrap();
        let samples = sample_oracle(&grid, |s| Ok(ONE / (s + 1.0))).unwrap();
        let fit = fit_aaa(&samples, &AaaOptions::default()).unwrap();
        let (poles, zeros) = barycentric_poles_zeros(&fit.model).unwrap();
        assert_eq!(poles.len(), 1);
        assert!((poles[0] + 1.0).norm() <= 1e-10, "{poles:?}");
        assert!(zeros.is_empty(), "{zeros:?}");
    }

    #[test]
    fn real_mode_keeps_conjugate_weights() {
        let grid = structured_grid(&Domain::omega(), 21, 5, true).unwrap();
        let samples = sample_oracle(&grid, cubic).unwrap();
        let opts = AaaOptions { real_mode: true, tol: 1e-12, ..Default::default() };
        let fit = fit_aaa(&samples, &opts).unwrap();
        let m = &fit.model;
        assert!(sampling::is_conjugate_closed(&m.support));
        for (j, z) in m.support.iter().enumerate() {
            let k = m.support.iter().position(|x| *x == z.conj()).unwrap();
            assert!((m.weights[k] - m.weights[j].conj()).norm() <= 1e-14);
        }
        let norm: f64 = m.weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn clean_model_is_unchanged() {
        let grid = structured_grid(&Domain::omega(), 21, 5, true).unwrap();
        let samples = sample_oracle(&grid, cubic).unwrap();
        let fit = fit_aaa(&samples, &AaaOptions { tol: 1e-12, ..Default::default() }).unwrap();
        let cleaned = cleanup(&fit.model, &samples, DEFAULT_CLEANUP_TOL).unwrap();
        assert_eq!(cleaned, fit.model);
    }

    #[test]
    fn stagnation_when_data_run_out() {
        let samples = SampleSet::from_samples(
            (0..3)
                .map(|i| {
                    let point = c(i as f64, 0.5);
                    crate::sampling::ComplexSample { point, value: (point * 3.0).exp() }
                })
                .collect(),
            None,
        );
        let opts = AaaOptions { tol: 1e-15, ..Default::default() };
        assert!(matches!(fit_aaa(&samples, &opts), Err(Error::Stagnation(_))));
    }
}
