//! Vector Fitting of the pole-residue form
//!
//! ```text
//! f(s) = sum_n c_n / (s - a_n) + d + s h
//! ```
//!
//! Each iteration solves the linearized problem
//! `sum c_n/(s-a_n) + d + s h = f(s) (sum c~_n/(s-a_n) + 1)` in real arithmetic
//! and moves the poles to the zeros of the weight function
//! `sigma(s) = sum c~_n/(s-a_n) + 1`. Complex poles are kept in conjugate
//! pairs throughout, so `d` and `h` are real.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix};
use crate::loewner;
use crate::sampling::SampleSet;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Poles beyond this magnitude abort the iteration.
pub const DIVERGENCE_LIMIT: f64 = 1e6;
/// Relative pole movement below which the iteration has converged.
pub const CONVERGENCE_TOL: f64 = 1e-10;
/// Imaginary part of a supplied pole treated as zero, relative to `1 + |a|`.
const REAL_POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleResidueModel {
    pub poles: Vec<Complex64>,
    pub residues: Vec<Complex64>,
    pub d: f64,
    pub h: f64,
}

impl PoleResidueModel {
    pub fn new(poles: Vec<Complex64>, residues: Vec<Complex64>, d: f64, h: f64) -> Result<Self> {
        if poles.len() != residues.len() {
            return Err(Error::InvalidArgument("poles and residues differ in length".into()));
        }
        Ok(PoleResidueModel { poles, residues, d, h })
    }

    pub fn order(&self) -> usize {
        self.poles.len()
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        eval_pole_residue(self, s)
    }
}

/// Direct summation; evaluating exactly at a pole is an error.
pub fn eval_pole_residue(m: &PoleResidueModel, s: Complex64) -> Result<Complex64> {
    let mut acc = Complex64::new(m.d, 0.0) + s * m.h;
    for (a, c) in m.poles.iter().zip(&m.residues) {
        if s == *a {
            return Err(Error::SingularAt(s));
        }
        acc += c / (s - a);
    }
    Ok(acc)
}

/// Poles (as stored) and zeros of a pole-residue model. The zeros are the
/// invariant zeros of a descriptor realization that carries `d` as the
/// feedthrough and `s h` as a 2x2 nilpotent block.
pub fn pr_poles_zeros(m: &PoleResidueModel) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let n = m.order();
    let extra = if m.h != 0.0 { 2 } else { 0 };
    let dim = n + extra;
    let mut e: ComplexMatrix = Mat::zeros(dim, dim);
    let mut a: ComplexMatrix = Mat::zeros(dim, dim);
    let mut b = vec![ZERO; dim];
    let mut c = vec![ZERO; dim];
    for k in 0..n {
        e[(k, k)] = ONE;
        a[(k, k)] = m.poles[k];
        b[k] = ONE;
        c[k] = m.residues[k];
    }
    if extra == 2 {
        e[(n, n + 1)] = ONE;
        a[(n, n)] = ONE;
        a[(n + 1, n + 1)] = ONE;
        b[n + 1] = ONE;
        c[n] = Complex64::new(-m.h, 0.0);
    }
    let zeros = loewner::descriptor_zeros(&e, &a, &b, &c, Complex64::new(m.d, 0.0))?;
    Ok((m.poles.clone(), zeros))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialPoles {
    /// Weakly damped conjugate pairs spread over the data (see [`auto_initial_poles`]).
    #[default]
    Auto,
    Given(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VfOptions {
    pub order: usize,
    pub n_iter: usize,
    pub initial_poles: InitialPoles,
    pub asymptote: Asymptote,
    /// Per-sample least-squares weights; all ones when absent.
    pub weights: Option<Vec<f64>>,
}

impl VfOptions {
    pub fn new(order: usize, n_iter: usize) -> Self {
        VfOptions { order, n_iter, initial_poles: InitialPoles::Auto, asymptote: Asymptote::default(), weights: None }
    }
}

/// Polynomial part fitted next to the partial fractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Asymptote {
    /// Strictly proper: `d = h = 0`.
    None,
    /// Constant `d`, `h = 0`.
    Constant,
    /// `d + s h`.
    #[default]
    Linear,
}

impl Asymptote {
    fn terms(self) -> usize {
        match self {
            Asymptote::None => 0,
            Asymptote::Constant => 1,
            Asymptote::Linear => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VfIteration {
    pub iter: usize,
    pub max_pole_move: f64,
    /// `|A x - b| / |b|` of the linearized problem.
    pub linearized_residual: f64,
    /// Condition number of the column-scaled least-squares matrix.
    pub condition: f64,
}

impl VfIteration {
    /// Set when the least-squares problem lost most of its digits.
    pub fn ill_conditioned(&self) -> bool {
        self.condition > 1e13
    }
}

#[derive(Debug, Clone)]
pub struct VfFit {
    pub model: PoleResidueModel,
    pub history: Vec<VfIteration>,
}

/// A real pole or the upper member of a conjugate pair.
#[derive(Debug, Clone, Copy, PartialEq)]
enum PoleGroup {
    Real(f64),
    Pair(Complex64),
}

impl PoleGroup {
    fn width(&self) -> usize {
        match self {
            PoleGroup::Real(_) => 1,
            PoleGroup::Pair(_) => 2,
        }
    }

    /// Real basis functions at `s`: `1/(s-a)` for a real pole, and
    /// `1/(s-a) + 1/(s-a*)`, `i/(s-a) - i/(s-a*)` for a pair.
    fn basis(&self, s: Complex64, out: &mut Vec<Complex64>) {
        match *self {
            PoleGroup::Real(a) => out.push(ONE / (s - a)),
            PoleGroup::Pair(a) => {
                let (p, q) = (ONE / (s - a), ONE / (s - a.conj()));
                out.push(p + q);
                out.push(Complex64::i() * (p - q));
            }
        }
    }
}

fn groups_of(poles: &[Complex64]) -> Result<Vec<PoleGroup>> {
    let mut out = Vec::new();
    let mut used = vec![false; poles.len()];
    for i in 0..poles.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let a = poles[i];
        let tol = REAL_POLE_TOL * (1.0 + a.norm());
        if a.im.abs() <= tol {
            out.push(PoleGroup::Real(a.re));
            continue;
        }
        let partner = (0..poles.len())
            .filter(|&j| !used[j])
            .min_by(|&x, &y| (poles[x] - a.conj()).norm().total_cmp(&(poles[y] - a.conj()).norm()))
            .filter(|&j| (poles[j] - a.conj()).norm() <= tol)
            .ok_or_else(|| Error::Symmetry(format!("pole {a} has no conjugate partner")))?;
        used[partner] = true;
        out.push(PoleGroup::Pair(if a.im > 0.0 { a } else { a.conj() }));
    }
    Ok(out)
}

fn expand(groups: &[PoleGroup]) -> Vec<Complex64> {
    let mut out = Vec::new();
    for g in groups {
        match *g {
            PoleGroup::Real(a) => out.push(Complex64::new(a, 0.0)),
            PoleGroup::Pair(a) => {
                out.push(a);
                out.push(a.conj());
            }
        }
    }
    out
}

/// Starting poles: `order / 2` conjugate pairs equally spaced along the longer
/// side of the sample bounding box, pushed off that axis by the half-width of
/// the box plus 1% of its length, plus one real pole left of the data when
/// the order is odd.
pub fn auto_initial_poles(samples: &SampleSet, order: usize) -> Vec<Complex64> {
    let pts = samples.points();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        x0 = x0.min(p.re);
        x1 = x1.max(p.re);
        y0 = y0.min(p.im);
        y1 = y1.max(p.im);
    }
    let along_real = x1 - x0 >= y1 - y0;
    let (lo, hi) = if along_real { (x0, x1) } else { (y0.max(0.0), y1) };
    let span = (hi - lo).max(f64::EPSILON);
    // Distance from the sampling axis to the edge of the data; the starting
    // poles sit just beyond it so none of them lands on a sample.
    let offset = if along_real { y0.abs().max(y1.abs()) } else { x0.abs().max(x1.abs()) };
    let pairs = order / 2;
    let mut out = Vec::with_capacity(order);
    for k in 0..pairs {
        let t = if pairs == 1 { 0.5 } else { k as f64 / (pairs - 1) as f64 };
        let b = lo + span * t;
        let damping = offset + span / 100.0;
        let a = if along_real { Complex64::new(b, damping) } else { Complex64::new(-damping, b.max(damping)) };
        out.push(a);
        out.push(a.conj());
    }
    if order % 2 == 1 {
        // Off the sampled segment, so it cannot land on a sample.
        let off = if along_real { lo - span / 2.0 } else { -span / 2.0 };
        out.push(Complex64::new(off, 0.0));
    }
    out
}

pub fn fit_vf(samples: &SampleSet, opts: &VfOptions) -> Result<VfFit> {
    let order = opts.order;
    if order == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    let n = samples.len();
    if n < 2 * (order + 2) {
        return Err(Error::InsufficientData(format!("{n} samples cannot support order {order} (need {})", 2 * (order + 2))));
    }
    if !samples.samples.iter().all(|s| s.point.re.is_finite() && s.point.im.is_finite() && s.value.re.is_finite() && s.value.im.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    if !crate::sampling::is_conjugate_closed(&samples.points()) {
        return Err(Error::Symmetry("vector fitting needs conjugate-closed samples".into()));
    }
    let weights = match &opts.weights {
        Some(w) if w.len() != n => return Err(Error::InvalidArgument("weight vector length differs from sample count".into())),
        Some(w) => w.clone(),
        None => vec![1.0; n],
    };
    let start = match &opts.initial_poles {
        InitialPoles::Auto => auto_initial_poles(samples, order),
        InitialPoles::Given(p) => p.clone(),
    };
    if start.len() != order {
        return Err(Error::InvalidArgument(format!("{} initial poles for order {order}", start.len())));
    }
    let mut groups = groups_of(&start)?;

    let mut history = Vec::new();
    for iter in 1..=opts.n_iter {
        let (sol, residual, condition) = solve_linearized(samples, &weights, &groups, opts.asymptote, true)?;
        let new_groups = relocate(&groups, &sol[sol.len() - order..])?;
        let old = expand(&groups);
        let new = expand(&new_groups);
        if let Some(p) = new.iter().find(|p| p.norm() > DIVERGENCE_LIMIT) {
            return Err(Error::Divergence(p.norm()));
        }
        let (max_move, converged) = pole_movement(&old, &new);
        history.push(VfIteration { iter, max_pole_move: max_move, linearized_residual: residual, condition });
        groups = new_groups;
        if converged {
            break;
        }
    }

    let (sol, _, _) = solve_linearized(samples, &weights, &groups, opts.asymptote, false)?;
    let mut residues = Vec::with_capacity(order);
    let mut k = 0;
    for g in &groups {
        match g {
            PoleGroup::Real(_) => residues.push(Complex64::new(sol[k], 0.0)),
            PoleGroup::Pair(_) => {
                let c = Complex64::new(sol[k], sol[k + 1]);
                residues.push(c);
                residues.push(c.conj());
            }
        }
        k += g.width();
    }
    let extra = opts.asymptote.terms();
    let d = if extra >= 1 { sol[order] } else { 0.0 };
    let h = if extra == 2 { sol[order + 1] } else { 0.0 };
    let model = PoleResidueModel { poles: expand(&groups), residues, d, h };
    Ok(VfFit { model, history })
}

/// Real-stacked least squares. Unknowns are the residue coordinates, the
/// asymptotic terms and, when `with_sigma` is set, the weight-function
/// coordinates.
/// Returns the solution, the relative residual and the condition number of
/// the column-scaled matrix.
fn solve_linearized(
    samples: &SampleSet,
    weights: &[f64],
    groups: &[PoleGroup],
    asymptote: Asymptote,
    with_sigma: bool,
) -> Result<(Vec<f64>, f64, f64)> {
    let order: usize = groups.iter().map(PoleGroup::width).sum();
    let extra = asymptote.terms();
    let cols = order + extra + if with_sigma { order } else { 0 };
    let n = samples.len();
    let mut a = Mat::<f64>::zeros(2 * n, cols);
    let mut b = vec![0.0; 2 * n];
    let mut phi = Vec::with_capacity(order);
    for (r, smp) in samples.samples.iter().enumerate() {
        let (s, f, w) = (smp.point, smp.value, weights[r]);
        phi.clear();
        for g in groups {
            g.basis(s, &mut phi);
        }
        if phi.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(Error::SingularAt(s));
        }
        let mut row: Vec<Complex64> = phi.clone();
        if extra >= 1 {
            row.push(ONE);
        }
        if extra == 2 {
            row.push(s);
        }
        if with_sigma {
            row.extend(phi.iter().map(|p| -f * p));
        }
        for (c, z) in row.iter().enumerate() {
            a[(r, c)] = w * z.re;
            a[(n + r, c)] = w * z.im;
        }
        b[r] = w * f.re;
        b[n + r] = w * f.im;
    }
    let mut scale = vec![1.0; cols];
    for (c, sc) in scale.iter_mut().enumerate() {
        let norm = (0..2 * n).map(|r| a[(r, c)] * a[(r, c)]).sum::<f64>().sqrt();
        if norm > 0.0 {
            *sc = norm;
            for r in 0..2 * n {
                a[(r, c)] /= norm;
            }
        }
    }
    let sv = a.singular_values().map_err(|_| Error::NoConvergence("SVD"))?;
    let condition = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    };
    let mut x = linalg::least_squares_real(&a, &b)?;
    let mut resid = 0.0;
    for (r, br) in b.iter().enumerate() {
        let ax: f64 = (0..cols).map(|c| a[(r, c)] * x[c]).sum();
        resid += (ax - br) * (ax - br);
    }
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    for (xc, sc) in x.iter_mut().zip(&scale) {
        *xc /= sc;
    }
    Ok((x, resid.sqrt() / bnorm, condition))
}

/// Zeros of `sigma(s) = sum c~ phi(s) + 1` as the eigenvalues of
/// `A - b c~^T` with real 2x2 blocks for conjugate pairs.
fn relocate(groups: &[PoleGroup], sigma: &[f64]) -> Result<Vec<PoleGroup>> {
    let order = sigma.len();
    let mut a = Mat::<f64>::zeros(order, order);
    let mut b = vec![0.0; order];
    let mut k = 0;
    for g in groups {
        match *g {
            PoleGroup::Real(p) => {
                a[(k, k)] = p;
                b[k] = 1.0;
            }
            PoleGroup::Pair(p) => {
                a[(k, k)] = p.re;
                a[(k, k + 1)] = p.im;
                a[(k + 1, k)] = -p.im;
                a[(k + 1, k + 1)] = p.re;
                b[k] = 2.0;
            }
        }
        k += g.width();
    }
    for i in 0..order {
        for j in 0..order {
            a[(i, j)] -= b[i] * sigma[j];
        }
    }
    let eig = linalg::real_eigenvalues(&a)?;
    let mut out: Vec<PoleGroup> = Vec::new();
    for z in eig {
        if z.im == 0.0 {
            out.push(PoleGroup::Real(z.re));
        } else if z.im > 0.0 {
            out.push(PoleGroup::Pair(z));
        }
    }
    out.sort_by(|x, y| key(x).total_cmp(&key(y)));
    Ok(out)
}

fn key(g: &PoleGroup) -> f64 {
    match *g {
        PoleGroup::Real(a) => a,
        PoleGroup::Pair(a) => a.re,
    }
}

/// Largest distance after greedily matching new poles to old ones, and
/// whether every matched pole moved less than the convergence tolerance.
fn pole_movement(old: &[Complex64], new: &[Complex64]) -> (f64, bool) {
    let mut avail: Vec<Complex64> = old.to_vec();
    let mut worst = 0.0f64;
    let mut converged = true;
    for p in new {
        let (idx, d) = avail
            .iter()
            .enumerate()
            .map(|(i, q)| (i, (q - p).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("same number of poles");
        worst = worst.max(d);
        converged &= d < CONVERGENCE_TOL * (1.0 + p.norm());
        avail.swap_remove(idx);
    }
    (worst, converged)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_oracle, structured_grid, Domain};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reference() -> PoleResidueModel {
        PoleResidueModel::new(
            vec![c(-1.0, 0.0), c(3.0, 2.0), c(3.0, -2.0)],
            vec![c(2.0, 0.0), c(0.5, 1.5), c(0.5, -1.5)],
            0.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn single_pole_at_origin() {
        let m = PoleResidueModel::new(vec![c(-1.0, 0.0)], vec![ONE], 0.0, 0.0).unwrap();
        assert_eq!(m.eval(ZERO).unwrap(), ONE);
        assert!(matches!(m.eval(c(-1.0, 0.0)), Err(Error::SingularAt(_))));
        let (_, zeros) = pr_poles_zeros(&m).unwrap();
        assert!(zeros.is_empty());
    }

    #[test]
    fn zero_of_shifted_fraction() {
        let m = PoleResidueModel::new(vec![c(-1.0, 0.0)], vec![ONE], 1.0, 0.0).unwrap();
        let (_, zeros) = pr_poles_zeros(&m).unwrap();
        assert_eq!(zeros.len(), 1);
        assert!((zeros[0] + 2.0).norm() <= 1e-12);
    }

    #[test]
    fn zeros_with_linear_term() {
        // 1/(s+1) + s = (s^2 + s + 1)/(s+1)
        let m = PoleResidueModel::new(vec![c(-1.0, 0.0)], vec![ONE], 0.0, 1.0).unwrap();
        let (_, mut zeros) = pr_poles_zeros(&m).unwrap();
        zeros.sort_by(|a, b| a.im.total_cmp(&b.im));
        let r = 3f64.sqrt() / 2.0;
        assert_eq!(zeros.len(), 2);
        assert!((zeros[0] - c(-0.5, -r)).norm() <= 1e-12);
        assert!((zeros[1] - c(-0.5, r)).norm() <= 1e-12);
    }

    #[test]
    fn recovers_third_order_model() {
        let truth = reference();
        let grid = structured_grid(&Domain::omega(), 21, 5, true).unwrap();
        let samples = sample_oracle(&grid, |s| truth.eval(s)).unwrap();
        let fit = fit_vf(&samples, &VfOptions::new(3, 10)).unwrap();
        for p in &truth.poles {
            let d = fit.model.poles.iter().map(|q| (q - p).norm()).fold(f64::INFINITY, f64::min);
            assert!(d <= 1e-8, "pole {p} off by {d}");
        }
    }

    #[test]
    fn true_poles_are_a_fixed_point() {
        let truth = reference();
        let grid = structured_grid(&Domain::omega(), 21, 5, true).unwrap();
        let samples = sample_oracle(&grid, |s| truth.eval(s)).unwrap();
        let opts = VfOptions { initial_poles: InitialPoles::Given(truth.poles.clone()), ..VfOptions::new(3, 1) };
        let fit = fit_vf(&samples, &opts).unwrap();
        assert!(fit.history[0].max_pole_move <= 1e-10, "{:?}", fit.history);
    }

    #[test]
    fn real_eigenvalues_are_conjugate_exact() {
        let a = Mat::from_fn(3, 3, |i, j| [[0.0, 1.0, 0.0], [-2.0, 0.3, 1.0], [0.5, 0.0, 1.0]][i][j]);
        let e = linalg::real_eigenvalues(&a).unwrap();
        assert!(crate::loewner::is_conjugate_closed_approx(&e, 0.0));
    }
}
