//! The Loewner framework for SISO data.
//!
//! Samples are split into left data `(mu_j, v_j)` and right data
//! `(lambda_i, w_i)`. The Loewner and shifted Loewner matrices
//!
//! ```text
//! L[j][i]  = (v_j - w_i) / (mu_j - lambda_i)
//! Ls[j][i] = (mu_j v_j - lambda_i w_i) / (mu_j - lambda_i)
//! ```
//!
//! are compressed with the SVDs of `[L, Ls]` and `[L; Ls]`, giving the
//! descriptor realization `(E, A, B, C) = (-Y* L X, -Y* Ls X, Y* V, W X)`.

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, ComplexMatrix, DEFAULT_INFINITY_CUTOFF};
use crate::sampling::{self, ComplexSample, Domain, SampleSet};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Realizations with `cond(E)` above this are refused.
pub const MAX_E_CONDITION: f64 = 1e12;
/// Tolerance of the projected Sylvester identities checked by [`projected_points`].
pub const PROJECTED_SYLVESTER_TOL: f64 = 1e-8;

/// How samples are split into left and right data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PartitionScheme {
    /// Alternate sides in input order.
    Alternating,
    /// First half of the input left, second half right.
    HalfSplit,
    /// Sort lexicographically and alternate, so each left point has an
    /// adjacent right neighbour.
    #[default]
    EpsilonPaired,
}

impl std::str::FromStr for PartitionScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alternating" => Ok(Self::Alternating),
            "half_split" | "half-split" => Ok(Self::HalfSplit),
            "epsilon_paired" | "epsilon-paired" => Ok(Self::EpsilonPaired),
            other => Err(Error::InvalidArgument(format!("unknown partition scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPartition {
    pub left: Vec<ComplexSample>,
    pub right: Vec<ComplexSample>,
}

/// Splits conjugate-closed samples into disjoint left and right data.
///
/// Both members of a conjugate pair always land on the same side.
pub fn partition(samples: &SampleSet, scheme: PartitionScheme) -> Result<DataPartition> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!("{} samples, need at least 2", samples.len())));
    }
    let points = samples.points();
    let mut groups = sampling::conjugate_groups(&points)?;
    if groups.len() < 2 {
        return Err(Error::PartitionImpossible("a single conjugate pair cannot fill both sides".into()));
    }
    if scheme == PartitionScheme::EpsilonPaired {
        groups.sort_by(|a, b| {
            let (pa, pb) = (points[a.lead()], points[b.lead()]);
            pa.re.total_cmp(&pb.re).then(pa.im.total_cmp(&pb.im))
        });
    }
    let half = groups.len().div_ceil(2);
    let mut out = DataPartition { left: Vec::new(), right: Vec::new() };
    for (g, group) in groups.iter().enumerate() {
        let to_left = match scheme {
            PartitionScheme::Alternating | PartitionScheme::EpsilonPaired => g % 2 == 0,
            PartitionScheme::HalfSplit => g < half,
        };
        let side = if to_left { &mut out.left } else { &mut out.right };
        side.extend(group.indices().map(|i| samples.samples[i]));
    }
    Ok(out)
}

/// Loewner pencil with SISO directions (all-ones `R` and `L`).
#[derive(Debug, Clone)]
pub struct LoewnerPencil {
    /// `q x k` Loewner matrix.
    pub l: ComplexMatrix,
    /// `q x k` shifted Loewner matrix.
    pub ls: ComplexMatrix,
    /// Left values `v_j`.
    pub v: Vec<Complex64>,
    /// Right values `w_i`.
    pub w: Vec<Complex64>,
    /// Left points `mu_j`.
    pub mu: Vec<Complex64>,
    /// Right points `lambda_i`.
    pub lambda: Vec<Complex64>,
}

impl LoewnerPencil {
    pub fn rows(&self) -> usize {
        self.mu.len()
    }

    pub fn cols(&self) -> usize {
        self.lambda.len()
    }
}

pub fn build_pencil(p: &DataPartition) -> Result<LoewnerPencil> {
    if p.left.is_empty() || p.right.is_empty() {
        return Err(Error::InsufficientData("left and right data must both be nonempty".into()));
    }
    let (q, k) = (p.left.len(), p.right.len());
    for l in &p.left {
        for r in &p.right {
            if l.point == r.point {
                return Err(Error::CoincidentPoints { mu: l.point, lambda: r.point });
            }
        }
    }
    let mut l = Mat::zeros(q, k);
    let mut ls = Mat::zeros(q, k);
    for (j, left) in p.left.iter().enumerate() {
        let (mu, v) = (left.point, left.value);
        for (i, right) in p.right.iter().enumerate() {
            let (lam, w) = (right.point, right.value);
            let den = mu - lam;
            l[(j, i)] = (v - w) / den;
            ls[(j, i)] = (mu * v - lam * w) / den;
        }
    }
    Ok(LoewnerPencil {
        l,
        ls,
        v: p.left.iter().map(|s| s.value).collect(),
        w: p.right.iter().map(|s| s.value).collect(),
        mu: p.left.iter().map(|s| s.point).collect(),
        lambda: p.right.iter().map(|s| s.point).collect(),
    })
}

/// Normalized Frobenius residuals of the two Sylvester equations
/// `M L - L Lam = V R - L W` and `M Ls - Ls Lam = M V R - L W Lam`.
pub fn sylvester_residual(p: &LoewnerPencil) -> (f64, f64) {
    let (q, k) = (p.rows(), p.cols());
    let scale = p.ls.norm_l2().max(f64::MIN_POSITIVE);
    let (mut r1, mut r2) = (0.0, 0.0);
    for j in 0..q {
        for i in 0..k {
            let (mu, lam) = (p.mu[j], p.lambda[i]);
            let e1 = mu * p.l[(j, i)] - p.l[(j, i)] * lam - (p.v[j] - p.w[i]);
            let e2 = mu * p.ls[(j, i)] - p.ls[(j, i)] * lam - (mu * p.v[j] - p.w[i] * lam);
            r1 += e1.norm_sqr();
            r2 += e2.norm_sqr();
        }
    }
    (r1.sqrt() / scale, r2.sqrt() / scale)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationMode {
    ByOrder(usize),
    /// Smallest `r` with `sigma_{r+1} / sigma_1 <= tau`.
    ByTolerance(f64),
}

/// Descriptor model `H(s) = C (sE - A)^{-1} B` with `D = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub e: ComplexMatrix,
    pub a: ComplexMatrix,
    pub b: Vec<Complex64>,
    pub c: Vec<Complex64>,
}

impl StateSpaceModel {
    pub fn new(e: ComplexMatrix, a: ComplexMatrix, b: Vec<Complex64>, c: Vec<Complex64>) -> Result<Self> {
        let r = e.nrows();
        if e.ncols() != r || a.nrows() != r || a.ncols() != r || b.len() != r || c.len() != r {
            return Err(Error::InvalidArgument("inconsistent state-space dimensions".into()));
        }
        Ok(StateSpaceModel { e, a, b, c })
    }

    pub fn order(&self) -> usize {
        self.b.len()
    }

    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        eval_state_space(self, s)
    }
}

/// Output of [`truncate`].
#[derive(Debug, Clone)]
pub struct Truncation {
    pub model: StateSpaceModel,
    /// Singular values of `[L, Ls]` divided by the largest one.
    pub singular_values: Vec<f64>,
    /// Leading left singular vectors of `[L, Ls]` (`q x r`).
    pub y: ComplexMatrix,
    /// Leading right singular vectors of `[L; Ls]` (`k x r`).
    pub x: ComplexMatrix,
    pub e_condition: f64,
}

pub fn truncate(p: &LoewnerPencil, mode: TruncationMode) -> Result<Truncation> {
    truncate_with_limit(p, mode, MAX_E_CONDITION)
}

/// [`truncate`] with a caller-chosen bound on `cond(E)`.
pub fn truncate_with_limit(p: &LoewnerPencil, mode: TruncationMode, max_condition: f64) -> Result<Truncation> {
    let (q, k) = (p.rows(), p.cols());
    let horizontal = Mat::from_fn(q, 2 * k, |j, i| if i < k { p.l[(j, i)] } else { p.ls[(j, i - k)] });
    let vertical = Mat::from_fn(2 * q, k, |j, i| if j < q { p.l[(j, i)] } else { p.ls[(j - q, i)] });
    let svd_h = linalg::svd(&horizontal)?;
    let sigma1 = svd_h.singular_values[0];
    if sigma1 == 0.0 {
        return Err(Error::RankZero);
    }
    let normalized: Vec<f64> = svd_h.singular_values.iter().map(|s| s / sigma1).collect();
    let max_order = q.min(k);
    let r = match mode {
        TruncationMode::ByOrder(r) => {
            if r == 0 || r > max_order {
                return Err(Error::InvalidArgument(format!("order {r} outside 1..={max_order}")));
            }
            r
        }
        TruncationMode::ByTolerance(tau) => {
            if !(tau > 0.0 && tau < 1.0) {
                return Err(Error::InvalidArgument(format!("tolerance {tau} outside (0, 1)")));
            }
            order_for_tolerance(&normalized, tau).min(max_order)
        }
    };
    let svd_v = linalg::svd(&vertical)?;
    let y = svd_h.u.subcols(0, r).to_owned();
    let x = svd_v.v.subcols(0, r).to_owned();
    let yh = y.adjoint();
    let e = -(yh * &p.l * &x);
    let a = -(yh * &p.ls * &x);
    let b: Vec<Complex64> = (0..r)
        .map(|i| (0..q).map(|j| y[(j, i)].conj() * p.v[j]).sum())
        .collect();
    let c: Vec<Complex64> = (0..r)
        .map(|i| (0..k).map(|j| p.w[j] * x[(j, i)]).sum())
        .collect();
    let e_condition = linalg::condition_number(&e)?;
    if !(e_condition <= max_condition) {
        return Err(Error::IllConditioned { cond: e_condition, order: r });
    }
    Ok(Truncation {
        model: StateSpaceModel { e, a, b, c },
        singular_values: normalized,
        y,
        x,
        e_condition,
    })
}

/// Realization `(E, A, B, C) = (-L, -Ls, V, W)` of a square pencil, valid when
/// the data are just enough (no compression). `E` may be singular, e.g. for a
/// proper but not strictly proper interpolant.
pub fn realize_square(p: &LoewnerPencil) -> Result<StateSpaceModel> {
    if p.rows() != p.cols() {
        return Err(Error::InvalidArgument("square realization needs as many left as right points".into()));
    }
    StateSpaceModel::new(-&p.l, -&p.ls, p.v.clone(), p.w.clone())
}

/// Smallest `r >= 1` with `sigma[r] <= tau` (0-based, normalized values).
pub fn order_for_tolerance(normalized: &[f64], tau: f64) -> usize {
    (1..normalized.len()).find(|&r| normalized[r] <= tau).unwrap_or(normalized.len())
}

/// Partition, build and truncate in one call.
pub fn fit_loewner(samples: &SampleSet, scheme: PartitionScheme, mode: TruncationMode) -> Result<(LoewnerPencil, Truncation)> {
    let part = partition(samples, scheme)?;
    let pencil = build_pencil(&part)?;
    let t = truncate(&pencil, mode)?;
    Ok((pencil, t))
}

/// Evaluates `C (sE - A)^{-1} B` by solving the `r x r` system.
pub fn eval_state_space(m: &StateSpaceModel, s: Complex64) -> Result<Complex64> {
    let r = m.order();
    let mut sys: Vec<Complex64> = Vec::with_capacity(r * r);
    for i in 0..r {
        for j in 0..r {
            sys.push(s * m.e[(i, j)] - m.a[(i, j)]);
        }
    }
    let mut x = m.b.clone();
    linalg::solve_in_place(&mut sys, r, &mut x).map_err(|_| Error::SingularAt(s))?;
    Ok(m.c.iter().zip(&x).map(|(c, x)| c * x).sum())
}

/// Finite eigenvalues of `(A, E)`.
pub fn poles(m: &StateSpaceModel) -> Result<Vec<Complex64>> {
    linalg::finite_generalized_eigenvalues(&m.a, &m.e, DEFAULT_INFINITY_CUTOFF)
}

/// Finite eigenvalues of the bordered pencil `([A B; C 0], [E 0; 0 0])`.
pub fn zeros(m: &StateSpaceModel) -> Result<Vec<Complex64>> {
    descriptor_zeros(&m.e, &m.a, &m.b, &m.c, ZERO)
}

/// Invariant zeros of the descriptor system `(E, A, B, C, D)`.
pub fn descriptor_zeros(
    e: &ComplexMatrix,
    a: &ComplexMatrix,
    b: &[Complex64],
    c: &[Complex64],
    d: Complex64,
) -> Result<Vec<Complex64>> {
    let r = b.len();
    let mm = Mat::from_fn(r + 1, r + 1, |i, j| match (i < r, j < r) {
        (true, true) => a[(i, j)],
        (true, false) => b[i],
        (false, true) => c[j],
        (false, false) => d,
    });
    let nn = Mat::from_fn(r + 1, r + 1, |i, j| if i < r && j < r { e[(i, j)] } else { ZERO });
    linalg::finite_generalized_eigenvalues(&mm, &nn, DEFAULT_INFINITY_CUTOFF)
}

/// Right (`lambda_hat`) and left (`mu_hat`) projected interpolation points.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedPoints {
    pub lambda_hat: Vec<Complex64>,
    pub mu_hat: Vec<Complex64>,
}

impl ProjectedPoints {
    /// Greedy nearest-neighbour matching of right to left points; returns the
    /// largest matched distance.
    pub fn max_pair_gap(&self) -> f64 {
        let mut avail: Vec<Complex64> = self.mu_hat.clone();
        let mut worst = 0.0f64;
        for &l in &self.lambda_hat {
            if avail.is_empty() {
                break;
            }
            let (idx, d) = avail
                .iter()
                .enumerate()
                .map(|(i, m)| (i, (m - l).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            worst = worst.max(d);
            avail.swap_remove(idx);
        }
        worst
    }
}

/// Eigenvalues of `(Ls^ - V^ R^, L^)` and `(Ls^ - L^ W^, L^)` where the hatted
/// quantities are the pencil projected by `Y` (left) and `X` (right).
pub fn projected_points(p: &LoewnerPencil, y: &ComplexMatrix, x: &ComplexMatrix) -> Result<ProjectedPoints> {
    let r = y.ncols();
    if x.ncols() != r || y.nrows() != p.rows() || x.nrows() != p.cols() {
        return Err(Error::InvalidArgument("projector shapes do not match the pencil".into()));
    }
    let yh = y.adjoint();
    let l_hat = yh * &p.l * x;
    let ls_hat = yh * &p.ls * x;
    let v_hat: Vec<Complex64> = (0..r).map(|i| (0..p.rows()).map(|j| y[(j, i)].conj() * p.v[j]).sum()).collect();
    let left_dir_hat: Vec<Complex64> = (0..r).map(|i| (0..p.rows()).map(|j| y[(j, i)].conj()).sum()).collect();
    let w_hat: Vec<Complex64> = (0..r).map(|i| (0..p.cols()).map(|j| p.w[j] * x[(j, i)]).sum()).collect();
    let right_dir_hat: Vec<Complex64> = (0..r).map(|i| (0..p.cols()).map(|j| x[(j, i)]).sum()).collect();

    let right_pencil = Mat::from_fn(r, r, |i, j| ls_hat[(i, j)] - v_hat[i] * right_dir_hat[j]);
    let left_pencil = Mat::from_fn(r, r, |i, j| ls_hat[(i, j)] - left_dir_hat[i] * w_hat[j]);

    // Lam^ = L^{-1}(Ls^ - V^R^) and M^ = (Ls^ - L^W^) L^{-1} must satisfy the
    // projected Sylvester identities.
    let lam_mat = linalg::solve_matrix(&l_hat, &right_pencil).map_err(|_| Error::SingularProjection)?;
    let mu_mat_t = linalg::solve_matrix(&l_hat.transpose().to_owned(), &left_pencil.transpose().to_owned())
        .map_err(|_| Error::SingularProjection)?;
    let mu_mat = mu_mat_t.transpose().to_owned();
    let scale = ls_hat.norm_l2().max(f64::MIN_POSITIVE);
    let res_right = (&ls_hat - &l_hat * &lam_mat - &right_pencil_rank_one(&v_hat, &right_dir_hat)).norm_l2() / scale;
    let res_left = (&ls_hat - &mu_mat * &l_hat - &right_pencil_rank_one(&left_dir_hat, &w_hat)).norm_l2() / scale;
    let worst = res_right.max(res_left);
    if !(worst <= PROJECTED_SYLVESTER_TOL) {
        return Err(Error::SylvesterResidual(worst));
    }

    let spec_right = linalg::generalized_spectrum(&right_pencil, &l_hat, DEFAULT_INFINITY_CUTOFF)?;
    let spec_left = linalg::generalized_spectrum(&left_pencil, &l_hat, DEFAULT_INFINITY_CUTOFF)?;
    if spec_right.finite.len() != r || spec_left.finite.len() != r {
        return Err(Error::SingularProjection);
    }
    Ok(ProjectedPoints { lambda_hat: spec_right.finite, mu_hat: spec_left.finite })
}

fn right_pencil_rank_one(col: &[Complex64], row: &[Complex64]) -> ComplexMatrix {
    Mat::from_fn(col.len(), row.len(), |i, j| col[i] * row[j])
}

/// One densification step of [`trajectory_study`].
#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub step: usize,
    pub nx: usize,
    pub ny: usize,
    pub grid_size: usize,
    pub points: ProjectedPoints,
    pub max_pair_gap: f64,
}

/// Fits at a fixed order on grids of growing density and records the
/// projected interpolation points.
///
/// Step `i` uses `i*a` abscissae and `i*a + 1` ordinates; the extra ordinate
/// keeps the real axis on the grid so the data stay conjugate-closed.
pub fn trajectory_study<F>(
    oracle: F,
    domain: &Domain,
    a: usize,
    n_steps: usize,
    order: usize,
    scheme: PartitionScheme,
) -> Result<Vec<TrajectoryStep>>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    if a < 2 || n_steps == 0 {
        return Err(Error::InvalidArgument("trajectory study needs a >= 2 and at least one step".into()));
    }
    let mut out = Vec::with_capacity(n_steps);
    for step in 1..=n_steps {
        let (nx, ny) = trajectory_grid_shape(a, step);
        let grid = sampling::structured_grid(domain, nx, ny, true)?;
        let samples = sampling::sample_oracle(&grid, &oracle)?;
        let (pencil, t) = fit_loewner(&samples, scheme, TruncationMode::ByOrder(order))?;
        let points = projected_points(&pencil, &t.y, &t.x)?;
        let gap = points.max_pair_gap();
        out.push(TrajectoryStep { step, nx, ny, grid_size: samples.len(), points, max_pair_gap: gap });
    }
    Ok(out)
}

/// Grid shape used at a given step of [`trajectory_study`].
pub fn trajectory_grid_shape(a: usize, step: usize) -> (usize, usize) {
    let n = a * step;
    (n, if n.is_multiple_of(2) { n + 1 } else { n })
}

/// True when `values` is closed under conjugation up to `rel_tol * (1 + |z|)`.
pub fn is_conjugate_closed_approx(values: &[Complex64], rel_tol: f64) -> bool {
    let mut used = vec![false; values.len()];
    for i in 0..values.len() {
        if used[i] {
            continue;
        }
        let z = values[i];
        let tol = rel_tol * (1.0 + z.norm());
        if z.im.abs() <= tol {
            used[i] = true;
            continue;
        }
        let partner = (0..values.len())
            .filter(|&j| j != i && !used[j])
            .min_by(|&a, &b| (values[a] - z.conj()).norm().total_cmp(&(values[b] - z.conj()).norm()));
        match partner {
            Some(j) if (values[j] - z.conj()).norm() <= tol => {
                used[i] = true;
                used[j] = true;
            }
            _ => return false,
        }
    }
    true
}
