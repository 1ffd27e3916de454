//! Dense complex linear algebra used by every fitting method.
//!
//! Decompositions are delegated to `faer`; this module fixes the contracts the
//! fitters rely on (sorted singular values, finite spectrum of a pencil with
//! infinite eigenvalues filtered out, pseudo-inverse least squares).

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = Mat<Complex64>;

/// Default magnitude above which a generalized eigenvalue counts as infinite.
pub const DEFAULT_INFINITY_CUTOFF: f64 = 1e8;
/// Eigenpairs with a larger normalized backward residual are discarded.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-6;
/// Relative singular value cutoff of the pseudo-inverse.
pub const LSTSQ_RCOND: f64 = 1e-13;

/// Thin singular value decomposition `A = U diag(s) V*`.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidArgument("svd of an empty matrix".into()));
    }
    check_finite(a, "svd input")?;
    let dec = a.thin_svd().map_err(|_| Error::NoConvergence("SVD"))?;
    let singular_values: Vec<f64> = dec.S().column_vector().iter().map(|x| x.re).collect();
    if singular_values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NoConvergence("SVD"));
    }
    Ok(SvdResult {
        u: dec.U().to_owned(),
        singular_values,
        v: dec.V().to_owned(),
    })
}

/// Spectrum of the pencil `M - lambda N`, split into finite and discarded parts.
#[derive(Debug, Clone)]
pub struct PencilSpectrum {
    pub finite: Vec<Complex64>,
    /// Eigenvalues at (or beyond the cutoff towards) infinity.
    pub infinite: usize,
    /// Finite-looking eigenvalues rejected by the backward-residual test.
    pub rejected: usize,
}

/// Computes the spectrum of `(M, N)`, i.e. all `lambda` with `det(M - lambda N) = 0`.
pub fn generalized_spectrum(
    m: &ComplexMatrix,
    n: &ComplexMatrix,
    infinity_cutoff: f64,
) -> Result<PencilSpectrum> {
    let dim = m.nrows();
    if m.ncols() != dim || n.nrows() != dim || n.ncols() != dim {
        return Err(Error::InvalidArgument("pencil matrices must be square and of equal shape".into()));
    }
    if dim == 0 {
        return Ok(PencilSpectrum { finite: vec![], infinite: 0, rejected: 0 });
    }
    check_finite(m, "pencil M")?;
    check_finite(n, "pencil N")?;
    let norm_m = m.norm_l2();
    let norm_n = n.norm_l2();
    // faer's QZ driver mis-sizes its workspace for 1x1 pencils.
    let (alphas, betas, vecs): (Vec<Complex64>, Vec<Complex64>, ComplexMatrix) = if dim == 1 {
        (vec![m[(0, 0)]], vec![n[(0, 0)]], identity(1))
    } else {
        let dec = m.generalized_eigen(n).map_err(|_| Error::NoConvergence("QZ"))?;
        (
            dec.S_a().column_vector().iter().copied().collect(),
            dec.S_b().column_vector().iter().copied().collect(),
            dec.U().to_owned(),
        )
    };

    let eps = f64::EPSILON * dim as f64 * 10.0;
    let mut out = PencilSpectrum { finite: Vec::new(), infinite: 0, rejected: 0 };
    for j in 0..dim {
        let (alpha, beta) = (alphas[j], betas[j]);
        if alpha.norm() <= eps * norm_m.max(f64::MIN_POSITIVE)
            && beta.norm() <= eps * norm_n.max(f64::MIN_POSITIVE)
        {
            return Err(Error::SingularPencil);
        }
        if beta.norm() == 0.0 || alpha.norm() > infinity_cutoff * beta.norm() {
            out.infinite += 1;
            continue;
        }
        let lambda = alpha / beta;
        // Normalized backward error of (lambda, x) in homogeneous form.
        let x = vecs.col(j);
        let mut num = 0.0;
        for r in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..dim {
                acc += (beta * m[(r, c)] - alpha * n[(r, c)]) * x[c];
            }
            num += acc.norm_sqr();
        }
        let xnorm = x.norm_l2();
        let denom = (beta.norm() * norm_m + alpha.norm() * norm_n) * xnorm;
        let resid = if denom > 0.0 { num.sqrt() / denom } else { f64::INFINITY };
        if !resid.is_finite() || resid > EIGEN_RESIDUAL_TOL || !lambda.re.is_finite() || !lambda.im.is_finite() {
            out.rejected += 1;
            continue;
        }
        out.finite.push(lambda);
    }
    Ok(out)
}

/// Finite generalized eigenvalues of `(M, N)` with `|lambda| <= infinity_cutoff`.
pub fn finite_generalized_eigenvalues(
    m: &ComplexMatrix,
    n: &ComplexMatrix,
    infinity_cutoff: f64,
) -> Result<Vec<Complex64>> {
    Ok(generalized_spectrum(m, n, infinity_cutoff)?.finite)
}

/// Eigenvalues of a real square matrix. Complex eigenvalues come in exact
/// conjugate pairs and real ones have a zero imaginary part.
pub fn real_eigenvalues(a: &Mat<f64>) -> Result<Vec<Complex64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidArgument("eigenvalues need a square matrix".into()));
    }
    if a.col_iter().flat_map(|c| c.iter().copied().collect::<Vec<_>>()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("matrix has a non-finite entry".into()));
    }
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![Complex64::new(a[(0, 0)], 0.0)]),
        _ => {}
    }
    let raw = a.eigenvalues().map_err(|_| Error::NoConvergence("eigenvalues"))?;
    // Rebuild the spectrum from the upper half so conjugate symmetry is exact.
    let mut upper: Vec<Complex64> = raw.iter().filter(|z| z.im > 0.0).copied().collect();
    let real: Vec<Complex64> = raw.iter().filter(|z| z.im == 0.0).copied().collect();
    let lower = raw.iter().filter(|z| z.im < 0.0).count();
    if lower != upper.len() {
        return Err(Error::Symmetry(format!("{} upper vs {lower} lower eigenvalues", upper.len())));
    }
    upper.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut out = real;
    for z in upper {
        out.push(z);
        out.push(z.conj());
    }
    Ok(out)
}

/// Minimum-norm least-squares solution of `A x = b` through the pseudo-inverse.
pub fn least_squares(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if a.nrows() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "least squares: {} rows but rhs of length {}",
            a.nrows(),
            b.len()
        )));
    }
    let dec = svd(a)?;
    let smax = dec.singular_values[0];
    let cutoff = LSTSQ_RCOND * smax;
    let k = dec.singular_values.len();
    let mut x = vec![Complex64::new(0.0, 0.0); a.ncols()];
    for j in 0..k {
        let s = dec.singular_values[j];
        if s <= cutoff || s == 0.0 {
            break;
        }
        let mut coef = Complex64::new(0.0, 0.0);
        for (i, bi) in b.iter().enumerate() {
            coef += dec.u[(i, j)].conj() * bi;
        }
        coef /= s;
        for (r, xr) in x.iter_mut().enumerate() {
            *xr += dec.v[(r, j)] * coef;
        }
    }
    Ok(x)
}

/// Real least squares, used by the real-arithmetic stacking of vector fitting.
pub fn least_squares_real(a: &Mat<f64>, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != b.len() || a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidArgument("least squares: shape mismatch".into()));
    }
    let dec = a.thin_svd().map_err(|_| Error::NoConvergence("SVD"))?;
    let s: Vec<f64> = dec.S().column_vector().iter().copied().collect();
    let u = dec.U();
    let v = dec.V();
    let cutoff = LSTSQ_RCOND * s[0];
    let mut x = vec![0.0; a.ncols()];
    for (j, &sj) in s.iter().enumerate() {
        if sj <= cutoff || sj == 0.0 {
            break;
        }
        let coef: f64 = b.iter().enumerate().map(|(i, bi)| u[(i, j)] * bi).sum::<f64>() / sj;
        for (r, xr) in x.iter_mut().enumerate() {
            *xr += v[(r, j)] * coef;
        }
    }
    Ok(x)
}

/// Right singular vector of the smallest singular value, unit 2-norm.
pub fn smallest_singular_vector(a: &ComplexMatrix) -> Result<Vec<Complex64>> {
    if a.ncols() == 0 || a.nrows() < a.ncols() {
        return Err(Error::InvalidArgument(format!(
            "smallest singular vector needs rows >= cols >= 1, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let dec = svd(a)?;
    let j = a.ncols() - 1;
    Ok((0..a.ncols()).map(|r| dec.v[(r, j)]).collect())
}

/// Real counterpart of [`smallest_singular_vector`].
pub fn smallest_singular_vector_real(a: &Mat<f64>) -> Result<Vec<f64>> {
    if a.ncols() == 0 || a.nrows() < a.ncols() {
        return Err(Error::InvalidArgument("smallest singular vector needs rows >= cols >= 1".into()));
    }
    let dec = a.thin_svd().map_err(|_| Error::NoConvergence("SVD"))?;
    let j = a.ncols() - 1;
    Ok((0..a.ncols()).map(|r| dec.V()[(r, j)]).collect())
}

/// 2-norm condition number `sigma_max / sigma_min` of a square matrix.
pub fn condition_number(a: &ComplexMatrix) -> Result<f64> {
    let s = svd(a)?.singular_values;
    let smin = *s.last().unwrap();
    Ok(if smin == 0.0 { f64::INFINITY } else { s[0] / smin })
}

/// Solves the square system `A x = b` in place by Gaussian elimination with
/// partial pivoting. `a` is row-major `n x n` and is overwritten.
///
/// Returns `Err(SingularPencil)` when a pivot underflows relative to the
/// largest entry of `A`.
pub(crate) fn solve_in_place(a: &mut [Complex64], n: usize, b: &mut [Complex64]) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::SingularPencil);
    }
    let tiny = scale * f64::EPSILON * 1e-3;
    for k in 0..n {
        let (mut piv, mut best) = (k, a[k * n + k].norm());
        for r in k + 1..n {
            let v = a[r * n + k].norm();
            if v > best {
                piv = r;
                best = v;
            }
        }
        if best <= tiny {
            return Err(Error::SingularPencil);
        }
        if piv != k {
            for c in 0..n {
                a.swap(k * n + c, piv * n + c);
            }
            b.swap(k, piv);
        }
        let d = a[k * n + k].inv();
        for r in k + 1..n {
            let f = a[r * n + k] * d;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            for c in k + 1..n {
                let t = a[k * n + c];
                a[r * n + c] -= f * t;
            }
            let bk = b[k];
            b[r] -= f * bk;
        }
    }
    for k in (0..n).rev() {
        let mut acc = b[k];
        for c in k + 1..n {
            acc -= a[k * n + c] * b[c];
        }
        b[k] = acc / a[k * n + k];
    }
    if b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::SingularPencil);
    }
    Ok(())
}

/// Solves `A X = B` for a square `A` with several right-hand sides.
pub(crate) fn solve_matrix(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.nrows();
    let mut out = Mat::zeros(n, b.ncols());
    for j in 0..b.ncols() {
        let mut lu: Vec<Complex64> = (0..n * n).map(|i| a[(i / n, i % n)]).collect();
        let mut rhs: Vec<Complex64> = (0..n).map(|i| b[(i, j)]).collect();
        solve_in_place(&mut lu, n, &mut rhs)?;
        for i in 0..n {
            out[(i, j)] = rhs[i];
        }
    }
    Ok(out)
}

fn check_finite(a: &ComplexMatrix, what: &str) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidArgument(format!("{what} has a non-finite entry at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// Builds a matrix from a row-major nested vector.
pub fn from_rows(rows: &[Vec<Complex64>]) -> ComplexMatrix {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    Mat::from_fn(nr, nc, |i, j| rows[i][j])
}

/// Row-major nested copy of a matrix.
pub fn to_rows(a: &ComplexMatrix) -> Vec<Vec<Complex64>> {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect()
}

pub fn identity(n: usize) -> ComplexMatrix {
    Mat::from_fn(n, n, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) })
}
