//! Shared fixtures: random real rational functions, exact arithmetic, matching.
#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ratapprox::sampling::{self, Domain, SampleSet};
use ratapprox::vectorfit::PoleResidueModel;
use ratapprox::Complex64;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Rectangle the synthetic rationals are sampled on.
pub fn test_domain() -> Domain {
    Domain::new(-4.5, 1.0, -4.5, 4.5).unwrap()
}

/// Grid shapes used with [`samples_of`]; poles keep clear of all of them.
pub const GRID_SHAPES: [(usize, usize); 3] = [(15, 11), (11, 9), (7, 5)];

/// A strictly proper real rational of the given degree with well separated
/// poles in the left half of [`test_domain`], clear of the sample points.
pub fn random_real_rational(seed: u64, degree: usize) -> PoleResidueModel {
    assert!(degree >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let pairs = rng.random_range(0..=degree / 2);
        let reals = degree - 2 * pairs;
        let mut poles = Vec::new();
        let mut residues = Vec::new();
        for _ in 0..pairs {
            let p = c(-rng.random_range(0.5..3.0), rng.random_range(0.3..4.0));
            let r = c(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            poles.extend([p, p.conj()]);
            residues.extend([r, r.conj()]);
        }
        for _ in 0..reals {
            poles.push(c(-rng.random_range(0.5..4.0), 0.0));
            let mut r = rng.random_range(0.3..2.0);
            if rng.random_bool(0.5) {
                r = -r;
            }
            residues.push(c(r, 0.0));
        }
        let separated = (0..poles.len()).all(|i| (0..i).all(|j| (poles[i] - poles[j]).norm() >= 0.4));
        let visible = residues.iter().all(|r| r.norm() >= 0.3);
        let clear = GRID_SHAPES.iter().all(|&(nx, ny)| {
            let grid = sampling::structured_grid(&test_domain(), nx, ny, true).unwrap();
            grid.points.iter().all(|g| poles.iter().all(|p| (g - p).norm() >= 0.05))
        });
        if separated && visible && clear {
            return PoleResidueModel::new(poles, residues, 0.0, 0.0).unwrap();
        }
    }
}

/// Conjugate-closed structured samples of a model on [`test_domain`].
pub fn samples_of(model: &PoleResidueModel, nx: usize, ny: usize) -> SampleSet {
    let grid = sampling::structured_grid(&test_domain(), nx, ny, true).unwrap();
    sampling::sample_oracle(&grid, |s| model.eval(s)).unwrap()
}

/// Random points of [`test_domain`] off the sampling grid.
pub fn fresh_points(seed: u64, n: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let d = test_domain();
    (0..n).map(|_| c(rng.random_range(d.x_min..d.x_max), rng.random_range(d.y_min..d.y_max))).collect()
}

/// Largest distance after greedily pairing each element of `a` with the
/// nearest unused element of `b`.
pub fn pairing_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

pub fn nearest(points: &[Complex64], target: Complex64) -> f64 {
    points.iter().map(|p| (p - target).norm()).fold(f64::INFINITY, f64::min)
}

/// Every element has its conjugate in the list, up to `rel_tol * |z|`.
pub fn conjugate_closed(values: &[Complex64], rel_tol: f64) -> bool {
    let mut used = vec![false; values.len()];
    for i in 0..values.len() {
        if used[i] {
            continue;
        }
        let z = values[i];
        let tol = rel_tol * z.norm().max(1.0);
        if z.im.abs() <= tol {
            used[i] = true;
            continue;
        }
        let partner = (0..values.len()).find(|&j| j != i && !used[j] && (values[j] - z.conj()).norm() <= tol);
        match partner {
            Some(j) => {
                used[i] = true;
                used[j] = true;
            }
            None => return false,
        }
    }
    true
}

/// Complex number with exact rational parts.
#[derive(Clone, Debug)]
pub struct Exact {
    pub re: BigRational,
    pub im: BigRational,
}

impl Exact {
    pub fn from(z: Complex64) -> Self {
        Exact { re: BigRational::from_float(z.re).unwrap(), im: BigRational::from_float(z.im).unwrap() }
    }

    pub fn zero() -> Self {
        Exact { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn add(&self, o: &Exact) -> Exact {
        Exact { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    pub fn sub(&self, o: &Exact) -> Exact {
        Exact { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    pub fn mul(&self, o: &Exact) -> Exact {
        Exact { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }

    pub fn div(&self, o: &Exact) -> Exact {
        let den = &o.re * &o.re + &o.im * &o.im;
        let conj = Exact { re: o.re.clone(), im: -o.im.clone() };
        let num = self.mul(&conj);
        Exact { re: num.re / &den, im: num.im / den }
    }

    pub fn to_f64(&self) -> Complex64 {
        c(self.re.to_f64().unwrap(), self.im.to_f64().unwrap())
    }
}

pub fn big(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Determinant by Gaussian elimination with partial pivoting.
fn det(mut a: Vec<Vec<Complex64>>) -> Complex64 {
    let n = a.len();
    let mut d = c(1.0, 0.0);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm())).unwrap();
        if p != k {
            a.swap(p, k);
            d = -d;
        }
        let piv = a[k][k];
        if piv.norm() == 0.0 {
            return c(0.0, 0.0);
        }
        d *= piv;
        for i in k + 1..n {
            let f = a[i][k] / piv;
            for j in k..n {
                let t = a[k][j];
                a[i][j] -= f * t;
            }
        }
    }
    d
}

/// Roots of a polynomial (coefficients lowest degree first) by Aberth iteration.
fn poly_roots(coef: &[Complex64]) -> Vec<Complex64> {
    let deg = coef.len() - 1;
    let lead = coef[deg];
    let monic: Vec<Complex64> = coef.iter().map(|a| a / lead).collect();
    let eval = |z: Complex64| {
        let mut p = c(0.0, 0.0);
        let mut dp = c(0.0, 0.0);
        for a in monic.iter().rev() {
            dp = dp * z + p;
            p = p * z + a;
        }
        (p, dp)
    };
    let radius = 1.0 + monic[..deg].iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| Complex64::from_polar(radius * 0.5, 0.4 + std::f64::consts::TAU * k as f64 / deg as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..deg {
            let (p, dp) = eval(z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..deg).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (c(1.0, 0.0) - ratio * repulsion);
            z[i] -= step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Roots of `det(m - t n)` recovered from its values on the unit circle.
pub fn determinant_roots(m: &ratapprox::linalg::ComplexMatrix, nn: &ratapprox::linalg::ComplexMatrix) -> Vec<Complex64> {
    let n = m.nrows();
    let pts = n + 1;
    let samples: Vec<(Complex64, Complex64)> = (0..pts)
        .map(|k| {
            let t = Complex64::from_polar(1.0, std::f64::consts::TAU * k as f64 / pts as f64);
            let rows = (0..n).map(|i| (0..n).map(|j| m[(i, j)] - t * nn[(i, j)]).collect()).collect();
            (t, det(rows))
        })
        .collect();
    let coef: Vec<Complex64> = (0..pts)
        .map(|j| samples.iter().map(|(t, d)| d * t.powi(-(j as i32))).sum::<Complex64>() / pts as f64)
        .collect();
    poly_roots(&coef)
}
