//! Sampling schemes over a rectangle of the complex plane.

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Domain {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let d = Domain { x_min, x_max, y_min, y_max };
        d.validate()?;
        Ok(d)
    }

    /// The benchmark rectangle `[0, 10] x [-1, 1]`.
    pub const fn omega() -> Self {
        Domain { x_min: 0.0, x_max: 10.0, y_min: -1.0, y_max: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::InvalidArgument(format!("degenerate domain {self:?}")));
        }
        Ok(())
    }

    /// True when the rectangle is mapped onto itself by conjugation.
    pub fn is_conjugate_symmetric(&self) -> bool {
        self.y_min == -self.y_max
    }

    pub fn contains(&self, s: Complex64) -> bool {
        self.contains_with_margin(s, 0.0)
    }

    /// Containment in the rectangle grown by `margin` on every side.
    pub fn contains_with_margin(&self, s: Complex64, margin: f64) -> bool {
        s.re >= self.x_min - margin
            && s.re <= self.x_max + margin
            && s.im >= self.y_min - margin
            && s.im <= self.y_max + margin
    }
}

impl Default for Domain {
    fn default() -> Self {
        Domain::omega()
    }
}

/// A sample location paired with the sampled function value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexSample {
    pub point: Complex64,
    pub value: Complex64,
}

/// Sample locations before the oracle has been evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub points: Vec<Complex64>,
    pub symmetric: bool,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub samples: Vec<ComplexSample>,
    pub symmetric: bool,
    pub seed: Option<u64>,
}

impl SampleSet {
    /// Wraps raw samples, detecting conjugate closure.
    pub fn from_samples(samples: Vec<ComplexSample>, seed: Option<u64>) -> Self {
        let points: Vec<Complex64> = samples.iter().map(|s| s.point).collect();
        let symmetric = is_conjugate_closed(&points);
        SampleSet { samples, symmetric, seed }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn points(&self) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.point).collect()
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.value).collect()
    }

    pub fn max_abs_value(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.value.norm()))
    }
}

/// `nx * ny` points on the Cartesian product of equispaced abscissae and ordinates.
///
/// With `conjugate_closed` the domain must be symmetric about the real axis and
/// `ny` odd, so the real axis is a grid line and each ordinate has its mirror.
pub fn structured_grid(domain: &Domain, nx: usize, ny: usize, conjugate_closed: bool) -> Result<PointSet> {
    domain.validate()?;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidArgument(format!("grid needs nx, ny >= 2 (got {nx} x {ny})")));
    }
    if conjugate_closed {
        if !domain.is_conjugate_symmetric() {
            return Err(Error::Symmetry("domain is not symmetric about the real axis".into()));
        }
        if ny.is_multiple_of(2) {
            return Err(Error::Symmetry(format!("ny = {ny} is even; the real axis would not be sampled")));
        }
    }
    let xs = linspace(domain.x_min, domain.x_max, nx);
    let mut ys = linspace(domain.y_min, domain.y_max, ny);
    if conjugate_closed {
        // Mirror the lower half so that conjugation is exact in floating point.
        let mid = ny / 2;
        ys[mid] = 0.0;
        for j in 0..mid {
            ys[ny - 1 - j] = -ys[j];
        }
    }
    let mut points = Vec::with_capacity(nx * ny);
    for &x in &xs {
        for &y in &ys {
            points.push(Complex64::new(x, y));
        }
    }
    Ok(PointSet { points, symmetric: conjugate_closed, seed: None })
}

/// `n_pairs` points drawn uniformly from the upper half `(0, y_max]` of the
/// domain, each followed by its conjugate. Deterministic in `seed`.
pub fn uniform_random_grid(domain: &Domain, n_pairs: usize, seed: u64) -> Result<PointSet> {
    domain.validate()?;
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("n_pairs must be at least 1".into()));
    }
    if !domain.is_conjugate_symmetric() {
        return Err(Error::Symmetry("domain is not symmetric about the real axis".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = domain.x_max - domain.x_min;
    let mut points = Vec::with_capacity(2 * n_pairs);
    for _ in 0..n_pairs {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        let x = (domain.x_min + width * u).min(domain.x_max);
        let y = domain.y_max * (1.0 - v);
        let s = Complex64::new(x, y);
        points.push(s);
        points.push(s.conj());
    }
    Ok(PointSet { points, symmetric: true, seed: Some(seed) })
}

/// Evaluates `oracle` at every point, preserving order.
///
/// For a symmetric set the value at the lower member of each conjugate pair is
/// taken as the conjugate of the upper member's value.
pub fn sample_oracle<F>(points: &PointSet, oracle: F) -> Result<SampleSet>
where
    F: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let mut values: Vec<Complex64> = points.points.par_iter().map(|&s| oracle(s)).collect::<Result<_>>()?;
    if points.symmetric {
        for group in conjugate_groups(&points.points)? {
            if let ConjugateGroup::Pair { upper, lower } = group {
                values[lower] = values[upper].conj();
            }
        }
    }
    let samples = points
        .points
        .iter()
        .zip(values)
        .map(|(&point, value)| ComplexSample { point, value })
        .collect();
    Ok(SampleSet { samples, symmetric: points.symmetric, seed: points.seed })
}

/// Either a point on the real axis or a conjugate pair (indices into the input).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjugateGroup {
    Real(usize),
    Pair { upper: usize, lower: usize },
}

impl ConjugateGroup {
    /// The representative index (the real point or the upper pair member).
    pub fn lead(&self) -> usize {
        match *self {
            ConjugateGroup::Real(i) => i,
            ConjugateGroup::Pair { upper, .. } => upper,
        }
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> {
        let (a, b) = match *self {
            ConjugateGroup::Real(i) => (i, None),
            ConjugateGroup::Pair { upper, lower } => (upper, Some(lower)),
        };
        std::iter::once(a).chain(b)
    }
}

fn key(s: Complex64) -> (u64, u64) {
    // +0.0 and -0.0 must collide.
    let im = if s.im == 0.0 { 0.0 } else { s.im };
    let re = if s.re == 0.0 { 0.0 } else { s.re };
    (re.to_bits(), im.to_bits())
}

/// Splits a conjugate-closed point list into real points and conjugate pairs,
/// ordered by the position of each group's first member.
pub fn conjugate_groups(points: &[Complex64]) -> Result<Vec<ConjugateGroup>> {
    let mut index: HashMap<(u64, u64), Vec<usize>> = HashMap::new();
    for (i, &p) in points.iter().enumerate() {
        index.entry(key(p)).or_default().push(i);
    }
    let mut used = vec![false; points.len()];
    let mut groups = Vec::new();
    for (i, &p) in points.iter().enumerate() {
        if used[i] {
            continue;
        }
        if index[&key(p)].len() > 1 {
            return Err(Error::InvalidArgument(format!("duplicate sample point {p}")));
        }
        used[i] = true;
        if p.im == 0.0 {
            groups.push(ConjugateGroup::Real(i));
            continue;
        }
        let partner = index
            .get(&key(p.conj()))
            .and_then(|v| v.iter().copied().find(|&j| !used[j]))
            .ok_or_else(|| Error::PartitionImpossible(format!("point {p} has no conjugate partner")))?;
        used[partner] = true;
        let (upper, lower) = if p.im > 0.0 { (i, partner) } else { (partner, i) };
        groups.push(ConjugateGroup::Pair { upper, lower });
    }
    Ok(groups)
}

/// Multiset test `{conj(p)} == {p}`.
pub fn is_conjugate_closed(points: &[Complex64]) -> bool {
    let mut counts: HashMap<(u64, u64), i64> = HashMap::new();
    for &p in points {
        *counts.entry(key(p)).or_default() += 1;
    }
    points.iter().all(|&p| counts.get(&key(p.conj())) == counts.get(&key(p)))
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect()
}
