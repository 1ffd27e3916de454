//! Complex Bessel function J0 and the benchmark function H(s) = 1/J0(s).
//!
//! J0 is summed from its ascending power series
//!
//! ```text
//! J0(s) = sum_k (-1)^k (s/2)^(2k) / (k!)^2
//! ```
//!
//! in double-double arithmetic. The largest term grows like exp(|s|), so plain
//! `f64` summation loses roughly `log10(exp(|s|))` digits to cancellation; the
//! extra 53 bits of the double-double accumulator absorb that loss over the
//! whole validity radius.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest |s| accepted by [`bessel_j0`].
pub const J0_VALIDITY_RADIUS: f64 = 50.0;

/// |J0(s)| below this is treated as sampling exactly at a pole of H.
pub const POLE_THRESHOLD: f64 = 1e-13;

const MAX_TERMS: usize = 150;
const REL_TERM_CUTOFF: f64 = 1e-18;

/// The first six positive zeros of J0, to 15 significant digits.
pub const J0_ZEROS: [f64; 6] = [
    2.40482555769577,
    5.52007811028631,
    8.65372791291101,
    11.7915344390142,
    14.9309177084877,
    18.0710639679109,
];

/// Evaluates J0 at a complex argument.
///
/// Real arguments produce an exactly real result and
/// `bessel_j0(s.conj()) == bessel_j0(s).conj()` holds bit for bit.
pub fn bessel_j0(s: Complex64) -> Result<Complex64> {
    if !(s.re.is_finite() && s.im.is_finite()) || s.norm() > J0_VALIDITY_RADIUS {
        return Err(Error::Domain(s));
    }
    // q = -(s/2)^2, formed exactly as a double-double.
    let h = s * 0.5;
    let re = dd::two_prod(h.re, h.re).sub(dd::two_prod(h.im, h.im));
    let im = dd::two_prod(h.re, h.im).mul_f64(2.0);
    let q = dd::Complex { re: re.neg(), im: im.neg() };

    let mut term = dd::Complex::one();
    let mut sum = dd::Complex::one();
    let mut max_term = 1.0f64;
    for k in 1..=MAX_TERMS {
        let kk = (k * k) as f64;
        term = term.mul(q).div_f64(kk);
        sum = sum.add(term);
        let mag = term.approx_norm();
        max_term = max_term.max(mag);
        if mag <= REL_TERM_CUTOFF * max_term && mag <= REL_TERM_CUTOFF {
            break;
        }
    }
    Ok(Complex64::new(sum.re.to_f64(), sum.im.to_f64()))
}

/// H(s) = 1 / J0(s).
pub fn h_of_s(s: Complex64) -> Result<Complex64> {
    let j = bessel_j0(s)?;
    let mag = j.norm();
    if mag < POLE_THRESHOLD {
        return Err(Error::Pole(s, mag));
    }
    Ok(j.inv())
}

/// Minimal double-double arithmetic, enough for the series above.
mod dd {
    #[derive(Debug, Clone, Copy)]
    pub struct Dd {
        hi: f64,
        lo: f64,
    }

    #[inline]
    fn two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Dd { hi: s, lo: err }
    }

    #[inline]
    fn quick_two_sum(a: f64, b: f64) -> Dd {
        let s = a + b;
        Dd { hi: s, lo: b - (s - a) }
    }

    #[inline]
    pub fn two_prod(a: f64, b: f64) -> Dd {
        let p = a * b;
        Dd { hi: p, lo: a.mul_add(b, -p) }
    }

    impl Dd {
        pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
        pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

        #[inline]
        pub fn to_f64(self) -> f64 {
            self.hi + self.lo
        }

        #[inline]
        pub fn neg(self) -> Dd {
            Dd { hi: -self.hi, lo: -self.lo }
        }

        #[inline]
        pub fn add(self, o: Dd) -> Dd {
            let s = two_sum(self.hi, o.hi);
            let t = two_sum(self.lo, o.lo);
            let v = quick_two_sum(s.hi, s.lo + t.hi);
            quick_two_sum(v.hi, v.lo + t.lo)
        }

        #[inline]
        pub fn sub(self, o: Dd) -> Dd {
            self.add(o.neg())
        }

        #[inline]
        pub fn mul(self, o: Dd) -> Dd {
            let p = two_prod(self.hi, o.hi);
            let lo = p.lo + (self.hi * o.lo + self.lo * o.hi);
            quick_two_sum(p.hi, lo)
        }

        #[inline]
        pub fn mul_f64(self, b: f64) -> Dd {
            let p = two_prod(self.hi, b);
            quick_two_sum(p.hi, p.lo + self.lo * b)
        }

        #[inline]
        pub fn div_f64(self, b: f64) -> Dd {
            let q1 = self.hi / b;
            let r = self.sub(two_prod(q1, b));
            let q2 = r.hi / b;
            let r = r.sub(two_prod(q2, b));
            let q3 = r.hi / b;
            let q = quick_two_sum(q1, q2);
            q.add(Dd { hi: q3, lo: 0.0 })
        }
    }

    #[derive(Debug, Clone, Copy)]
    pub struct Complex {
        pub re: Dd,
        pub im: Dd,
    }

    impl Complex {
        pub fn one() -> Self {
            Complex { re: Dd::ONE, im: Dd::ZERO }
        }

        #[inline]
        pub fn add(self, o: Complex) -> Complex {
            Complex { re: self.re.add(o.re), im: self.im.add(o.im) }
        }

        #[inline]
        pub fn mul(self, o: Complex) -> Complex {
            Complex {
                re: self.re.mul(o.re).sub(self.im.mul(o.im)),
                im: self.re.mul(o.im).add(self.im.mul(o.re)),
            }
        }

        #[inline]
        pub fn div_f64(self, b: f64) -> Complex {
            Complex { re: self.re.div_f64(b), im: self.im.div_f64(b) }
        }

        #[inline]
        pub fn approx_norm(self) -> f64 {
            self.re.hi.hypot(self.im.hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j0_at_origin_is_one() {
        assert_eq!(bessel_j0(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(h_of_s(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn tabulated_zeros() {
        for z in J0_ZEROS {
            let v = bessel_j0(Complex64::new(z, 0.0)).unwrap();
            assert!(v.norm() <= 1e-12, "J0({z}) = {v}");
            assert_eq!(v.im, 0.0);
        }
        assert!(bessel_j0(Complex64::new(J0_ZEROS[0], 0.0)).unwrap().norm() <= 1e-13);
        assert!(bessel_j0(Complex64::new(J0_ZEROS[1], 0.0)).unwrap().norm() <= 1e-13);
    }

    #[test]
    fn pole_and_domain_errors() {
        assert!(matches!(h_of_s(Complex64::new(11.7915344390142, 0.0)), Err(Error::Pole(..))));
        assert!(matches!(bessel_j0(Complex64::new(40.0, 40.0)), Err(Error::Domain(_))));
        assert!(matches!(bessel_j0(Complex64::new(f64::NAN, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn conjugate_symmetry_is_exact() {
        for &(x, y) in &[(1.0, 0.3), (7.7, -0.9), (3.25, 1.0), (0.1, -0.01)] {
            let s = Complex64::new(x, y);
            let a = bessel_j0(s).unwrap();
            let b = bessel_j0(s.conj()).unwrap();
            assert_eq!(a.conj(), b);
        }
    }
}
