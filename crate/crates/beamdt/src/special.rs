//! Zeroth-order Bessel functions and the outgoing Hankel function H0^(1).
//!
//! The scattered-field kernel needs H0^(1)(x) = J0(x) + i Y0(x) at full
//! double accuracy over many orders of magnitude of the argument. Below the
//! crossover the ascending series are summed in double-double arithmetic so
//! the alternating-term cancellation does not eat into the result; above it
//! the Hankel asymptotic expansion is truncated at its smallest term, which
//! at x >= 14 already sits below 1e-12 relative.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

const CROSSOVER: f64 = 14.0;

/// Euler-Mascheroni constant as a double-double pair.
const EULER_HI: f64 = 0.5772156649015329;
const EULER_LO: f64 = -4.942915152430645e-18;

/// Unevaluated sum of two doubles, |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy)]
struct Dd {
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

/// Veltkamp splitting for exact products without FMA.
#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134217729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let err = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    Dd { hi: p, lo: err }
}

impl Dd {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    fn add(self, o: Dd) -> Dd {
        let s = two_sum(self.hi, o.hi);
        let t = two_sum(self.lo, o.lo);
        let mut e = s.lo + t.hi;
        let r = quick_two_sum(s.hi, e);
        e = r.lo + t.lo;
        quick_two_sum(r.hi, e)
    }

    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let mut p = two_prod(self.hi, o.hi);
        p.lo += self.hi * o.lo + self.lo * o.hi;
        quick_two_sum(p.hi, p.lo)
    }

    #[inline]
    fn div_f64(self, b: f64) -> Dd {
        let q1 = self.hi / b;
        let p = two_prod(q1, b);
        let s = two_sum(self.hi, -p.hi);
        let e = s.lo + self.lo - p.lo;
        let q2 = (s.hi + e) / b;
        quick_two_sum(q1, q2)
    }

    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Ascending-series J0 and Y0 for 0 < x < CROSSOVER.
///
/// J0(x) = sum (-1)^m z^m / (m!)^2 with z = x^2/4,
/// Y0(x) = (2/pi) [ (ln(x/2) + gamma) J0(x) + sum (-1)^(m+1) H_m z^m/(m!)^2 ].
fn j0_y0_series(x: f64) -> (f64, f64) {
    let z = {
        let xx = two_prod(x, x);
        Dd { hi: xx.hi * 0.25, lo: xx.lo * 0.25 }
    };
    let mut term = Dd::from_f64(1.0);
    let mut j_sum = Dd::from_f64(1.0);
    let mut s_sum = Dd::from_f64(0.0);
    let mut harmonic = Dd::from_f64(0.0);
    let mut sign = -1.0;
    let mut m = 1usize;
    let z_mag = z.hi.max(1.0);
    loop {
        term = term.mul(z).div_f64((m * m) as f64);
        harmonic = harmonic.add(Dd::from_f64(1.0).div_f64(m as f64));
        let signed = if sign > 0.0 { term } else { term.neg() };
        j_sum = j_sum.add(signed);
        // Y-series term carries the opposite sign and the harmonic factor.
        s_sum = s_sum.add(signed.neg().mul(harmonic));
        if (m * m) as f64 > z_mag && term.hi.abs() < 1e-34 * (1.0 + j_sum.hi.abs()) {
            break;
        }
        sign = -sign;
        m += 1;
        debug_assert!(m < 200, "series failed to converge for x = {x}");
    }
    let lg = two_sum((x / 2.0).ln(), EULER_HI);
    let lg = lg.add(Dd::from_f64(EULER_LO));
    let y = lg.mul(j_sum).add(s_sum);
    (j_sum.to_f64(), 2.0 / PI * y.to_f64())
}

/// Hankel asymptotic expansion for x >= CROSSOVER, truncated at the smallest
/// term: H0^(1)(x) ~ sqrt(2/(pi x)) e^{i(x - pi/4)} sum_k c_k with
/// c_0 = 1, c_{k+1} = c_k * (-i) (2k+1)^2 / (8 (k+1) x).
fn h0_asymptotic(x: f64) -> Complex64 {
    let mut sum = Complex64::new(1.0, 0.0);
    let mut c = Complex64::new(1.0, 0.0);
    let mut k = 0usize;
    loop {
        let r = {
            let odd = (2 * k + 1) as f64;
            odd * odd / (8.0 * (k + 1) as f64 * x)
        };
        if r >= 1.0 || c.norm_sqr() < 1e-36 {
            break;
        }
        c *= Complex64::new(0.0, -r);
        sum += c;
        k += 1;
        if k > 60 {
            break;
        }
    }
    let w = x - FRAC_PI_4;
    let (sw, cw) = w.sin_cos();
    let amp = (2.0 / (PI * x)).sqrt();
    Complex64::new(cw, sw) * sum * amp
}

/// Zeroth-order Hankel function of the first kind, J0(x) + i Y0(x).
///
/// Relative accuracy is better than 1e-10 for x in [1e-3, 1e3] (measured
/// against the complex modulus, which never vanishes).
pub fn hankel_h0_1(x: f64) -> Result<Complex64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::NonPositiveArgument(x));
    }
    if x < CROSSOVER {
        let (j, y) = j0_y0_series(x);
        Ok(Complex64::new(j, y))
    } else {
        Ok(h0_asymptotic(x))
    }
}
