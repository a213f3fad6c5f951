//! Independent numerical oracles used only by unit tests.
//!
//! Everything here is deliberately written against different algorithms than
//! the production code paths it checks: Miller's backward recurrence instead
//! of ascending series for J_n, compensated plain-f64 summation instead of
//! double-double, adaptive Simpson instead of rectangle rules.

use num_complex::Complex64;
use std::f64::consts::PI;

/// J_n(x) for n = 0..=n_max by Miller's backward recurrence, normalized with
/// J0 + 2 J2 + 2 J4 + ... = 1. Accurate to ~1e-14 relative for x <= 1e3.
pub fn bessel_j_miller(x: f64, n_max: usize) -> Vec<f64> {
    assert!(x > 0.0);
    let start = (x as usize + n_max) + 20 + (8.0 * x.sqrt()) as usize;
    let start = start + (start % 2); // even start
    let mut fp = 0.0f64; // J_{start+1}
    let mut fc = 1e-300f64; // J_{start}
    let mut out = vec![0.0; n_max + 1];
    let mut norm = 0.0f64; // accumulates J0 + 2*sum J_{2k}
    for n in (0..=start).rev() {
        let fm = (2.0 * (n as f64 + 1.0) / x) * fc - fp;
        fp = fc;
        fc = fm;
        // fc now holds J_n (unnormalized).
        if n <= n_max {
            out[n] = fc;
        }
        if n % 2 == 0 {
            norm += if n == 0 { fc } else { 2.0 * fc };
        }
        // Rescale to dodge overflow of the growing recurrence.
        if fc.abs() > 1e250 {
            fc *= 1e-250;
            fp *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    out
}

/// Compensated (Kahan) sum.
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn new() -> Self {
        Kahan { sum: 0.0, c: 0.0 }
    }
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Y0 by the logarithmic ascending series with Kahan compensation. Good to
/// ~1e-12 relative (against |H0|) for x <= 12.
fn y0_series_kahan(x: f64) -> f64 {
    const EULER: f64 = 0.5772156649015328606;
    let z = x * x / 4.0;
    let mut term = 1.0f64;
    let mut harmonic = 0.0f64;
    let mut j = Kahan::new();
    j.add(1.0);
    let mut s = Kahan::new();
    let mut sign = -1.0f64;
    for m in 1..200 {
        term *= z / ((m * m) as f64);
        harmonic += 1.0 / m as f64;
        j.add(sign * term);
        s.add(-sign * term * harmonic);
        if (m * m) as f64 > z && term < 1e-20 {
            break;
        }
        sign = -sign;
    }
    2.0 / PI * (((x / 2.0).ln() + EULER) * j.sum + s.sum)
}

/// (J0, Y0) from a long Hankel asymptotic sum; truncation error below
/// exp(-2x), usable for x >= 12.
fn h0_asymptotic_reference(x: f64) -> (f64, f64) {
    let mut sum = Complex64::new(1.0, 0.0);
    let mut c = Complex64::new(1.0, 0.0);
    let mut best = f64::INFINITY;
    for k in 0..80usize {
        let odd = (2 * k + 1) as f64;
        let r = odd * odd / (8.0 * (k + 1) as f64 * x);
        if r >= 1.0 {
            break;
        }
        c *= Complex64::new(0.0, -r);
        if c.norm() > best {
            break;
        }
        best = c.norm();
        sum += c;
    }
    let w = x - PI / 4.0;
    let (sw, cw) = w.sin_cos();
    let amp = (2.0 / (PI * x)).sqrt();
    let h = Complex64::new(cw, sw) * sum * amp;
    (h.re, h.im)
}

/// Independent (J0(x), Y0(x)) reference.
pub fn h0_reference(x: f64) -> (f64, f64) {
    let j0 = bessel_j_miller(x, 0)[0];
    let y0 = if x < 12.0 {
        y0_series_kahan(x)
    } else {
        h0_asymptotic_reference(x).1
    };
    (j0, y0)
}

/// J1(x) via Miller's recurrence.
pub fn bessel_j1(x: f64) -> f64 {
    bessel_j_miller(x, 1)[1]
}

/// Adaptive Simpson quadrature of a complex integrand on [a, b].
pub fn adaptive_simpson<F: Fn(f64) -> Complex64 + Copy>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Complex64 {
    fn simpson<F: Fn(f64) -> Complex64>(f: &F, a: f64, fa: Complex64, b: f64, fb: Complex64) -> (Complex64, Complex64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((fa + 4.0 * fm + fb) * ((b - a) / 6.0), fm, m)
    }
    fn rec<F: Fn(f64) -> Complex64>(
        f: &F,
        a: f64,
        fa: Complex64,
        b: f64,
        fb: Complex64,
        whole: Complex64,
        fm: Complex64,
        m: f64,
        tol: f64,
        depth: u32,
    ) -> Complex64 {
        let (left, flm, lm) = simpson(f, a, fa, m, fm);
        let (right, frm, rm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.norm() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, fa, m, fm, left, flm, lm, tol / 2.0, depth - 1)
                + rec(f, m, fm, b, fb, right, frm, rm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, fm, m) = simpson(&f, a, fa, b, fb);
    rec(&f, a, fa, b, fb, whole, fm, m, tol, 40)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn miller_matches_known_values() {
        let j = bessel_j_miller(1.0, 1);
        assert!((j[0] - 0.76519768655796655145).abs() < 1e-13);
        assert!((j[1] - 0.44005058574493351596).abs() < 1e-13);
        let j = bessel_j_miller(10.0, 0);
        assert!((j[0] - -0.24593576445134833520).abs() < 1e-13);
    }

    #[test]
    fn simpson_integrates_oscillation() {
        // int_0^pi e^{i t} dt = 2i
        let v = adaptive_simpson(|t| Complex64::new(0.0, t).exp(), 0.0, PI, 1e-13);
        assert!((v - Complex64::new(0.0, 2.0)).norm() < 1e-11);
    }
}
