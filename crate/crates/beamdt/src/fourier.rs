//! Discrete Fourier analysis on the uniform angle grid.
//!
//! One convention is fixed here and every other module derives from it:
//!
//! - angle grid `S_D`: phi_j = 2 pi j / D for j in {-D/2, ..., D/2 - 1},
//!   stored at index t = j + D/2;
//! - analysis basis e_n(phi) = exp(-i n phi);
//! - kernel coefficients a_n = (1/D) sum_j a(phi_j) exp(-i n phi_j), so a
//!   kernel synthesizes as a(phi) = sum_n a_n exp(+i n phi);
//! - data coefficients <m, e_n> = (1/D) sum_j m(phi_j) exp(+i n phi_j), so
//!   data synthesize as m(phi) = sum_n <m, e_n> exp(-i n phi).
//!
//! With these choices the circular convolution with kernel a acts on e_n as
//! multiplication by 2 pi a_n, exactly, already at the discrete level.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// The angle grid S_D.
pub fn grid(d: usize) -> Vec<f64> {
    (0..d)
        .map(|t| TAU * (t as f64 - d as f64 / 2.0) / d as f64)
        .collect()
}

fn check_even(d: usize) -> Result<()> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "angular grid size must be a positive even integer, got {d}"
        )));
    }
    Ok(())
}

fn dft_forward(samples: &[Complex64]) -> Vec<Complex64> {
    let mut buf = samples.to_vec();
    FftPlanner::new()
        .plan_fft_forward(samples.len())
        .process(&mut buf);
    buf
}

/// Kernel-side coefficients a_n = (1/D) sum_j x_j exp(-i n phi_j) for
/// n = -n_max ..= n_max, returned in ascending n order.
pub fn analyze_kernel(samples: &[Complex64], n_max: usize) -> Result<Vec<Complex64>> {
    let d = samples.len();
    check_even(d)?;
    if 2 * n_max + 1 > d {
        return Err(Error::TruncationTooLarge { n: n_max, d });
    }
    let hat = dft_forward(samples);
    let scale = 1.0 / d as f64;
    Ok((-(n_max as i64)..=n_max as i64)
        .map(|n| {
            let bin = n.rem_euclid(d as i64) as usize;
            let parity = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            hat[bin] * parity * scale
        })
        .collect())
}

/// Data-side coefficients <x, e_n> = (1/D) sum_j x_j exp(+i n phi_j), again
/// for n = -n_max ..= n_max ascending.
pub fn analyze_basis(samples: &[Complex64], n_max: usize) -> Result<Vec<Complex64>> {
    let d = samples.len();
    check_even(d)?;
    if 2 * n_max + 1 > d {
        return Err(Error::TruncationTooLarge { n: n_max, d });
    }
    let hat = dft_forward(samples);
    let scale = 1.0 / d as f64;
    Ok((-(n_max as i64)..=n_max as i64)
        .map(|n| {
            let bin = (-n).rem_euclid(d as i64) as usize;
            let parity = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            hat[bin] * parity * scale
        })
        .collect())
}

/// Synthesis sum_n c_n exp(-i n phi_j) on S_D; `coeffs[i]` belongs to
/// n = i - n_max.
pub fn synthesize_basis(coeffs: &[Complex64], d: usize) -> Result<Vec<Complex64>> {
    synthesize(coeffs, d, -1.0)
}

/// Synthesis sum_n c_n exp(+i n phi_j) on S_D (kernel orientation).
pub fn synthesize_kernel(coeffs: &[Complex64], d: usize) -> Result<Vec<Complex64>> {
    synthesize(coeffs, d, 1.0)
}

fn synthesize(coeffs: &[Complex64], d: usize, sign: f64) -> Result<Vec<Complex64>> {
    check_even(d)?;
    if coeffs.len() % 2 != 1 {
        return Err(Error::InvalidArgument(format!(
            "coefficient vector must have odd length 2N+1, got {}",
            coeffs.len()
        )));
    }
    let n_max = (coeffs.len() / 2) as i64;
    let phis = grid(d);
    Ok(phis
        .iter()
        .map(|&phi| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &c) in coeffs.iter().enumerate() {
                let n = i as i64 - n_max;
                acc += c * Complex64::new(0.0, sign * n as f64 * phi).exp();
            }
            acc
        })
        .collect())
}

/// Cyclic convolution against a kernel sampled on S_D:
/// out[t] = (2 pi / D) sum_j a(phi_j - theta_t) g[j], where `kernel[u]`
/// holds a(phi_u). The angle difference phi_j - theta_t = 2 pi (j - t) / D
/// lands on grid index (j - t + D/2) mod D.
///
/// The kernel transform is planned once so row batches (one per detector
/// frequency) reuse it.
pub struct CyclicConvolver {
    d: usize,
    kernel_hat: Vec<Complex64>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl CyclicConvolver {
    pub fn new(kernel: &[Complex64]) -> Result<Self> {
        let d = kernel.len();
        check_even(d)?;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(d);
        let inv = planner.plan_fft_inverse(d);
        // out = B (*) g with B[v] = a(-2 pi v / D) = kernel[(D/2 - v) mod D].
        let mut b: Vec<Complex64> = (0..d).map(|v| kernel[(d + d / 2 - v) % d]).collect();
        fwd.process(&mut b);
        Ok(Self {
            d,
            kernel_hat: b,
            fwd,
            inv,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn apply(&self, g: &[Complex64]) -> Result<Vec<Complex64>> {
        if g.len() != self.d {
            return Err(Error::LengthMismatch {
                expected: self.d,
                actual: g.len(),
            });
        }
        let mut buf = g.to_vec();
        self.fwd.process(&mut buf);
        for (v, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *v *= k;
        }
        self.inv.process(&mut buf);
        // rustfft leaves the inverse unnormalized; fold 1/D into the
        // quadrature weight 2 pi / D.
        let scale = TAU / (self.d * self.d) as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
        Ok(buf)
    }
}

/// Reference O(D^2) evaluation of the same convolution, for guard tests.
/// `kernel` is again sampled on S_D.
pub fn cyclic_convolve_direct(kernel: &[Complex64], g: &[Complex64]) -> Result<Vec<Complex64>> {
    let d = kernel.len();
    if g.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            actual: g.len(),
        });
    }
    let w = TAU / d as f64;
    Ok((0..d)
        .map(|t| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &gj) in g.iter().enumerate() {
                acc += kernel[(j + d + d / 2 - t) % d] * gj;
            }
            acc * w
        })
        .collect())
}
