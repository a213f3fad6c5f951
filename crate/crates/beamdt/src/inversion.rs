//! Two-step reconstruction: per-frequency TSVD deconvolution of the angular
//! convolution operator, then filtered backpropagation to the object grid.
//!
//! The convolution operator acts on functions of the plane-wave angle as
//! (A g)(theta) = int a(phi - theta) g(phi) dphi. On the basis
//! e_n(phi) = exp(-i n phi) it is diagonal with eigenvalue 2 pi a_n, so the
//! regularized inverse keeps the indices with usable singular values
//! 2 pi |a_n| and divides the data coefficients by the eigenvalues.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::beam::{angular_coefficients, AngularCoefficients, BeamProfile};
use crate::error::{Error, Result};
use crate::forward::{KSpaceSamples, MeasurementSet};
use crate::fourier;
use crate::kspace::{
    banach_indicatrix, jacobian_det, wave_vector, unit_dir, KPhiPoint, WaveContext,
};
use crate::phantom::{ComplexImage, ObjectGrid};

/// Regularization settings for the angular deconvolution.
#[derive(Debug, Clone, Copy)]
pub struct TsvdConfig {
    /// Truncation half-width: indices |n| <= N are candidates.
    pub n_max: usize,
    /// Absolute floor on |a_n|; candidates at or below it are dropped even
    /// inside the band. Guards against parity-null coefficients of
    /// symmetric profiles.
    pub min_singular: f64,
}

impl TsvdConfig {
    pub fn new(n_max: usize) -> Self {
        Self {
            n_max,
            min_singular: 1e-12,
        }
    }

    pub fn with_min_singular(mut self, floor: f64) -> Self {
        self.min_singular = floor;
        self
    }
}

/// Applies the discrete angular convolution with a kernel synthesized from
/// the given coefficients: out(theta) = (2 pi / D) sum_phi a(phi - theta) g(phi).
pub fn apply_operator(g: &[Complex64], coeffs: &AngularCoefficients) -> Result<Vec<Complex64>> {
    let kernel = fourier::synthesize_kernel(coeffs.values(), g.len())?;
    fourier::CyclicConvolver::new(&kernel)?.apply(g)
}

/// Adjoint of [`apply_operator`]: the conjugated, reflected kernel.
pub fn apply_operator_adjoint(
    g: &[Complex64],
    coeffs: &AngularCoefficients,
) -> Result<Vec<Complex64>> {
    let kernel = fourier::synthesize_kernel(coeffs.values(), g.len())?;
    let d = kernel.len();
    let reflected: Vec<Complex64> = (0..d).map(|l| kernel[(d - l) % d].conj()).collect();
    fourier::CyclicConvolver::new(&reflected)?.apply(g)
}

/// Angular Fourier analysis of the measurement row at one detector
/// frequency: m_n = (1/D) sum_theta m(k, theta) exp(+i n theta).
pub fn svd_coefficients(
    ms: &MeasurementSet,
    k_index: usize,
    n_max: usize,
) -> Result<Vec<Complex64>> {
    if 2 * n_max + 1 > ms.lattice.d {
        return Err(Error::TruncationTooLarge {
            n: n_max,
            d: ms.lattice.d,
        });
    }
    if k_index >= ms.lattice.num_k() {
        return Err(Error::InvalidArgument(format!(
            "k index {k_index} out of range 0..{}",
            ms.lattice.num_k()
        )));
    }
    let row: Vec<Complex64> = ms.values.row(k_index).to_vec();
    fourier::analyze_basis(&row, n_max)
}

/// Indices retained by the truncation: |n| <= N and |a_n| above the floor.
fn retained_indices(coeffs: &AngularCoefficients, cfg: &TsvdConfig) -> Result<Vec<i64>> {
    let n = cfg.n_max.min(coeffs.n_max()) as i64;
    let kept: Vec<i64> = (-n..=n)
        .filter(|&i| coeffs.get(i).norm() > cfg.min_singular)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptySpectrum {
            n: cfg.n_max,
            floor: cfg.min_singular,
        });
    }
    Ok(kept)
}

/// Step 1 of the reconstruction: recovers the k-space samples
/// g_N(k, phi) = sum_{retained n} m_n(k) / (2 pi a_n) e_n(phi) for every
/// detector frequency of the lattice.
pub fn tsvd_solve(
    ms: &MeasurementSet,
    coeffs: &AngularCoefficients,
    cfg: &TsvdConfig,
) -> Result<KSpaceSamples> {
    if coeffs.n_max() < cfg.n_max {
        return Err(Error::InvalidArgument(format!(
            "coefficients cover |n| <= {} but the truncation asks for {}",
            coeffs.n_max(),
            cfg.n_max
        )));
    }
    let kept = retained_indices(coeffs, cfg)?;
    let d = ms.lattice.d;
    let num_k = ms.lattice.num_k();
    let rows: Vec<Vec<Complex64>> = (0..num_k)
        .into_par_iter()
        .map(|i| {
            let m_n = svd_coefficients(ms, i, cfg.n_max)?;
            // dense band vector, zeros where filtered
            let mut band = vec![Complex64::new(0.0, 0.0); 2 * cfg.n_max + 1];
            for &n in &kept {
                let idx = (n + cfg.n_max as i64) as usize;
                band[idx] = m_n[idx] / (TAU * coeffs.get(n));
            }
            fourier::synthesize_basis(&band, d)
        })
        .collect::<Result<_>>()?;
    let mut values = Array2::from_elem((num_k, d), Complex64::new(0.0, 0.0));
    for (i, row) in rows.into_iter().enumerate() {
        for (t, v) in row.into_iter().enumerate() {
            values[(i, t)] = v;
        }
    }
    KSpaceSamples::new(ms.lattice, values)
}

/// One line of a Picard diagnostic table.
#[derive(Debug, Clone, Copy)]
pub struct PicardRow {
    pub n: i64,
    pub abs_a: f64,
    pub abs_m: f64,
    /// |m_n / a_n|; infinity where a_n = 0.
    pub abs_ratio: f64,
}

/// Per-index decay comparison of data coefficients against singular values
/// at one detector frequency.
#[derive(Debug, Clone)]
pub struct PicardTable {
    /// Frequency the row was analyzed at.
    pub k: f64,
    pub rows: Vec<PicardRow>,
}

pub fn picard_table(
    ms: &MeasurementSet,
    coeffs: &AngularCoefficients,
    k_index: usize,
    n_max: usize,
) -> Result<PicardTable> {
    if coeffs.n_max() < n_max {
        return Err(Error::InvalidArgument(format!(
            "coefficients cover |n| <= {} but the table asks for {}",
            coeffs.n_max(),
            n_max
        )));
    }
    let m_n = svd_coefficients(ms, k_index, n_max)?;
    let rows = (-(n_max as i64)..=n_max as i64)
        .map(|n| {
            let abs_a = coeffs.get(n).norm();
            let abs_m = m_n[(n + n_max as i64) as usize].norm();
            let abs_ratio = if abs_a == 0.0 {
                f64::INFINITY
            } else {
                abs_m / abs_a
            };
            PicardRow {
                n,
                abs_a,
                abs_m,
                abs_ratio,
            }
        })
        .collect();
    Ok(PicardTable {
        k: ms.lattice.k_values()[k_index],
        rows,
    })
}

/// Step 2: filtered backpropagation of k-space samples onto an object grid.
///
/// f(r) = (2 k0 / (M D)) sum_{(k, phi)} g(k, phi) e^{i T(k, phi) . r}
///        |det grad T(k, phi)| / Card(T^{-1}(T(k, phi))),
///
/// the Riemann sum of the low-pass Fourier inversion over the coverage
/// region, with the change of variables weighted by the Jacobian and the
/// preimage count.
pub fn backpropagate(
    g: &KSpaceSamples,
    grid: &ObjectGrid,
    ctx: &WaveContext,
) -> Result<ComplexImage> {
    if ctx.k0() != g.lattice.k0 {
        return Err(Error::MetadataMismatch(format!(
            "wave context k0 = {} differs from lattice k0 = {}",
            ctx.k0(),
            g.lattice.k0
        )));
    }
    let lattice = &g.lattice;
    let k_values = lattice.k_values();
    let phis = lattice.theta_values();
    let prefactor = 2.0 * lattice.k0 / (lattice.m as f64 * lattice.d as f64);

    // Flatten the lattice into (target frequency, weighted sample) pairs.
    let mut nodes: Vec<([f64; 2], Complex64)> = Vec::with_capacity(k_values.len() * phis.len());
    for (i, &k) in k_values.iter().enumerate() {
        let h = wave_vector(k, ctx)?;
        for (t, &phi) in phis.iter().enumerate() {
            let p = KPhiPoint::new(k, phi);
            let s = unit_dir(phi);
            let y = [h[0] - lattice.k0 * s[0], h[1] - lattice.k0 * s[1]];
            let det = jacobian_det(p, ctx)?;
            let card = banach_indicatrix(p) as f64;
            let w = prefactor * det.abs() / card;
            nodes.push((y, g.values[(i, t)] * w));
        }
    }

    let m = grid.m();
    let spacing = grid.spacing();
    let rows: Vec<Vec<Complex64>> = (0..m)
        .into_par_iter()
        .map(|i1| {
            let x1 = grid.coord(grid.signed_index(i1));
            let x2_start = grid.coord(grid.signed_index(0));
            let mut row = vec![Complex64::new(0.0, 0.0); m];
            for (y, c) in &nodes {
                // phase over the row advances by a constant factor per pixel
                let mut w = *c * Complex64::new(0.0, x1 * y[0] + x2_start * y[1]).exp();
                let step = Complex64::new(0.0, spacing * y[1]).exp();
                for v in row.iter_mut() {
                    *v += w;
                    w *= step;
                }
            }
            row
        })
        .collect();

    let mut values = Array2::from_elem((m, m), Complex64::new(0.0, 0.0));
    for (i1, row) in rows.into_iter().enumerate() {
        for (i2, v) in row.into_iter().enumerate() {
            values[(i1, i2)] = v;
        }
    }
    ComplexImage::from_values(*grid, values)
}

/// Full two-step pipeline: profile coefficients on the rotation grid,
/// per-frequency TSVD, then backpropagation.
pub fn reconstruct(
    ms: &MeasurementSet,
    beam: &BeamProfile,
    cfg: &TsvdConfig,
    grid: &ObjectGrid,
) -> Result<ComplexImage> {
    let coeffs = angular_coefficients(beam, cfg.n_max, ms.lattice.d)?;
    let g = tsvd_solve(ms, &coeffs, cfg)?;
    backpropagate(&g, grid, &ms.lattice.wave_context())
}

/// Conventional (plane-wave) reconstruction: skip the deconvolution, read
/// the measurement at rotation theta as the k-space sample at angle
/// phi = theta + orientation, normalized by the beam mass 2 pi a_0, and
/// backpropagate. Exact when the beam really is the plane-wave stand-in;
/// increasingly wrong as the profile widens.
pub fn reconstruct_conventional(
    ms: &MeasurementSet,
    beam: &BeamProfile,
    grid: &ObjectGrid,
) -> Result<ComplexImage> {
    let d = ms.lattice.d;
    let step = TAU / d as f64;
    let shift_f = beam.orientation() / step;
    let shift = shift_f.round() as i64;
    if (shift_f - shift as f64).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "beam orientation {} does not lie on the rotation grid (D = {d})",
            beam.orientation()
        )));
    }
    let coeffs = angular_coefficients(beam, 0, d)?;
    let a0 = coeffs.get(0);
    if a0.norm() <= 1e-300 {
        return Err(Error::EmptySpectrum { n: 0, floor: 0.0 });
    }
    let mass = TAU * a0;
    let num_k = ms.lattice.num_k();
    let mut values = Array2::from_elem((num_k, d), Complex64::new(0.0, 0.0));
    for i in 0..num_k {
        for t in 0..d {
            // phi index t reads theta index t - shift (theta = phi - orientation)
            let src = (t as i64 - shift).rem_euclid(d as i64) as usize;
            values[(i, t)] = ms.values[(i, src)] / mass;
        }
    }
    let g = KSpaceSamples::new(ms.lattice, values)?;
    backpropagate(&g, grid, &ms.lattice.wave_context())
}
