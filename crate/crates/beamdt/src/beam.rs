//! Beam profiles on the unit circle and the incident fields they synthesize.
//!
//! A profile is a weight function a(phi) attached to plane-wave directions
//! s(phi) = (cos phi, sin phi); the incident field is the quadrature of
//! a(s) exp(i k0 r.s) over the circle. Profiles are immutable; rotation
//! returns a copy whose evaluation is shifted, so the same object can be
//! shared across rotation angles and worker threads.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};
use crate::fourier;
use crate::kspace::{wrap_angle, WaveContext};

/// Nominal propagation direction of a freshly constructed profile:
/// straight down, matching illumination from the top.
pub const DEFAULT_ORIENTATION: f64 = -FRAC_PI_2;

#[derive(Debug, Clone, PartialEq)]
pub enum BeamKind {
    /// exp(-A cos^2 phi) on the downward half circle (sin phi < 0), zero on
    /// the upward half. Larger A concentrates the profile around the
    /// propagation direction and widens the beam waist. Profiles with
    /// different A are deliberately not mass-normalized against each other.
    Gaussian { a: f64 },
    /// Indicator of the arc swept counterclockwise from `lo` to `hi`.
    UniformArc { lo: f64, hi: f64 },
    /// Complex samples on the uniform angle grid S_D, evaluated by
    /// nearest-sample lookup.
    Tabulated { samples: Vec<Complex64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamProfile {
    kind: BeamKind,
    orientation: f64,
}

impl BeamProfile {
    pub fn gaussian(a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "gaussian beam parameter A must be positive, got {a}"
            )));
        }
        Ok(Self {
            kind: BeamKind::Gaussian { a },
            orientation: DEFAULT_ORIENTATION,
        })
    }

    pub fn uniform_arc(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "uniform arc needs finite bounds with hi > lo, got [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            kind: BeamKind::UniformArc { lo, hi },
            orientation: DEFAULT_ORIENTATION,
        })
    }

    pub fn tabulated(samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() < 2 || samples.len() % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "tabulated profile needs an even number of samples >= 2, got {}",
                samples.len()
            )));
        }
        Ok(Self {
            kind: BeamKind::Tabulated { samples },
            orientation: DEFAULT_ORIENTATION,
        })
    }

    /// Discrete stand-in for plane-wave illumination: a single sample of
    /// weight D / (2 pi) at the propagation direction, so that the D-point
    /// quadrature of the incident-field integral collapses to exactly one
    /// plane wave. The weight is tied to the grid, so build the stand-in
    /// with the same D the quadrature will use.
    pub fn plane_wave(d: usize) -> Result<Self> {
        if d < 4 || d % 4 != 0 {
            return Err(Error::InvalidGrid(format!(
                "plane-wave stand-in needs D divisible by 4 so the downward \
                 direction lies on the grid, got {d}"
            )));
        }
        let mut samples = vec![Complex64::new(0.0, 0.0); d];
        // phi = -pi/2 sits at grid index D/4 (grid starts at -pi).
        samples[d / 4] = Complex64::new(d as f64 / TAU, 0.0);
        Ok(Self {
            kind: BeamKind::Tabulated { samples },
            orientation: DEFAULT_ORIENTATION,
        })
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    pub fn kind(&self) -> &BeamKind {
        &self.kind
    }

    /// The profile rotated by `theta`: evaluates as phi -> self(phi - theta).
    pub fn rotated(&self, theta: f64) -> Self {
        Self {
            kind: self.kind.clone(),
            orientation: self.orientation + theta,
        }
    }

    /// Evaluates the profile at angle `phi` (2 pi periodic).
    pub fn eval(&self, phi: f64) -> Complex64 {
        let local = wrap_angle(phi - (self.orientation - DEFAULT_ORIENTATION));
        match &self.kind {
            BeamKind::Gaussian { a } => {
                let (s, c) = local.sin_cos();
                if s < 0.0 {
                    Complex64::new((-a * c * c).exp(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            BeamKind::UniformArc { lo, hi } => {
                if hi - lo >= TAU {
                    return Complex64::new(1.0, 0.0);
                }
                let width = (hi - lo).rem_euclid(TAU);
                if (local - lo).rem_euclid(TAU) <= width {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            BeamKind::Tabulated { samples } => {
                let d = samples.len();
                let idx =
                    ((local + std::f64::consts::PI) * d as f64 / TAU).round() as usize % d;
                samples[idx]
            }
        }
    }

    /// Profile sampled on S_D.
    pub fn sample_grid(&self, d: usize) -> Vec<Complex64> {
        fourier::grid(d).iter().map(|&phi| self.eval(phi)).collect()
    }
}

/// Angular Fourier coefficients a_n, n = -N ..= N, of a beam profile.
#[derive(Debug, Clone)]
pub struct AngularCoefficients {
    n_max: usize,
    values: Vec<Complex64>,
}

impl AngularCoefficients {
    pub fn from_values(n_max: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != 2 * n_max + 1 {
            return Err(Error::LengthMismatch {
                expected: 2 * n_max + 1,
                actual: values.len(),
            });
        }
        Ok(Self { n_max, values })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coefficient a_n; panics when |n| > N.
    pub fn get(&self, n: i64) -> Complex64 {
        self.values[(n + self.n_max as i64) as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

/// Rectangle-rule coefficients a_n = (1/D) sum_j a(phi_j) exp(-i n phi_j) on
/// S_D. Requires the oversampled quadrature D >= 4N + 4.
pub fn angular_coefficients(
    beam: &BeamProfile,
    n_max: usize,
    d: usize,
) -> Result<AngularCoefficients> {
    let min = 4 * n_max + 4;
    if d < min {
        return Err(Error::QuadratureTooCoarse { d, n: n_max, min });
    }
    if d % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "angular grid size must be even, got {d}"
        )));
    }
    let samples = beam.sample_grid(d);
    let values = fourier::analyze_kernel(&samples, n_max)?;
    AngularCoefficients::from_values(n_max, values)
}

/// Incident field u(r) = (2 pi / D) sum_{phi in S_D} a(phi) exp(i k0 r.s(phi)).
pub fn incident_field(
    beam: &BeamProfile,
    r: [f64; 2],
    ctx: &WaveContext,
    d: usize,
) -> Result<Complex64> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "incident-field quadrature size must be a positive even integer, got {d}"
        )));
    }
    let samples = beam.sample_grid(d);
    Ok(incident_field_from_samples(&samples, r, ctx.k0()))
}

/// Same field evaluated at many points, with the profile sampled once.
pub fn incident_field_batch(
    beam: &BeamProfile,
    points: &[[f64; 2]],
    ctx: &WaveContext,
    d: usize,
) -> Result<Vec<Complex64>> {
    if d == 0 || d % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "incident-field quadrature size must be a positive even integer, got {d}"
        )));
    }
    let samples = beam.sample_grid(d);
    let k0 = ctx.k0();
    Ok(points
        .par_iter()
        .map(|&r| incident_field_from_samples(&samples, r, k0))
        .collect())
}

fn incident_field_from_samples(samples: &[Complex64], r: [f64; 2], k0: f64) -> Complex64 {
    let d = samples.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, &a) in samples.iter().enumerate() {
        if a == Complex64::new(0.0, 0.0) {
            continue;
        }
        let phi = TAU * (t as f64 - d as f64 / 2.0) / d as f64;
        let (s, c) = phi.sin_cos();
        acc += a * Complex64::new(0.0, k0 * (r[0] * c + r[1] * s)).exp();
    }
    acc * (TAU / d as f64)
}
