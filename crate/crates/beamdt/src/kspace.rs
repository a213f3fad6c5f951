//! Geometry of the k-space measurement manifold.
//!
//! Measurement coordinates are pairs (k, phi) with detector frequency
//! |k| < k0 and plane-wave angle phi. They map to spatial frequencies through
//! the coverage map T(k, phi) = h(k) - k0 s(phi), where h(k) = (k, kappa(k))
//! lies on the upper half of the circle of radius k0 and s(phi) is the unit
//! direction (cos phi, sin phi). Backpropagation weights each lattice node by
//! |det grad T| divided by the number of preimages of its image point (the
//! Banach indicatrix). Everything here is a pure function.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

/// Default relative margin keeping the k-grid away from |k| = k0, where
/// kappa -> 0 blows up both the Jacobian and the deconvolution prefactor.
pub const DEFAULT_EPS_K: f64 = 1e-3;

/// Wavenumber context: k0 = 2*pi / wavelength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveContext {
    k0: f64,
}

impl WaveContext {
    pub fn new(k0: f64) -> Result<Self> {
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(Error::InvalidWavenumber(k0));
        }
        Ok(Self { k0 })
    }

    pub fn from_wavelength(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidWavenumber(lambda));
        }
        Self::new(TAU / lambda)
    }

    #[inline]
    pub fn k0(&self) -> f64 {
        self.k0
    }

    /// Wavelength 2*pi / k0, derived so the pair stays consistent.
    #[inline]
    pub fn wavelength(&self) -> f64 {
        TAU / self.k0
    }
}

/// A point of the measurement manifold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KPhiPoint {
    pub k: f64,
    pub phi: f64,
}

impl KPhiPoint {
    pub fn new(k: f64, phi: f64) -> Self {
        Self { k, phi }
    }
}

/// Wraps an angle into [-pi, pi).
#[inline]
pub fn wrap_angle(phi: f64) -> f64 {
    let t = phi.rem_euclid(TAU);
    if t >= PI {
        t - TAU
    } else {
        t
    }
}

/// Unit direction s(phi) = (cos phi, sin phi).
#[inline]
pub fn unit_dir(phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [c, s]
}

#[inline]
pub fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

#[inline]
fn check_k(k: f64, ctx: &WaveContext) -> Result<()> {
    if k.abs() < ctx.k0 {
        Ok(())
    } else {
        Err(Error::FrequencyOutOfRange { k, k0: ctx.k0 })
    }
}

/// kappa(k) = sqrt(k0^2 - k^2), the vertical component of the wave vector.
///
/// Evaluated in factored form (k0-k)(k0+k) so that frequencies close to the
/// clamp |k| = (1 - eps_k) k0 keep full relative accuracy.
pub fn kappa(k: f64, ctx: &WaveContext) -> Result<f64> {
    check_k(k, ctx)?;
    Ok(((ctx.k0 - k) * (ctx.k0 + k)).sqrt())
}

/// Wave vector h(k) = (k, kappa(k)); its norm is k0.
pub fn wave_vector(k: f64, ctx: &WaveContext) -> Result<[f64; 2]> {
    Ok([k, kappa(k, ctx)?])
}

/// Coverage map T(k, phi) = h(k) - k0 s(phi).
pub fn map_t(p: KPhiPoint, ctx: &WaveContext) -> Result<[f64; 2]> {
    let h = wave_vector(p.k, ctx)?;
    let s = unit_dir(p.phi);
    Ok([h[0] - ctx.k0 * s[0], h[1] - ctx.k0 * s[1]])
}

/// Jacobian determinant of T: k0 (k/kappa(k) sin(phi) - cos(phi)).
///
/// Grows like 1/kappa towards |k| -> k0; consumers clamp the k-grid to
/// |k| <= (1 - eps_k) k0.
pub fn jacobian_det(p: KPhiPoint, ctx: &WaveContext) -> Result<f64> {
    let kap = kappa(p.k, ctx)?;
    let (s, c) = p.phi.sin_cos();
    Ok(ctx.k0 * (p.k / kap * s - c))
}

/// Number of (k', phi') preimages of T(k, phi): 2 for phi in [-pi, 0),
/// 1 for phi in [0, pi).
///
/// The exceptional image points (y = 0, |y| = 2 k0) carry the generic value;
/// they are null sets in the backpropagation integral.
pub fn banach_indicatrix(p: KPhiPoint) -> u32 {
    if wrap_angle(p.phi) < 0.0 {
        2
    } else {
        1
    }
}

/// Membership in the closure of the covered frequency region T(U):
/// the upper half-disk of radius 2 k0 together with the two disks of radius
/// k0 around (+-k0, 0).
pub fn coverage_contains(y: [f64; 2], ctx: &WaveContext) -> bool {
    let k0 = ctx.k0;
    if norm2(y) > 2.0 * k0 {
        return false;
    }
    y[1] >= 0.0 || norm2([y[0] - k0, y[1]]) <= k0 || norm2([y[0] + k0, y[1]]) <= k0
}
