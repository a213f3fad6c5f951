//! Forward model: measurement synthesis on the (k, theta) lattice, the
//! direct Born convolution field used as validation oracle, and noise.

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2, TAU};

use crate::beam::{incident_field_batch, BeamProfile};
use crate::error::{Error, Result};
use crate::fourier::{self, CyclicConvolver};
use crate::kspace::{kappa, unit_dir, wave_vector, WaveContext, DEFAULT_EPS_K};
use crate::phantom::ComplexImage;
pub use crate::special::hankel_h0_1;

/// Shared (k, theta) lattice metadata of measurements and k-space samples.
///
/// The k-grid is (2 k0 / M) * {-M/2, ..., M/2 - 1} clamped to
/// |k| <= (1 - eps_k) k0; the rotation grid is S_D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementLattice {
    pub m: usize,
    pub d: usize,
    pub k0: f64,
    pub r_m: f64,
    pub eps_k: f64,
}

impl MeasurementLattice {
    pub fn new(m: usize, d: usize, k0: f64, r_m: f64, eps_k: f64) -> Result<Self> {
        if m == 0 || m % 2 != 0 || d == 0 || d % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "lattice sizes must be positive even integers, got M = {m}, D = {d}"
            )));
        }
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(Error::InvalidWavenumber(k0));
        }
        if !(r_m.is_finite() && r_m > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "measurement line offset must be positive, got {r_m}"
            )));
        }
        if !(eps_k > 0.0 && eps_k < 1.0) {
            return Err(Error::InvalidGrid(format!(
                "k-grid clamp must lie in (0, 1), got {eps_k}"
            )));
        }
        Ok(Self { m, d, k0, r_m, eps_k })
    }

    /// Signed k-grid indices surviving the clamp.
    pub fn k_indices(&self) -> Vec<i64> {
        let half = (self.m / 2) as i64;
        let bound = (1.0 - self.eps_k) * self.m as f64 / 2.0;
        (-half..half)
            .filter(|j| (j.abs() as f64) <= bound)
            .collect()
    }

    pub fn k_values(&self) -> Vec<f64> {
        self.k_indices()
            .iter()
            .map(|&j| 2.0 * self.k0 * j as f64 / self.m as f64)
            .collect()
    }

    pub fn num_k(&self) -> usize {
        self.k_indices().len()
    }

    pub fn theta_values(&self) -> Vec<f64> {
        fourier::grid(self.d)
    }

    pub fn wave_context(&self) -> WaveContext {
        WaveContext::new(self.k0).expect("validated on construction")
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::MetadataMismatch(format!(
                "lattice {self:?} differs from {other:?}"
            )));
        }
        Ok(())
    }
}

/// Scattered-wave data m(k, theta), k slow, theta fast.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub lattice: MeasurementLattice,
    pub values: Array2<Complex64>,
}

impl MeasurementSet {
    pub fn new(lattice: MeasurementLattice, values: Array2<Complex64>) -> Result<Self> {
        if values.dim() != (lattice.num_k(), lattice.d) {
            return Err(Error::InvalidGrid(format!(
                "measurement matrix {:?} does not match lattice ({}, {})",
                values.dim(),
                lattice.num_k(),
                lattice.d
            )));
        }
        Ok(Self { lattice, values })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Samples g(k, phi) of the object's Fourier transform on the coverage
/// lattice T(U_{M,D}); same layout as the measurements they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct KSpaceSamples {
    pub lattice: MeasurementLattice,
    pub values: Array2<Complex64>,
}

impl KSpaceSamples {
    pub fn new(lattice: MeasurementLattice, values: Array2<Complex64>) -> Result<Self> {
        if values.dim() != (lattice.num_k(), lattice.d) {
            return Err(Error::InvalidGrid(format!(
                "k-space matrix {:?} does not match lattice ({}, {})",
                values.dim(),
                lattice.num_k(),
                lattice.d
            )));
        }
        Ok(Self { lattice, values })
    }
}

/// Nonzero pixels of an image grouped into contiguous runs along j2, for
/// fast phase-recurrence sums.
struct PixelRuns {
    spacing: f64,
    /// (x1, x2_start, values)
    runs: Vec<(f64, f64, Vec<Complex64>)>,
}

fn pixel_runs(img: &ComplexImage) -> PixelRuns {
    let grid = img.grid();
    let m = grid.m();
    let zero = Complex64::new(0.0, 0.0);
    let mut runs = Vec::new();
    for i1 in 0..m {
        let x1 = grid.coord(grid.signed_index(i1));
        let mut i2 = 0usize;
        while i2 < m {
            if img.values()[(i1, i2)] == zero {
                i2 += 1;
                continue;
            }
            let start = i2;
            let mut vals = Vec::new();
            while i2 < m && img.values()[(i1, i2)] != zero {
                vals.push(img.values()[(i1, i2)]);
                i2 += 1;
            }
            runs.push((x1, grid.coord(grid.signed_index(start)), vals));
        }
    }
    PixelRuns {
        spacing: grid.spacing(),
        runs,
    }
}

impl PixelRuns {
    /// sum_j f_j exp(-i r_j . y), by one exponential per run and a phase
    /// recurrence along it.
    fn phase_sum(&self, y: [f64; 2]) -> Complex64 {
        let step = Complex64::new(0.0, -self.spacing * y[1]).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        for (x1, x2_start, vals) in &self.runs {
            let head = Complex64::new(0.0, -(x1 * y[0] + x2_start * y[1])).exp();
            let mut w = head;
            let mut run = Complex64::new(0.0, 0.0);
            for v in vals {
                run += v * w;
                w *= step;
            }
            acc += run;
        }
        acc
    }
}

/// Nonuniform discrete Fourier transform of an image:
/// (1/2pi) (2 r_s / M)^2 sum_j f(r_j) exp(-i r_j . y) at each target.
pub fn ndft2(img: &ComplexImage, targets: &[[f64; 2]]) -> Vec<Complex64> {
    let runs = pixel_runs(img);
    let scale = runs.spacing * runs.spacing / TAU;
    targets
        .par_iter()
        .map(|&y| runs.phase_sum(y) * scale)
        .collect()
}

/// Configuration of a measurement simulation.
#[derive(Debug, Clone, Copy)]
pub struct SimulateConfig {
    pub m: usize,
    pub d: usize,
    pub r_m: f64,
    pub eps_k: f64,
    /// The inner plane-wave quadrature runs on S_{oversample * D}. Keep at 1
    /// for the plain S_D quadrature; the CLI defaults to 2 so reconstruction
    /// never sees the exact discretization that generated its data.
    pub angular_oversample: usize,
}

impl SimulateConfig {
    pub fn new(m: usize, d: usize, r_m: f64) -> Self {
        Self {
            m,
            d,
            r_m,
            eps_k: DEFAULT_EPS_K,
            angular_oversample: 1,
        }
    }

    pub fn with_oversample(mut self, q: usize) -> Self {
        self.angular_oversample = q;
        self
    }

    pub fn with_eps_k(mut self, eps: f64) -> Self {
        self.eps_k = eps;
        self
    }
}

/// Synthesizes m(k, theta) = (2 pi / D') sum_{phi in S_D'} a(phi - theta)
/// Ff(T(k, phi)) on the (M, D) lattice, with D' = oversample * D. The inner
/// NDFT values are computed once per phi and reused for every theta through
/// a fast cyclic convolution.
pub fn simulate_measurements(
    img: &ComplexImage,
    beam: &BeamProfile,
    ctx: &WaveContext,
    cfg: SimulateConfig,
) -> Result<MeasurementSet> {
    if cfg.r_m <= img.grid().r_s() {
        return Err(Error::InvalidGrid(format!(
            "measurement line r_M = {} must lie outside the support radius {}",
            cfg.r_m,
            img.grid().r_s()
        )));
    }
    if cfg.angular_oversample == 0 {
        return Err(Error::InvalidArgument(
            "angular oversample factor must be >= 1".into(),
        ));
    }
    let lattice = MeasurementLattice::new(cfg.m, cfg.d, ctx.k0(), cfg.r_m, cfg.eps_k)?;
    let q = cfg.angular_oversample;
    let d_sim = cfg.d * q;
    let k_values = lattice.k_values();
    let phis = fourier::grid(d_sim);

    let mut targets = Vec::with_capacity(k_values.len() * d_sim);
    for &k in &k_values {
        let h = wave_vector(k, ctx)?;
        for &phi in &phis {
            let s = unit_dir(phi);
            targets.push([h[0] - ctx.k0() * s[0], h[1] - ctx.k0() * s[1]]);
        }
    }
    let gvals = ndft2(img, &targets);

    let kernel = beam.sample_grid(d_sim);
    let conv = CyclicConvolver::new(&kernel)?;
    let rows: Vec<Vec<Complex64>> = (0..k_values.len())
        .into_par_iter()
        .map(|i| {
            let full = conv.apply(&gvals[i * d_sim..(i + 1) * d_sim])?;
            Ok((0..cfg.d).map(|t| full[t * q]).collect())
        })
        .collect::<Result<_>>()?;

    let mut values = Array2::from_elem((k_values.len(), cfg.d), Complex64::new(0.0, 0.0));
    for (i, row) in rows.into_iter().enumerate() {
        for (t, v) in row.into_iter().enumerate() {
            values[(i, t)] = v;
        }
    }
    MeasurementSet::new(lattice, values)
}

/// Adds complex white Gaussian noise scaled so that
/// ||m_noisy - m|| / ||m|| equals percent/100 exactly. Deterministic per
/// seed; percent = 0 returns the input bit-for-bit.
pub fn add_noise(ms: &MeasurementSet, percent: f64, seed: u64) -> Result<MeasurementSet> {
    if !(percent.is_finite() && percent >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "noise percent must be nonnegative, got {percent}"
        )));
    }
    if percent == 0.0 {
        return Ok(ms.clone());
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    // independent real and imaginary parts with variance 1/2 each
    let xi: Vec<Complex64> = (0..ms.values.len())
        .map(|_| {
            let re: f64 = normal.sample(&mut rng);
            let im: f64 = normal.sample(&mut rng);
            Complex64::new(re, im) / SQRT_2
        })
        .collect();
    let norm_m = ms.frobenius_norm();
    let norm_xi = xi.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let delta = percent / 100.0 * norm_m / norm_xi;
    let mut out = ms.clone();
    for (v, x) in out.values.iter_mut().zip(&xi) {
        *v += delta * x;
    }
    Ok(out)
}

/// Born-approximated scattered field by direct convolution quadrature:
/// u(r) = (2 r_s / M)^2 sum_j G(r - r_j) f(r_j) u_inc(r_j) with
/// G(r) = (i/4) H0^(1)(k0 |r|). This is the independent oracle the k-space
/// pipeline is checked against; evaluation points must avoid source pixels.
pub fn born_field_direct(
    img: &ComplexImage,
    beam: &BeamProfile,
    eval_points: &[[f64; 2]],
    ctx: &WaveContext,
    d: usize,
) -> Result<Vec<Complex64>> {
    let grid = img.grid();
    let zero = Complex64::new(0.0, 0.0);
    let mut sources: Vec<([f64; 2], Complex64)> = Vec::new();
    for (x, y, v) in img.iter_points() {
        if v != zero {
            sources.push(([x, y], v));
        }
    }
    let positions: Vec<[f64; 2]> = sources.iter().map(|(p, _)| *p).collect();
    let uinc = incident_field_batch(beam, &positions, ctx, d)?;
    let weight = grid.spacing() * grid.spacing();
    let terms: Vec<([f64; 2], Complex64)> = sources
        .iter()
        .zip(&uinc)
        .map(|((p, f), u)| (*p, f * u * weight))
        .collect();
    let k0 = ctx.k0();
    let tiny = 1e-9 * grid.spacing();
    eval_points
        .par_iter()
        .map(|&r| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (p, w) in &terms {
                let dist = (r[0] - p[0]).hypot(r[1] - p[1]);
                if dist < tiny {
                    return Err(Error::SingularEvaluation { x: r[0], y: r[1] });
                }
                let h = hankel_h0_1(k0 * dist)?;
                acc += Complex64::new(0.0, 0.25) * h * w;
            }
            Ok(acc)
        })
        .collect()
}

/// Outcome of the Fourier-diffraction consistency check.
#[derive(Debug, Clone)]
pub struct FdtReport {
    pub k_values: Vec<f64>,
    /// 1D unitary Fourier transform of the Born field on the line r2 = r_M.
    pub line_transform: Vec<Complex64>,
    /// Right-hand side sqrt(pi/2) i e^{i kappa r_M} / kappa * integral of
    /// a(s) Ff(h(k) - k0 s) ds.
    pub predicted: Vec<Complex64>,
    pub rel_l2_discrepancy: f64,
    /// Set when line_extent < 4 r_s: the slowly decaying field is truncated
    /// hard enough to corrupt the line transform.
    pub truncation_warning: bool,
}

/// Number of detector frequencies the check is evaluated at.
const FDT_K_SAMPLES: usize = 161;
/// Fraction of k0 covered by the comparison; kappa degrades the conditioning
/// of the relation as |k| -> k0.
const FDT_K_FRACTION: f64 = 0.8;

/// Verifies the diffraction relation numerically: transforms the directly
/// computed Born field on the line r2 = r_M and compares against the
/// beam-averaged k-space prediction, over |k| <= 0.8 k0.
pub fn fdt_check(
    img: &ComplexImage,
    beam: &BeamProfile,
    ctx: &WaveContext,
    r_m: f64,
    line_extent: f64,
    l: usize,
    d: usize,
) -> Result<FdtReport> {
    if r_m <= img.grid().r_s() {
        return Err(Error::InvalidGrid(format!(
            "line offset r_M = {r_m} must exceed the support radius {}",
            img.grid().r_s()
        )));
    }
    if l < 2 || l % 2 != 0 {
        return Err(Error::InvalidGrid(format!(
            "line sample count must be a positive even integer, got {l}"
        )));
    }
    if !(line_extent.is_finite() && line_extent > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "line extent must be positive, got {line_extent}"
        )));
    }
    let truncation_warning = line_extent < 4.0 * img.grid().r_s();

    // Born field at midpoint samples of the line.
    let dx = 2.0 * line_extent / l as f64;
    let line_pts: Vec<[f64; 2]> = (0..l)
        .map(|i| [-line_extent + (i as f64 + 0.5) * dx, r_m])
        .collect();
    let field = born_field_direct(img, beam, &line_pts, ctx, d)?;

    let k0 = ctx.k0();
    let k_values: Vec<f64> = (0..FDT_K_SAMPLES)
        .map(|i| {
            FDT_K_FRACTION * k0 * (2.0 * i as f64 / (FDT_K_SAMPLES - 1) as f64 - 1.0)
        })
        .collect();

    // (i) 1D unitary transform of the sampled field by quadrature.
    let line_transform: Vec<Complex64> = k_values
        .par_iter()
        .map(|&k| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (pt, u) in line_pts.iter().zip(&field) {
                acc += u * Complex64::new(0.0, -k * pt[0]).exp();
            }
            acc * dx / TAU.sqrt()
        })
        .collect();

    // (ii) beam-averaged k-space side via NDFT.
    let profile = beam.sample_grid(d);
    let phis = fourier::grid(d);
    let active: Vec<(f64, Complex64)> = phis
        .iter()
        .zip(&profile)
        .filter(|(_, a)| **a != Complex64::new(0.0, 0.0))
        .map(|(&phi, &a)| (phi, a))
        .collect();
    let mut targets = Vec::with_capacity(k_values.len() * active.len());
    for &k in &k_values {
        let h = wave_vector(k, ctx)?;
        for &(phi, _) in &active {
            let s = unit_dir(phi);
            targets.push([h[0] - k0 * s[0], h[1] - k0 * s[1]]);
        }
    }
    let ff = ndft2(img, &targets);
    let predicted: Vec<Complex64> = k_values
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let mut avg = Complex64::new(0.0, 0.0);
            for (j, &(_, a)) in active.iter().enumerate() {
                avg += a * ff[i * active.len() + j];
            }
            avg *= TAU / d as f64;
            let kap = kappa(k, ctx)?;
            let front = (PI / 2.0).sqrt() / kap
                * Complex64::new(0.0, 1.0)
                * Complex64::new(0.0, kap * r_m).exp();
            Ok(front * avg)
        })
        .collect::<Result<_>>()?;

    let mut num = 0.0;
    let mut den = 0.0;
    for (l, r) in line_transform.iter().zip(&predicted) {
        num += (l - r).norm_sqr();
        den += r.norm_sqr();
    }
    let rel_l2_discrepancy = if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    };

    Ok(FdtReport {
        k_values,
        line_transform,
        predicted,
        rel_l2_discrepancy,
        truncation_warning,
    })
}

/// Exact (direct-NDFT) k-space samples on the lattice, bypassing the
/// measurement operator entirely; the reference input for backpropagation
/// tests and the conventional-DT comparison.
pub fn exact_kspace_samples(img: &ComplexImage, lattice: &MeasurementLattice) -> Result<KSpaceSamples> {
    let ctx = lattice.wave_context();
    let k_values = lattice.k_values();
    let phis = lattice.theta_values();
    let mut targets = Vec::with_capacity(k_values.len() * phis.len());
    for &k in &k_values {
        let h = wave_vector(k, &ctx)?;
        for &phi in &phis {
            let s = unit_dir(phi);
            targets.push([h[0] - lattice.k0 * s[0], h[1] - lattice.k0 * s[1]]);
        }
    }
    let vals = ndft2(img, &targets);
    let values = Array2::from_shape_vec((k_values.len(), phis.len()), vals)
        .expect("target count matches lattice");
    KSpaceSamples::new(*lattice, values)
}

/// Checks that two lattices agree; re-exported convenience for pipeline code.
pub fn ensure_same_lattice(a: &MeasurementLattice, b: &MeasurementLattice) -> Result<()> {
    a.check_same(b)
}

/// Relative L2 difference ||a - b|| / ||a|| between the k-profiles of two
/// measurement sets at the same rotation index.
pub fn rotation_relative_difference(
    a: &MeasurementSet,
    b: &MeasurementSet,
    theta_index: usize,
) -> Result<f64> {
    ensure_same_lattice(&a.lattice, &b.lattice)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a
        .values
        .column(theta_index)
        .iter()
        .zip(b.values.column(theta_index).iter())
    {
        num += (x - y).norm_sqr();
        den += x.norm_sqr();
    }
    Ok((num / den).sqrt())
}

/// The rotation angle theta = 0 sits at index D/2 of the theta-fast axis.
pub fn theta_zero_index(lattice: &MeasurementLattice) -> usize {
    lattice.d / 2
}
