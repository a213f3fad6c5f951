//! Reconstruction quality metrics.
//!
//! PSNR and RMSE compare complex images through the modulus of the pixel
//! difference; SSIM is the standard single-scale index on the real parts
//! (Gaussian window 11, sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range
//! max - min of the reference real part). These definitions are frozen so
//! regression values stay stable.

use crate::error::{Error, Result};
use crate::phantom::ComplexImage;
#[cfg(test)]
use std::f64::consts::TAU;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy)]
pub struct MetricReport {
    pub psnr: f64,
    pub rmse: f64,
    pub ssim: f64,
}

fn check_same_grid(u: &ComplexImage, v: &ComplexImage) -> Result<()> {
    if u.grid() != v.grid() {
        return Err(Error::MetadataMismatch(format!(
            "images live on different grids: {:?} vs {:?}",
            u.grid(),
            v.grid()
        )));
    }
    Ok(())
}

/// Pairwise (cascade) summation: deterministic and platform-stable order.
fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn mean_square_error(u: &ComplexImage, v: &ComplexImage) -> f64 {
    let diffs: Vec<f64> = u
        .values()
        .iter()
        .zip(v.values().iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .collect();
    pairwise_sum(&diffs) / (u.grid().m() * u.grid().m()) as f64
}

/// Peak signal-to-noise ratio
/// 10 log10( max |u|^2 / (M^-2 sum |u - v|^2) ); +infinity for u = v.
pub fn psnr(u: &ComplexImage, v: &ComplexImage) -> Result<f64> {
    check_same_grid(u, v)?;
    let peak = u
        .values()
        .iter()
        .map(|a| a.norm_sqr())
        .fold(0.0, f64::max);
    let mse = mean_square_error(u, v);
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak / mse).log10())
}

/// Root-mean-square error sqrt( M^-2 sum |u - v|^2 ).
pub fn rmse(u: &ComplexImage, v: &ComplexImage) -> Result<f64> {
    check_same_grid(u, v)?;
    Ok(mean_square_error(u, v).sqrt())
}

/// Mean single-scale SSIM over all fully interior window positions.
pub fn ssim(u: &ComplexImage, v: &ComplexImage) -> Result<f64> {
    check_same_grid(u, v)?;
    let m = u.grid().m();
    if m < SSIM_WINDOW {
        return Err(Error::InvalidGrid(format!(
            "grid size {m} is smaller than the SSIM window {SSIM_WINDOW}"
        )));
    }
    if u.values() == v.values() {
        return Ok(1.0);
    }
    let x: Vec<f64> = u.values().iter().map(|c| c.re).collect();
    let y: Vec<f64> = v.values().iter().map(|c| c.re).collect();
    let range = x.iter().fold(f64::MIN, |a, &b| a.max(b))
        - x.iter().fold(f64::MAX, |a, &b| a.min(b));
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);

    let w = gaussian_window();
    let mu_x = separable_filter(&x, m, &w);
    let mu_y = separable_filter(&y, m, &w);
    let xx: Vec<f64> = x.iter().map(|a| a * a).collect();
    let yy: Vec<f64> = y.iter().map(|a| a * a).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a * b).collect();
    let m_xx = separable_filter(&xx, m, &w);
    let m_yy = separable_filter(&yy, m, &w);
    let m_xy = separable_filter(&xy, m, &w);

    let side = m - SSIM_WINDOW + 1;
    let mut vals = Vec::with_capacity(side * side);
    for i in 0..side * side {
        let (ux, uy) = (mu_x[i], mu_y[i]);
        let sx = m_xx[i] - ux * ux;
        let sy = m_yy[i] - uy * uy;
        let sxy = m_xy[i] - ux * uy;
        vals.push(
            ((2.0 * ux * uy + c1) * (2.0 * sxy + c2))
                / ((ux * ux + uy * uy + c1) * (sx + sy + c2)),
        );
    }
    Ok(pairwise_sum(&vals) / vals.len() as f64)
}

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let half = (SSIM_WINDOW / 2) as f64;
    let mut total = 0.0;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - half;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
        total += *v;
    }
    for v in w.iter_mut() {
        *v /= total;
    }
    w
}

/// Valid-mode separable correlation with a normalized 1D window, applied
/// along rows then columns; output is (m - W + 1)^2, row-major.
fn separable_filter(data: &[f64], m: usize, w: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let side = m - SSIM_WINDOW + 1;
    // rows
    let mut tmp = vec![0.0; m * side];
    for r in 0..m {
        for c in 0..side {
            let mut acc = 0.0;
            for (t, &wt) in w.iter().enumerate() {
                acc += wt * data[r * m + c + t];
            }
            tmp[r * side + c] = acc;
        }
    }
    // columns
    let mut out = vec![0.0; side * side];
    for r in 0..side {
        for c in 0..side {
            let mut acc = 0.0;
            for (t, &wt) in w.iter().enumerate() {
                acc += wt * tmp[(r + t) * side + c];
            }
            out[r * side + c] = acc;
        }
    }
    out
}

/// All three metrics at once.
pub fn report(u: &ComplexImage, v: &ComplexImage) -> Result<MetricReport> {
    Ok(MetricReport {
        psnr: psnr(u, v)?,
        rmse: rmse(u, v)?,
        ssim: ssim(u, v)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::ObjectGrid;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    fn grid(m: usize) -> ObjectGrid {
        ObjectGrid::new(m, 4.0).unwrap()
    }

    fn random_image(m: usize, seed: u64) -> ComplexImage {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ComplexImage::from_fn(grid(m), |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    #[test]
    fn psnr_trivial_cases() {
        let g = grid(16);
        let u = ComplexImage::from_fn(g, |_, _| Complex64::new(2.0, 0.0));
        let z = ComplexImage::zeros(g);
        // max |u|^2 equals the mean square difference: 0 dB
        assert!(psnr(&u, &z).unwrap().abs() < 1e-12);
        assert!(psnr(&u, &u).unwrap().is_infinite());
        let other = ComplexImage::zeros(grid(32));
        assert!(psnr(&u, &other).is_err());
    }

    #[test]
    fn rmse_trivial_cases() {
        let g = grid(16);
        let u = ComplexImage::from_fn(g, |_, _| Complex64::new(1.0, 0.0));
        let z = ComplexImage::zeros(g);
        assert!((rmse(&u, &z).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(rmse(&u, &u).unwrap(), 0.0);
    }

    /// psnr = 10 log10(max|u|^2 / rmse^2) by construction.
    #[test]
    fn psnr_rmse_consistency() {
        let u = random_image(32, 1);
        let v = random_image(32, 2);
        let p = psnr(&u, &v).unwrap();
        let r = rmse(&u, &v).unwrap();
        let peak = u.values().iter().map(|a| a.norm_sqr()).fold(0.0, f64::max);
        assert!((p - 10.0 * (peak / (r * r)).log10()).abs() < 1e-12);
    }

    /// Direct-loop recomputation of the PSNR on a frozen pseudo-random pair.
    #[test]
    fn psnr_matches_direct_computation() {
        let u = random_image(24, 3);
        let v = random_image(24, 4);
        let mut peak = 0.0f64;
        let mut acc = 0.0f64;
        for (a, b) in u.values().iter().zip(v.values().iter()) {
            peak = peak.max(a.norm_sqr());
            acc += (a - b).norm_sqr();
        }
        let expect = 10.0 * (peak / (acc / (24.0 * 24.0))).log10();
        assert!((psnr(&u, &v).unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn psnr_decreases_with_noise_amplitude() {
        let u = random_image(32, 5);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let noise: Vec<Complex64> = (0..32 * 32)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut last = f64::INFINITY;
        for amp in [0.01, 0.05, 0.2, 0.8] {
            let mut v = u.clone();
            for (x, n) in v.values_mut().iter_mut().zip(&noise) {
                *x += amp * n;
            }
            let p = psnr(&u, &v).unwrap();
            assert!(p < last, "psnr must fall as noise grows");
            last = p;
        }
    }

    /// PSNR and RMSE ignore pixel positions: a simultaneous shuffle of both
    /// images leaves them unchanged.
    #[test]
    fn psnr_rmse_permutation_covariant() {
        let u = random_image(16, 7);
        let v = random_image(16, 8);
        let mut idx: Vec<usize> = (0..256).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for i in (1..idx.len()).rev() {
            let j = rng.gen_range(0..=i);
            idx.swap(i, j);
        }
        let shuffle = |img: &ComplexImage| {
            let flat: Vec<Complex64> = img.values().iter().copied().collect();
            let mut out = ComplexImage::zeros(grid(16));
            for (to, &from) in idx.iter().enumerate() {
                out.values_mut()[(to / 16, to % 16)] = flat[from];
            }
            out
        };
        let (us, vs) = (shuffle(&u), shuffle(&v));
        assert!((psnr(&u, &v).unwrap() - psnr(&us, &vs).unwrap()).abs() < 1e-10);
        assert!((rmse(&u, &v).unwrap() - rmse(&us, &vs).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ssim_trivial_cases() {
        let u = random_image(24, 10);
        assert_eq!(ssim(&u, &u).unwrap(), 1.0);
        // Anticorrelated structure with vanishing local means: the
        // covariance term drives the index negative.
        let g = grid(24);
        let osc = ComplexImage::from_fn(g, {
            let mut i = 0usize;
            move |_, _| {
                let (r, c) = (i / 24, i % 24);
                i += 1;
                Complex64::new(
                    (TAU * r as f64 / 3.0).sin() + (TAU * c as f64 / 3.0).cos(),
                    0.0,
                )
            }
        });
        let mut neg = osc.clone();
        for v in neg.values_mut().iter_mut() {
            *v = -*v;
        }
        assert!(ssim(&osc, &neg).unwrap() < 0.0);
    }

    #[test]
    fn ssim_rejects_small_grids() {
        let g = ObjectGrid::new(10, 4.0).unwrap();
        let a = ComplexImage::zeros(g);
        let mut b = ComplexImage::zeros(g);
        b.values_mut()[(0, 0)] = Complex64::new(1.0, 0.0);
        assert!(matches!(ssim(&a, &b), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn ssim_stable_under_small_offsets() {
        let u = random_image(32, 11);
        let mut v = u.clone();
        let range: f64 = {
            let re: Vec<f64> = u.values().iter().map(|c| c.re).collect();
            re.iter().fold(f64::MIN, |a, &b| a.max(b)) - re.iter().fold(f64::MAX, |a, &b| a.min(b))
        };
        for x in v.values_mut().iter_mut() {
            *x += Complex64::new(0.001 * range, 0.0);
        }
        assert!(ssim(&u, &v).unwrap() > 0.99);
    }

    /// Direct windowed-loop SSIM oracle against the separable production
    /// path.
    #[test]
    fn ssim_matches_direct_reference() {
        let u = random_image(24, 12);
        // correlated second image so the index is not trivially ~0
        let mut v = u.clone();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
        for x in v.values_mut().iter_mut() {
            *x += Complex64::new(0.3 * rng.gen_range(-1.0..1.0), 0.0);
        }
        let got = ssim(&u, &v).unwrap();

        let m = 24;
        let x: Vec<f64> = u.values().iter().map(|c| c.re).collect();
        let y: Vec<f64> = v.values().iter().map(|c| c.re).collect();
        let range = x.iter().fold(f64::MIN, |a, &b| a.max(b))
            - x.iter().fold(f64::MAX, |a, &b| a.min(b));
        let c1 = (SSIM_K1 * range).powi(2);
        let c2 = (SSIM_K2 * range).powi(2);
        let w1 = gaussian_window();
        let mut acc = 0.0;
        let side = m - SSIM_WINDOW + 1;
        for r in 0..side {
            for c in 0..side {
                let mut mx = 0.0;
                let mut my = 0.0;
                let mut mxx = 0.0;
                let mut myy = 0.0;
                let mut mxy = 0.0;
                for a in 0..SSIM_WINDOW {
                    for b in 0..SSIM_WINDOW {
                        let wt = w1[a] * w1[b];
                        let xv = x[(r + a) * m + c + b];
                        let yv = y[(r + a) * m + c + b];
                        mx += wt * xv;
                        my += wt * yv;
                        mxx += wt * xv * xv;
                        myy += wt * yv * yv;
                        mxy += wt * xv * yv;
                    }
                }
                let sx = mxx - mx * mx;
                let sy = myy - my * my;
                let sxy = mxy - mx * my;
                acc += ((2.0 * mx * my + c1) * (2.0 * sxy + c2))
                    / ((mx * mx + my * my + c1) * (sx + sy + c2));
            }
        }
        let expect = acc / (side * side) as f64;
        assert!((got - expect).abs() < 1e-6, "{got} vs {expect}");
    }

    /// Frozen fixture checked against scikit-image's
    /// structural_similarity(gaussian_weights=True, sigma=1.5, win_size=11,
    /// use_sample_covariance=False) on the same arrays.
    #[test]
    fn ssim_matches_external_reference_value() {
        let g = grid(24);
        let build = |f: &dyn Fn(f64, f64) -> f64| {
            let mut i = 0usize;
            ComplexImage::from_fn(g, move |_, _| {
                let (r, c) = ((i / 24) as f64, (i % 24) as f64);
                i += 1;
                Complex64::new(f(r, c), 0.0)
            })
        };
        let u = build(&|r, c| (0.7 * r).sin() + (1.3 * c).cos());
        let v = build(&|r, c| {
            (0.7 * r).sin() + (1.3 * c).cos() + 0.25 * (3.0 * r + c).sin()
        });
        let got = ssim(&u, &v).unwrap();
        assert!(
            (got - 0.9814470099424435).abs() < 1e-6,
            "ssim {got} drifted from the frozen reference"
        );
    }
}
