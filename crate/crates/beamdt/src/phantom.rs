//! Object-domain sampling lattices and test phantoms.

use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square sampling lattice: M x M points (2 r_s / M) * (j1, j2) with
/// j1, j2 in {-M/2, ..., M/2 - 1}. The index pair (j1, j2) = (0, 0) lands on
/// the spatial origin exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectGrid {
    m: usize,
    r_s: f64,
}

impl ObjectGrid {
    pub fn new(m: usize, r_s: f64) -> Result<Self> {
        if m == 0 || m % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "object grid size must be a positive even integer, got {m}"
            )));
        }
        if !(r_s.is_finite() && r_s > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "support half-width must be positive, got {r_s}"
            )));
        }
        Ok(Self { m, r_s })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn r_s(&self) -> f64 {
        self.r_s
    }

    /// Lattice spacing 2 r_s / M.
    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.r_s / self.m as f64
    }

    /// Spatial coordinate of signed index j in {-M/2, ..., M/2 - 1}.
    #[inline]
    pub fn coord(&self, j: i64) -> f64 {
        self.spacing() * j as f64
    }

    /// Signed index of storage row/column i in 0..M.
    #[inline]
    pub fn signed_index(&self, i: usize) -> i64 {
        i as i64 - (self.m / 2) as i64
    }
}

/// Complex field sampled on an [`ObjectGrid`], stored (j1 slow, j2 fast)
/// with index offset +M/2.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    grid: ObjectGrid,
    values: Array2<Complex64>,
}

impl ComplexImage {
    pub fn zeros(grid: ObjectGrid) -> Self {
        Self {
            grid,
            values: Array2::from_elem((grid.m(), grid.m()), Complex64::new(0.0, 0.0)),
        }
    }

    pub fn from_values(grid: ObjectGrid, values: Array2<Complex64>) -> Result<Self> {
        if values.dim() != (grid.m(), grid.m()) {
            return Err(Error::InvalidGrid(format!(
                "value matrix {:?} does not match grid size {}",
                values.dim(),
                grid.m()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Builds an image by evaluating `f` at every lattice point.
    pub fn from_fn(grid: ObjectGrid, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let m = grid.m();
        let values = Array2::from_shape_fn((m, m), |(i1, i2)| {
            f(
                grid.coord(grid.signed_index(i1)),
                grid.coord(grid.signed_index(i2)),
            )
        });
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> ObjectGrid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.values
    }

    /// Value at signed lattice indices.
    #[inline]
    pub fn at(&self, j1: i64, j2: i64) -> Complex64 {
        let off = (self.grid.m() / 2) as i64;
        self.values[((j1 + off) as usize, (j2 + off) as usize)]
    }

    /// Iterates (r1, r2, value) over the lattice, j1 slow.
    pub fn iter_points(&self) -> impl Iterator<Item = (f64, f64, Complex64)> + '_ {
        let grid = self.grid;
        self.values.indexed_iter().map(move |((i1, i2), &v)| {
            (
                grid.coord(grid.signed_index(i1)),
                grid.coord(grid.signed_index(i2)),
                v,
            )
        })
    }
}

/// One disk of a piecewise-constant phantom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub amplitude: Complex64,
}

fn check_disk_in_support(spec: &DiskSpec, grid: &ObjectGrid) -> Result<()> {
    let dist = spec.center[0].hypot(spec.center[1]);
    if spec.radius <= 0.0 || dist + spec.radius > grid.r_s() {
        return Err(Error::SupportViolation {
            cx: spec.center[0],
            cy: spec.center[1],
            radius: spec.radius,
            r_s: grid.r_s(),
        });
    }
    Ok(())
}

/// Indicator of the centered disk of radius `d`, scaled by `amplitude`.
/// Pixel membership is a center-point test, no anti-aliasing.
pub fn disk_phantom(grid: ObjectGrid, d: f64, amplitude: Complex64) -> Result<ComplexImage> {
    if !(d > 0.0 && d <= grid.r_s()) {
        return Err(Error::SupportViolation {
            cx: 0.0,
            cy: 0.0,
            radius: d,
            r_s: grid.r_s(),
        });
    }
    Ok(ComplexImage::from_fn(grid, |x, y| {
        if x.hypot(y) < d {
            amplitude
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// Piecewise-constant phantom from a list of disks; later disks overwrite
/// earlier ones where they overlap. Every disk must fit inside the support.
pub fn two_inclusion_phantom(grid: ObjectGrid, spec: &[DiskSpec]) -> Result<ComplexImage> {
    for s in spec {
        check_disk_in_support(s, &grid)?;
    }
    let mut img = ComplexImage::zeros(grid);
    let m = grid.m();
    for i1 in 0..m {
        let x = grid.coord(grid.signed_index(i1));
        for i2 in 0..m {
            let y = grid.coord(grid.signed_index(i2));
            for s in spec {
                if (x - s.center[0]).hypot(y - s.center[1]) < s.radius {
                    img.values_mut()[(i1, i2)] = s.amplitude;
                }
            }
        }
    }
    Ok(img)
}

/// Default circular medium with two inclusions.
///
/// The geometry is sized so that the angular bandwidth of its k-space data,
/// roughly k0 * (outermost support radius), stays within the standard
/// truncation level N = 12 at k0 = 2 pi: a deconvolution band that cannot
/// represent the object would dominate every quality comparison.
pub fn two_inclusion_preset(grid: ObjectGrid) -> Result<ComplexImage> {
    two_inclusion_phantom(grid, &default_inclusions())
}

pub fn default_inclusions() -> Vec<DiskSpec> {
    vec![
        DiskSpec {
            center: [0.0, 0.0],
            radius: 1.9,
            amplitude: Complex64::new(1.0, 0.0),
        },
        DiskSpec {
            center: [-0.76, 0.5],
            radius: 0.45,
            amplitude: Complex64::new(3.0, 0.0),
        },
        DiskSpec {
            center: [0.63, -0.5],
            radius: 0.32,
            amplitude: Complex64::new(0.5, 0.0),
        },
    ]
}
