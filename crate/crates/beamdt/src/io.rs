//! Deterministic binary grid/measurement formats and plot-ready CSV.
//!
//! Binary layouts (all little-endian):
//!
//! `BDTG` (complex grid): magic "BDTG", version byte 0x01, u32 M, f64 r_s,
//! then M*M (re, im) f64 pairs, row-major j1-slow / j2-fast with index
//! offset +M/2.
//!
//! `BDTM` (measurements): magic "BDTM", version byte 0x01, u32 M, u32 D,
//! f64 k0, f64 r_M, f64 eps_k, then (re, im) f64 pairs over the clamped
//! k-grid (slow) and the rotation grid (fast). The row count is derived
//! from (M, eps_k), so the lattice is self-describing.
//!
//! Both formats round-trip bit-exactly.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::beam::BeamProfile;
use crate::error::{Error, Result};
use crate::forward::{FdtReport, MeasurementLattice, MeasurementSet};
use crate::inversion::PicardTable;
use crate::metrics::MetricReport;
use crate::phantom::{ComplexImage, ObjectGrid};

const GRID_MAGIC: &[u8; 4] = b"BDTG";
const MEAS_MAGIC: &[u8; 4] = b"BDTM";
const VERSION: u8 = 0x01;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("unexpected end of file".into()));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn done(&self) -> bool {
        self.pos == self.buf.len()
    }
}

pub fn write_grid(path: &Path, img: &ComplexImage) -> Result<()> {
    let m = img.grid().m();
    let mut out = Vec::with_capacity(17 + 16 * m * m);
    out.extend_from_slice(GRID_MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(m as u32).to_le_bytes());
    out.extend_from_slice(&img.grid().r_s().to_le_bytes());
    for v in img.values().iter() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    atomic_write(path, &out)
}

pub fn read_grid(path: &Path) -> Result<ComplexImage> {
    let buf = fs::read(path)?;
    let mut r = Reader::new(&buf);
    if r.take(4)? != GRID_MAGIC {
        return Err(Error::Format(format!(
            "{} is not a BDTG grid file",
            path.display()
        )));
    }
    if r.take(1)?[0] != VERSION {
        return Err(Error::Format("unsupported BDTG version".into()));
    }
    let m = r.u32()? as usize;
    let r_s = r.f64()?;
    let grid = ObjectGrid::new(m, r_s)?;
    let mut values = Array2::from_elem((m, m), Complex64::new(0.0, 0.0));
    for i1 in 0..m {
        for i2 in 0..m {
            let re = r.f64()?;
            let im = r.f64()?;
            values[(i1, i2)] = Complex64::new(re, im);
        }
    }
    if !r.done() {
        return Err(Error::Format("trailing bytes in BDTG file".into()));
    }
    ComplexImage::from_values(grid, values)
}

pub fn write_measurements(path: &Path, ms: &MeasurementSet) -> Result<()> {
    let lat = ms.lattice;
    let mut out = Vec::with_capacity(37 + 16 * ms.values.len());
    out.extend_from_slice(MEAS_MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(lat.m as u32).to_le_bytes());
    out.extend_from_slice(&(lat.d as u32).to_le_bytes());
    out.extend_from_slice(&lat.k0.to_le_bytes());
    out.extend_from_slice(&lat.r_m.to_le_bytes());
    out.extend_from_slice(&lat.eps_k.to_le_bytes());
    for v in ms.values.iter() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    atomic_write(path, &out)
}

pub fn read_measurements(path: &Path) -> Result<MeasurementSet> {
    let buf = fs::read(path)?;
    let mut r = Reader::new(&buf);
    if r.take(4)? != MEAS_MAGIC {
        return Err(Error::Format(format!(
            "{} is not a BDTM measurement file",
            path.display()
        )));
    }
    if r.take(1)?[0] != VERSION {
        return Err(Error::Format("unsupported BDTM version".into()));
    }
    let m = r.u32()? as usize;
    let d = r.u32()? as usize;
    let k0 = r.f64()?;
    let r_m = r.f64()?;
    let eps_k = r.f64()?;
    let lattice = MeasurementLattice::new(m, d, k0, r_m, eps_k)?;
    let num_k = lattice.num_k();
    let mut values = Array2::from_elem((num_k, d), Complex64::new(0.0, 0.0));
    for i in 0..num_k {
        for t in 0..d {
            let re = r.f64()?;
            let im = r.f64()?;
            values[(i, t)] = Complex64::new(re, im);
        }
    }
    if !r.done() {
        return Err(Error::Format("trailing bytes in BDTM file".into()));
    }
    MeasurementSet::new(lattice, values)
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    f.flush()?;
    Ok(())
}

/// Acquisition sidecar written next to a BDTM file so downstream commands
/// can warn about beam-model mismatches; the binary format itself stays
/// fixed and carries no beam identity.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimulationMeta {
    pub beam: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub a: Option<f64>,
    pub noise_percent: f64,
    pub seed: u64,
    pub angular_oversample: usize,
}

pub fn sidecar_path(meas_path: &Path) -> std::path::PathBuf {
    let mut s = meas_path.as_os_str().to_owned();
    s.push(".json");
    std::path::PathBuf::from(s)
}

pub fn write_sidecar(meas_path: &Path, meta: &SimulationMeta) -> Result<()> {
    let text = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Format(format!("sidecar serialization failed: {e}")))?;
    atomic_write(&sidecar_path(meas_path), text.as_bytes())
}

pub fn read_sidecar(meas_path: &Path) -> Option<SimulationMeta> {
    let text = fs::read_to_string(sidecar_path(meas_path)).ok()?;
    serde_json::from_str(&text).ok()
}

/// Loads a tabulated beam profile from CSV rows `phi,re,im`. Angles must be
/// exactly the uniform grid starting at -pi with spacing 2 pi / D, strictly
/// increasing, D even.
pub fn read_beam_csv(path: &Path) -> Result<BeamProfile> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if lineno == 0 && line.starts_with("phi") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Format(format!(
                "beam CSV line {} must be `phi,re,im`",
                lineno + 1
            )));
        }
        let phi: f64 = parts[0]
            .parse()
            .map_err(|_| Error::Format(format!("bad angle on line {}", lineno + 1)))?;
        let re: f64 = parts[1]
            .parse()
            .map_err(|_| Error::Format(format!("bad real part on line {}", lineno + 1)))?;
        let im: f64 = parts[2]
            .parse()
            .map_err(|_| Error::Format(format!("bad imaginary part on line {}", lineno + 1)))?;
        rows.push((phi, Complex64::new(re, im)));
    }
    let d = rows.len();
    if d < 2 || d % 2 != 0 {
        return Err(Error::Format(format!(
            "beam CSV needs an even number of rows >= 2, got {d}"
        )));
    }
    let spacing = TAU / d as f64;
    for (t, (phi, _)) in rows.iter().enumerate() {
        let expect = -PI + t as f64 * spacing;
        if (phi - expect).abs() > 1e-9 {
            return Err(Error::Format(format!(
                "beam CSV angles must be the uniform grid starting at -pi \
                 with spacing 2pi/D; row {} has {} (expected {})",
                t + 1,
                phi,
                expect
            )));
        }
    }
    BeamProfile::tabulated(rows.into_iter().map(|(_, v)| v).collect())
}

pub fn write_beam_csv(path: &Path, samples: &[Complex64]) -> Result<()> {
    let d = samples.len();
    let mut text = String::from("phi,re,im\n");
    for (t, v) in samples.iter().enumerate() {
        let phi = -PI + t as f64 * TAU / d as f64;
        text.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", phi, v.re, v.im));
    }
    atomic_write(path, text.as_bytes())
}

pub fn write_picard_csv(path: &Path, table: &PicardTable) -> Result<()> {
    let mut text = String::from("n,abs_a,abs_m,abs_ratio\n");
    for row in &table.rows {
        text.push_str(&format!(
            "{},{:.17e},{:.17e},{}\n",
            row.n,
            row.abs_a,
            row.abs_m,
            if row.abs_ratio.is_finite() {
                format!("{:.17e}", row.abs_ratio)
            } else {
                "inf".to_string()
            }
        ));
    }
    atomic_write(path, text.as_bytes())
}

/// Line-field CSV `r1,re,im` for forward-model plots.
pub fn write_line_csv(path: &Path, r1: &[f64], values: &[Complex64]) -> Result<()> {
    let mut text = String::from("r1,re,im\n");
    for (x, v) in r1.iter().zip(values) {
        text.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", x, v.re, v.im));
    }
    atomic_write(path, text.as_bytes())
}

pub fn write_fdt_csv(path: &Path, report: &FdtReport) -> Result<()> {
    let mut text = String::from("k,line_re,line_im,predicted_re,predicted_im\n");
    for ((k, l), p) in report
        .k_values
        .iter()
        .zip(&report.line_transform)
        .zip(&report.predicted)
    {
        text.push_str(&format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            k, l.re, l.im, p.re, p.im
        ));
    }
    atomic_write(path, text.as_bytes())
}

pub fn format_metrics_csv(report: &MetricReport) -> String {
    format!(
        "psnr,rmse,ssim\n{:.12},{:.12e},{:.12}\n",
        report.psnr, report.rmse, report.ssim
    )
}

pub fn write_metrics_csv(path: &Path, report: &MetricReport) -> Result<()> {
    atomic_write(path, format_metrics_csv(report).as_bytes())
}
