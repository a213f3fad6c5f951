//! Command-line front end: argument types and the command implementations.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::path::PathBuf;

use crate::beam::BeamProfile;
use crate::error::{Error, Result};
use crate::forward::{
    add_noise, born_field_direct, fdt_check, simulate_measurements, SimulateConfig,
};
use crate::inversion::{picard_table, reconstruct, reconstruct_conventional, TsvdConfig};
use crate::io;
use crate::kspace::WaveContext;
use crate::metrics;
use crate::phantom::{disk_phantom, two_inclusion_phantom, ComplexImage, DiskSpec, ObjectGrid};

#[derive(Parser, Debug)]
#[command(
    name = "beamdt",
    about = "Diffraction tomography with arbitrary beam illumination",
    version
)]
pub struct Cli {
    /// Worker thread cap (also read from BEAMDT_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a test phantom as a BDTG grid file.
    Phantom(PhantomArgs),
    /// Simulate rotation measurements of a phantom and write a BDTM file.
    Simulate(SimulateArgs),
    /// Reconstruct a BDTG image from a BDTM measurement file.
    Reconstruct(ReconstructArgs),
    /// Emit the Picard diagnostic table for one detector frequency.
    Picard(PicardArgs),
    /// Numerically verify the diffraction relation on a small disk phantom.
    FdtCheck(FdtArgs),
    /// Sample the direct Born field on a measurement line (CSV).
    ForwardDirect(ForwardDirectArgs),
    /// Compare a reconstruction against a ground-truth grid.
    Compare(CompareArgs),
    /// Render the incident field of a beam onto a grid (BDTG).
    Beamview(BeamviewArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum BeamChoice {
    Gaussian,
    Planewave,
    Table,
}

#[derive(Args, Debug, Clone)]
pub struct BeamArgs {
    /// Illumination model.
    #[arg(long, value_enum, default_value = "gaussian")]
    pub beam: BeamChoice,
    /// Gaussian profile parameter A (larger = narrower profile, wider waist).
    #[arg(long = "A", default_value_t = 10.0)]
    pub a: f64,
    /// CSV file `phi,re,im` for tabulated profiles.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

impl BeamArgs {
    /// Builds the profile; `quad_d` is the angular quadrature the profile
    /// will be sampled on (the plane-wave stand-in is tied to it).
    pub fn build(&self, quad_d: usize) -> Result<BeamProfile> {
        match self.beam {
            BeamChoice::Gaussian => BeamProfile::gaussian(self.a),
            BeamChoice::Planewave => BeamProfile::plane_wave(quad_d),
            BeamChoice::Table => {
                let path = self.table.as_ref().ok_or_else(|| {
                    Error::InvalidArgument("--beam table needs --table <csv>".into())
                })?;
                io::read_beam_csv(path)
            }
        }
    }

    fn describe(&self) -> (String, Option<f64>) {
        match self.beam {
            BeamChoice::Gaussian => ("gaussian".into(), Some(self.a)),
            BeamChoice::Planewave => ("planewave".into(), None),
            BeamChoice::Table => ("table".into(), None),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum PhantomPreset {
    Disk,
    TwoInclusion,
}

#[derive(Args, Debug)]
pub struct PhantomArgs {
    #[arg(long, value_enum, default_value = "two-inclusion")]
    pub preset: PhantomPreset,
    /// Disk radius for the disk preset.
    #[arg(long, default_value_t = 3.0)]
    pub d: f64,
    /// Disk amplitude (real part) for the disk preset.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Disk amplitude (imaginary part).
    #[arg(long, default_value_t = 0.0)]
    pub amplitude_im: f64,
    /// Samples per axis.
    #[arg(long = "M", default_value_t = 400)]
    pub m: usize,
    /// Support half-width.
    #[arg(long = "rs", default_value_t = 4.0)]
    pub r_s: f64,
    /// Custom disk list CSV `cx,cy,radius,re,im` overriding the preset.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

fn build_phantom(args: &PhantomArgs, m: usize) -> Result<ComplexImage> {
    let grid = ObjectGrid::new(m, args.r_s)?;
    if let Some(spec) = &args.spec {
        let disks = read_disk_spec(spec)?;
        return two_inclusion_phantom(grid, &disks);
    }
    match args.preset {
        PhantomPreset::Disk => disk_phantom(
            grid,
            args.d,
            Complex64::new(args.amplitude, args.amplitude_im),
        ),
        PhantomPreset::TwoInclusion => crate::phantom::two_inclusion_preset(grid),
    }
}

fn read_disk_spec(path: &PathBuf) -> Result<Vec<DiskSpec>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("cx") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 5 {
            return Err(Error::Format(format!(
                "disk spec line {} must be `cx,cy,radius,re,im`",
                lineno + 1
            )));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad number on line {}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        out.push(DiskSpec {
            center: [nums[0], nums[1]],
            radius: nums[2],
            amplitude: Complex64::new(nums[3], nums[4]),
        });
    }
    Ok(out)
}

fn cmd_phantom(args: PhantomArgs) -> Result<()> {
    let img = build_phantom(&args, args.m)?;
    io::write_grid(&args.out, &img)?;
    let nonzero = img
        .values()
        .iter()
        .filter(|v| **v != Complex64::new(0.0, 0.0))
        .count();
    println!(
        "wrote {}: M={}, r_s={}, nonzero pixels={}",
        args.out.display(),
        args.m,
        args.r_s,
        nonzero
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Phantom grid file; alternatively use --preset to generate one
    /// internally on an oversampled grid.
    #[arg(long, conflicts_with = "preset")]
    pub phantom: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<PhantomPreset>,
    /// Disk radius for `--preset disk`.
    #[arg(long, default_value_t = 3.0)]
    pub d: f64,
    /// Disk amplitude for `--preset disk`.
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    /// Support half-width for `--preset`.
    #[arg(long = "rs", default_value_t = 4.0)]
    pub r_s: f64,
    #[command(flatten)]
    pub beam: BeamArgs,
    /// Detector frequencies per axis of the measurement lattice.
    #[arg(long = "M", default_value_t = 400)]
    pub m: usize,
    /// Rotation / plane-wave angles.
    #[arg(long = "D", default_value_t = 200)]
    pub big_d: usize,
    /// Angular wavenumber (default 2 pi, wavelength 1).
    #[arg(long, default_value_t = TAU)]
    pub k0: f64,
    /// Measurement line offset.
    #[arg(long = "rM", default_value_t = 5.0)]
    pub r_m: f64,
    /// Relative clamp keeping |k| <= (1 - eps) k0.
    #[arg(long, default_value_t = 1e-3)]
    pub eps_k: f64,
    /// Internal oversampling: the plane-wave quadrature runs on
    /// oversample * D angles, and `--preset` phantoms are generated at
    /// oversample * M, so reconstruction never reuses the forward grids.
    #[arg(long, default_value_t = 2)]
    pub oversample: usize,
    /// Relative Gaussian noise in percent.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, short)]
    pub out: PathBuf,
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let ctx = WaveContext::new(args.k0)?;
    let img = match (&args.phantom, args.preset) {
        (Some(path), _) => io::read_grid(path)?,
        (None, Some(preset)) => {
            let phantom_args = PhantomArgs {
                preset,
                d: args.d,
                amplitude: args.amplitude,
                amplitude_im: 0.0,
                m: args.m * args.oversample.max(1),
                r_s: args.r_s,
                spec: None,
                out: PathBuf::new(),
            };
            build_phantom(&phantom_args, phantom_args.m)?
        }
        (None, None) => {
            return Err(Error::InvalidArgument(
                "simulate needs --phantom <file> or --preset <name>".into(),
            ))
        }
    };
    let beam = args.beam.build(args.big_d * args.oversample.max(1))?;
    let cfg = SimulateConfig::new(args.m, args.big_d, args.r_m)
        .with_eps_k(args.eps_k)
        .with_oversample(args.oversample.max(1));
    let ms = simulate_measurements(&img, &beam, &ctx, cfg)?;
    let ms = add_noise(&ms, args.noise, args.seed)?;
    io::write_measurements(&args.out, &ms)?;
    let (beam_name, a) = args.beam.describe();
    io::write_sidecar(
        &args.out,
        &io::SimulationMeta {
            beam: beam_name,
            a,
            noise_percent: args.noise,
            seed: args.seed,
            angular_oversample: args.oversample.max(1),
        },
    )?;
    println!(
        "wrote {}: {} k-rows x {} rotations, k0={}, rM={}, noise={}%",
        args.out.display(),
        ms.lattice.num_k(),
        ms.lattice.d,
        ms.lattice.k0,
        ms.lattice.r_m,
        args.noise
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    #[arg(long)]
    pub meas: PathBuf,
    #[command(flatten)]
    pub beam: BeamArgs,
    /// TSVD truncation level.
    #[arg(long = "N", default_value_t = 12)]
    pub n: usize,
    /// Absolute floor on |a_n| below which indices are dropped.
    #[arg(long, default_value_t = 1e-12)]
    pub min_singular: f64,
    /// Output grid size (defaults to the lattice M).
    #[arg(long = "M-out")]
    pub m_out: Option<usize>,
    /// Output support half-width.
    #[arg(long = "rs", default_value_t = 4.0)]
    pub r_s: f64,
    /// Skip the TSVD step and backpropagate the angular data directly,
    /// treating the beam as a plane wave (conventional reconstruction).
    #[arg(long)]
    pub conventional: bool,
    /// Ground-truth BDTG; when given, metrics are printed.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

fn cmd_reconstruct(args: ReconstructArgs) -> Result<()> {
    let ms = io::read_measurements(&args.meas)?;
    let beam = args.beam.build(ms.lattice.d)?;
    if let Some(meta) = io::read_sidecar(&args.meas) {
        let (beam_name, a) = args.beam.describe();
        let a_mismatch = match (meta.a, a) {
            (Some(x), Some(y)) => (x - y).abs() > 1e-12,
            (None, None) => false,
            _ => true,
        };
        if meta.beam != beam_name || a_mismatch {
            eprintln!(
                "warning: metadata mismatch: measurements were simulated with \
                 beam={} A={:?}, reconstructing with beam={} A={:?}",
                meta.beam, meta.a, beam_name, a
            );
        }
    }
    let grid = ObjectGrid::new(args.m_out.unwrap_or(ms.lattice.m), args.r_s)?;
    let rec = if args.conventional {
        reconstruct_conventional(&ms, &beam, &grid)?
    } else {
        let cfg = TsvdConfig::new(args.n).with_min_singular(args.min_singular);
        reconstruct(&ms, &beam, &cfg, &grid)?
    };
    io::write_grid(&args.out, &rec)?;
    println!(
        "wrote {}: M={}, r_s={}{}",
        args.out.display(),
        grid.m(),
        grid.r_s(),
        if args.conventional {
            " (conventional)"
        } else {
            ""
        }
    );
    if let Some(truth_path) = &args.truth {
        let truth = io::read_grid(truth_path)?;
        let report = metrics::report(&truth, &rec)?;
        print!("{}", io::format_metrics_csv(&report));
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct PicardArgs {
    #[arg(long)]
    pub meas: PathBuf,
    #[command(flatten)]
    pub beam: BeamArgs,
    /// Detector frequency; snapped to the nearest lattice value.
    #[arg(long, default_value_t = 0.0)]
    pub k: f64,
    /// Table half-width N.
    #[arg(long = "N", default_value_t = 20)]
    pub n: usize,
    #[arg(long, short)]
    pub out: PathBuf,
}

fn cmd_picard(args: PicardArgs) -> Result<()> {
    let ms = io::read_measurements(&args.meas)?;
    let beam = args.beam.build(ms.lattice.d)?;
    let coeffs = crate::beam::angular_coefficients(&beam, args.n, ms.lattice.d)?;
    let k_values = ms.lattice.k_values();
    let k_index = k_values
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (*a - args.k)
                .abs()
                .partial_cmp(&(*b - args.k).abs())
                .unwrap()
        })
        .map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidGrid("empty k-grid".into()))?;
    let table = picard_table(&ms, &coeffs, k_index, args.n)?;
    io::write_picard_csv(&args.out, &table)?;
    println!(
        "wrote {}: k={} (index {}), N={}",
        args.out.display(),
        table.k,
        k_index,
        args.n
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct FdtArgs {
    /// Disk phantom radius.
    #[arg(long, default_value_t = 1.0)]
    pub d: f64,
    /// Disk amplitude.
    #[arg(long, default_value_t = 0.05)]
    pub amplitude: f64,
    /// Phantom grid size.
    #[arg(long = "M", default_value_t = 256)]
    pub m: usize,
    /// Support half-width.
    #[arg(long = "rs", default_value_t = 4.0)]
    pub r_s: f64,
    #[command(flatten)]
    pub beam: BeamArgs,
    #[arg(long, default_value_t = TAU)]
    pub k0: f64,
    #[arg(long = "rM", default_value_t = 5.0)]
    pub r_m: f64,
    /// Half-length of the sampled measurement line.
    #[arg(long, default_value_t = 40.0)]
    pub line_extent: f64,
    /// Line sample count.
    #[arg(long = "L", default_value_t = 2048)]
    pub l: usize,
    /// Angular quadrature for the incident field and the k-space side.
    #[arg(long, default_value_t = 512)]
    pub quad_d: usize,
    /// Optional CSV of both sides over the k-grid.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn cmd_fdt_check(args: FdtArgs) -> Result<()> {
    let ctx = WaveContext::new(args.k0)?;
    let grid = ObjectGrid::new(args.m, args.r_s)?;
    let img = disk_phantom(grid, args.d, Complex64::new(args.amplitude, 0.0))?;
    let beam = args.beam.build(args.quad_d)?;
    let report = fdt_check(
        &img,
        &beam,
        &ctx,
        args.r_m,
        args.line_extent,
        args.l,
        args.quad_d,
    )?;
    if report.truncation_warning {
        eprintln!(
            "warning: line extent {} is below 4 r_s = {}; the truncated tail \
             corrupts the line transform",
            args.line_extent,
            4.0 * args.r_s
        );
    }
    if let Some(out) = &args.out {
        io::write_fdt_csv(out, &report)?;
        println!("wrote {}", out.display());
    }
    println!(
        "relative L2 discrepancy over |k| <= 0.8 k0: {:.6}",
        report.rel_l2_discrepancy
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct ForwardDirectArgs {
    #[arg(long, conflicts_with = "preset")]
    pub phantom: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "disk")]
    pub preset: PhantomPreset,
    #[arg(long, default_value_t = 3.0)]
    pub d: f64,
    #[arg(long, default_value_t = 1.0)]
    pub amplitude: f64,
    #[arg(long = "M", default_value_t = 256)]
    pub m: usize,
    #[arg(long = "rs", default_value_t = 4.0)]
    pub r_s: f64,
    #[command(flatten)]
    pub beam: BeamArgs,
    #[arg(long, default_value_t = TAU)]
    pub k0: f64,
    /// r2 offset of the sampled line (negative = transmission side).
    #[arg(long, default_value_t = -6.0, allow_hyphen_values = true)]
    pub line_offset: f64,
    /// Half-length of the sampled line.
    #[arg(long, default_value_t = 8.0)]
    pub extent: f64,
    /// Line sample count.
    #[arg(long = "L", default_value_t = 512)]
    pub l: usize,
    #[arg(long, default_value_t = 512)]
    pub quad_d: usize,
    #[arg(long, short)]
    pub out: PathBuf,
}

fn cmd_forward_direct(args: ForwardDirectArgs) -> Result<()> {
    let ctx = WaveContext::new(args.k0)?;
    let img = match &args.phantom {
        Some(path) => io::read_grid(path)?,
        None => {
            let grid = ObjectGrid::new(args.m, args.r_s)?;
            match args.preset {
                PhantomPreset::Disk => {
                    disk_phantom(grid, args.d, Complex64::new(args.amplitude, 0.0))?
                }
                PhantomPreset::TwoInclusion => crate::phantom::two_inclusion_preset(grid)?,
            }
        }
    };
    if args.line_offset.abs() <= img.grid().r_s() {
        return Err(Error::InvalidArgument(format!(
            "line offset {} intersects the object support (r_s = {})",
            args.line_offset,
            img.grid().r_s()
        )));
    }
    let beam = args.beam.build(args.quad_d)?;
    let r1: Vec<f64> = (0..args.l)
        .map(|i| -args.extent + 2.0 * args.extent * i as f64 / (args.l.max(2) - 1) as f64)
        .collect();
    let pts: Vec<[f64; 2]> = r1.iter().map(|&x| [x, args.line_offset]).collect();
    let field = born_field_direct(&img, &beam, &pts, &ctx, args.quad_d)?;
    io::write_line_csv(&args.out, &r1, &field)?;
    println!(
        "wrote {}: {} samples on r2 = {}",
        args.out.display(),
        args.l,
        args.line_offset
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub recon: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let truth = io::read_grid(&args.truth)?;
    let recon = io::read_grid(&args.recon)?;
    let report = metrics::report(&truth, &recon)?;
    if let Some(out) = &args.out {
        io::write_metrics_csv(out, &report)?;
    }
    print!("{}", io::format_metrics_csv(&report));
    Ok(())
}

#[derive(Args, Debug)]
pub struct BeamviewArgs {
    #[command(flatten)]
    pub beam: BeamArgs,
    #[arg(long = "M", default_value_t = 256)]
    pub m: usize,
    #[arg(long = "rs", default_value_t = 8.0)]
    pub r_s: f64,
    #[arg(long, default_value_t = TAU)]
    pub k0: f64,
    #[arg(long, default_value_t = 720)]
    pub quad_d: usize,
    #[arg(long, short)]
    pub out: PathBuf,
}

fn cmd_beamview(args: BeamviewArgs) -> Result<()> {
    let ctx = WaveContext::new(args.k0)?;
    let grid = ObjectGrid::new(args.m, args.r_s)?;
    let beam = args.beam.build(args.quad_d)?;
    let m = grid.m();
    let mut points = Vec::with_capacity(m * m);
    for i1 in 0..m {
        for i2 in 0..m {
            points.push([
                grid.coord(grid.signed_index(i1)),
                grid.coord(grid.signed_index(i2)),
            ]);
        }
    }
    let field = crate::beam::incident_field_batch(&beam, &points, &ctx, args.quad_d)?;
    let values = ndarray::Array2::from_shape_vec((m, m), field).expect("sized above");
    let img = ComplexImage::from_values(grid, values)?;
    io::write_grid(&args.out, &img)?;
    println!("wrote {}: M={}, r_s={}", args.out.display(), m, grid.r_s());
    Ok(())
}

/// Installs the global worker pool from --threads / BEAMDT_THREADS.
pub fn init_threads(threads: Option<usize>) {
    let n = threads.or_else(|| {
        std::env::var("BEAMDT_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    init_threads(cli.threads);
    match cli.command {
        Command::Phantom(a) => cmd_phantom(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Reconstruct(a) => cmd_reconstruct(a),
        Command::Picard(a) => cmd_picard(a),
        Command::FdtCheck(a) => cmd_fdt_check(a),
        Command::ForwardDirect(a) => cmd_forward_direct(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Beamview(a) => cmd_beamview(a),
    }
}
