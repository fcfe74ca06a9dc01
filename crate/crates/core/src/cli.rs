//! Command-line front end.
//!
//! Volumes and pyramids are addressed by file stem: `name` refers to the
//! header `name.toml` and payload `name.raw`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::gradient::{
    tv_estimate_averaged, tv_estimate_level, GradientField, GradientMode, LevelWeights,
};
use crate::haar::{forward, inverse, WaveletPyramid};
use crate::io::{self, Content, SampleType, VolumeHeader};
use crate::metrics::TvReport;
use crate::phantom::{add_noise, phantom, PhantomKind, PhantomParams};
use crate::shrink::{denoise_with_fill, ShrinkConfig, ShrinkMode};
use crate::Volume;

#[derive(Parser, Debug)]
#[command(
    name = "haartv",
    version,
    about = "Haar wavelet TV estimation and LiveTV/SparseTV denoising"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pad a volume to a dyadic cube and write its Haar pyramid.
    Decompose {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Padding value.
        #[arg(long, default_value_t = 0.0)]
        fill: f64,
    },
    /// Invert a pyramid and crop to the original extent.
    Reconstruct {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = Sample::F64)]
        sample_type: Sample,
        /// Keep the padded cube.
        #[arg(long)]
        no_crop: bool,
    },
    /// Wavelet TV estimate of a volume or pyramid.
    TvEstimate {
        #[arg(short, long)]
        input: PathBuf,
        /// Single-level estimate at this level.
        #[arg(long, conflicts_with = "window")]
        level: Option<usize>,
        #[command(flatten)]
        window: WindowArg,
    },
    /// Renormalised gradient field as CSV.
    Gradients {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Smooth)]
        mode: ModeArg,
        /// Restrict to one level (default: all levels).
        #[arg(long)]
        level: Option<usize>,
    },
    /// Shrink the gradient coefficients and reconstruct.
    Denoise {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        lambda: f64,
        #[arg(long, value_enum, default_value_t = ShrinkArg::Live)]
        mode: ShrinkArg,
        #[command(flatten)]
        window: WindowArg,
        #[arg(long, default_value_t = 0.0)]
        fill: f64,
        #[arg(long, value_enum, default_value_t = Sample::F64)]
        sample_type: Sample,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Compare a test volume against a reference.
    Metrics {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        window: WindowArg,
        #[command(flatten)]
        report: ReportArg,
    },
    /// Generate a synthetic volume.
    Phantom {
        #[arg(long)]
        kind: String,
        /// Extents in storage order, e.g. `64,64,64`.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        value: f64,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long, value_delimiter = ',')]
        center: Vec<f64>,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 0.3)]
        radius: f64,
        #[arg(long, value_delimiter = ',')]
        slope: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        axis: usize,
        #[arg(long)]
        edge: Option<usize>,
        #[arg(long, value_enum, default_value_t = Sample::F64)]
        sample_type: Sample,
    },
    /// Add seeded Gaussian noise.
    AddNoise {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write one slice as an 8-bit PGM.
    Slice {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        axis: usize,
        /// Defaults to the middle of the axis.
        #[arg(long)]
        index: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
    },
    /// Denoise over a list of lambdas and tabulate the metrics.
    Sweep {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[arg(long, value_enum, default_value_t = ShrinkArg::Live)]
        mode: ShrinkArg,
        #[command(flatten)]
        window: WindowArg,
        #[command(flatten)]
        report: ReportArg,
    },
}

#[derive(Args, Debug)]
struct WindowArg {
    /// Level window `n0 n1` (default: top four levels).
    #[arg(long, num_args = 2, value_names = ["N0", "N1"])]
    window: Option<Vec<usize>>,
}

impl WindowArg {
    fn weights(&self, levels: usize) -> Result<LevelWeights<f64>> {
        let w = match self.window.as_deref() {
            Some(&[n0, n1]) => LevelWeights::new(n0, n1)?,
            _ => LevelWeights::default_window(levels)?,
        };
        w.check_against(levels)?;
        Ok(w)
    }
}

#[derive(Args, Debug)]
struct ReportArg {
    /// Also write the report as TOML.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the TOML report instead of the table.
    #[arg(long)]
    toml: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Sample {
    U8,
    U16,
    F32,
    F64,
}

impl From<Sample> for SampleType {
    fn from(s: Sample) -> Self {
        match s {
            Sample::U8 => SampleType::U8,
            Sample::U16 => SampleType::U16,
            Sample::F32 => SampleType::F32,
            Sample::F64 => SampleType::F64,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Smooth,
    Edge,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ShrinkArg {
    Live,
    Sparse,
    Single,
}

impl From<ShrinkArg> for ShrinkMode {
    fn from(m: ShrinkArg) -> Self {
        match m {
            ShrinkArg::Live => ShrinkMode::Live,
            ShrinkArg::Sparse => ShrinkMode::Sparse,
            ShrinkArg::Single => ShrinkMode::Single,
        }
    }
}

fn load(stem: &Path) -> Result<Volume<f64>> {
    let (h, d) = io::stem_paths(stem);
    io::load_volume(&h, &d)
}

fn save(v: &Volume<f64>, stem: &Path, t: Sample) -> Result<()> {
    let (h, d) = io::stem_paths(stem);
    io::save_volume(v, &h, &d, t.into())
}

/// A pyramid read from disk, or the transform of a zero-padded volume.
fn load_pyramid_or_volume(stem: &Path) -> Result<WaveletPyramid<f64>> {
    let (h, d) = io::stem_paths(stem);
    let text = fs::read_to_string(&h).map_err(|e| Error::io(&h, e))?;
    if VolumeHeader::parse(&text, &h)?.content == Content::HaarPyramid {
        io::load_pyramid(&h, &d)
    } else {
        forward(&io::load_volume(&h, &d)?.pad_to_dyadic(0.0))
    }
}

fn emit(out: &mut impl Write, reports: &[TvReport], arg: &ReportArg) -> Result<()> {
    let stdout_err = |e| Error::io("<stdout>", e);
    if let Some(path) = &arg.report {
        match reports {
            [r] => io::write_report(r, path)?,
            _ => io::write_reports(reports, path)?,
        }
    }
    if arg.toml {
        let text = match reports {
            [r] => io::report_to_toml(r),
            _ => toml::to_string(&io::ReportSet {
                run: reports.to_vec(),
            })
            .expect("reports serialise"),
        };
        out.write_all(text.as_bytes()).map_err(stdout_err)?;
    } else {
        for (i, r) in reports.iter().enumerate() {
            if i > 0 {
                writeln!(out).map_err(stdout_err)?;
            }
            out.write_all(r.to_table().as_bytes()).map_err(stdout_err)?;
        }
    }
    Ok(())
}

fn execute(cmd: Command, out: &mut impl Write) -> Result<()> {
    let stdout_err = |e| Error::io("<stdout>", e);
    match cmd {
        Command::Decompose {
            input,
            output,
            fill,
        } => {
            let p = forward(&load(&input)?.pad_to_dyadic(fill))?;
            let (h, d) = io::stem_paths(&output);
            io::save_pyramid(&p, &h, &d)?;
            writeln!(
                out,
                "s = {}, m = {}, levels = {}",
                p.dim(),
                p.m(),
                p.levels()
            )
            .map_err(stdout_err)?;
        }
        Command::Reconstruct {
            input,
            output,
            sample_type,
            no_crop,
        } => {
            let (h, d) = io::stem_paths(&input);
            let v = inverse(&io::load_pyramid(&h, &d)?)?;
            let v = if no_crop || v.origin_extent().is_none() {
                v
            } else {
                v.crop_to_origin()?
            };
            save(&v, &output, sample_type)?;
        }
        Command::TvEstimate {
            input,
            level,
            window,
        } => {
            let p = load_pyramid_or_volume(&input)?;
            let tv = match level {
                Some(n) => {
                    writeln!(out, "level = {n}").map_err(stdout_err)?;
                    tv_estimate_level(&p, n)?
                }
                None => {
                    let w = window.weights(p.levels())?;
                    writeln!(out, "window = [{}, {}]", w.n0(), w.n1()).map_err(stdout_err)?;
                    tv_estimate_averaged(&p, &w)?
                }
            };
            writeln!(out, "tv = {tv}").map_err(stdout_err)?;
        }
        Command::Gradients {
            input,
            output,
            mode,
            level,
        } => {
            let p = load_pyramid_or_volume(&input)?;
            let mode = match mode {
                ModeArg::Smooth => GradientMode::Smooth,
                ModeArg::Edge => GradientMode::Edge,
            };
            let levels: Vec<usize> = match level {
                Some(n) => vec![n],
                None => (0..p.levels()).collect(),
            };
            let field = GradientField::extract(&p, levels, mode)?;
            io::export_gradients(&field, &output)?;
        }
        Command::Denoise {
            input,
            output,
            lambda,
            mode,
            window,
            fill,
            sample_type,
            report,
        } => {
            let (h, d) = io::stem_paths(&output);
            if report.report.as_ref().is_some_and(|r| *r == h || *r == d) {
                return Err(Error::InvalidParameter(format!(
                    "--report would overwrite the output volume {}",
                    h.display()
                )));
            }
            let v = load(&input)?;
            let levels = v.pad_to_dyadic(fill).dyadic_exponent().unwrap_or(0) as usize;
            let w = window.weights(levels)?;
            let cfg = ShrinkConfig::new(lambda, mode.into(), w.n0(), w.n1())?;
            let (u, r) = denoise_with_fill(&v, &cfg, fill)?;
            save(&u, &output, sample_type)?;
            emit(out, &[r], &report)?;
        }
        Command::Metrics {
            reference,
            test,
            window,
            report,
        } => {
            let f = load(&reference)?;
            let u = load(&test)?;
            if f.dims() != u.dims() {
                return Err(Error::VolumeMismatch {
                    a: f.dims().to_vec(),
                    b: u.dims().to_vec(),
                });
            }
            let pf = forward(&f.pad_to_dyadic(0.0))?;
            let pu = forward(&u.pad_to_dyadic(0.0))?;
            let w = window.weights(pf.levels())?;
            emit(out, &[TvReport::compare(&f, &u, &pf, &pu, &w)?], &report)?;
        }
        Command::Phantom {
            kind,
            dims,
            output,
            value,
            amplitude,
            center,
            sigma,
            radius,
            slope,
            axis,
            edge,
            sample_type,
        } => {
            let kind: PhantomKind = kind.parse()?;
            let params = PhantomParams {
                value,
                amplitude,
                center,
                sigma,
                radius,
                slope,
                axis,
                edge,
            };
            let v: Volume<f64> = phantom(kind, &dims, &params)?;
            save(&v, &output, sample_type)?;
        }
        Command::AddNoise {
            input,
            output,
            sigma,
            seed,
        } => {
            let v = add_noise(&load(&input)?, sigma, seed)?;
            save(&v, &output, Sample::F64)?;
        }
        Command::Slice {
            input,
            output,
            axis,
            index,
            gamma,
        } => {
            let v = load(&input)?;
            let index = index.unwrap_or_else(|| v.dims().get(axis).map_or(0, |d| d / 2));
            io::export_slice(&v, axis, index, &output, gamma)?;
        }
        Command::Sweep {
            input,
            lambdas,
            mode,
            window,
            report,
        } => {
            let v = load(&input)?;
            let levels = v.pad_to_dyadic(0.0).dyadic_exponent().unwrap_or(0) as usize;
            let w = window.weights(levels)?;
            let mut runs = Vec::with_capacity(lambdas.len());
            for lambda in lambdas {
                let cfg = ShrinkConfig::new(lambda, mode.into(), w.n0(), w.n1())?;
                runs.push(denoise_with_fill(&v, &cfg, 0.0)?.1);
            }
            emit(out, &runs, &report)?;
        }
    }
    Ok(())
}

/// Process exit code for an error category.
pub fn exit_code(e: &Error) -> i32 {
    match e.category() {
        "usage" => 2,
        "io" => 3,
        "format" => 4,
        _ => 5,
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code. Diagnostics go to stderr as `error[category]: ..`.
pub fn run<I, A>(args: I) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli.command, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            exit_code(&e)
        }
    }
}
