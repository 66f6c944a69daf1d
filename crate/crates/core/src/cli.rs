//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 IO failure,
//! 4 input parse error, 5 numeric failure (rank deficiency, singular basis).
//! Every output is staged in a temporary file next to its destination and
//! renamed into place only after the whole command has succeeded.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tempfile::NamedTempFile;

use crate::baseline::{bench_compare, lsq_fit, BenchReport};
use crate::basis::{BSplineOrder, ManyKnotBasis};
use crate::error::{Error, Result};
use crate::fitter::{fit_with, smooth_level, FitOptions, FitResult, KnotGrid};
use crate::io::{
    read_spectrum_file, write_fit_report, write_json, write_plot_data, write_plot_svg,
    write_spectrum, CompareReportDocument, FitReportDocument, MethodSummary, TimingDoc,
    REPORT_FORMAT_VERSION,
};
use crate::spectrum::{Region, Spectrum};
use crate::synth::{synthesize, truth_curve, PeakSpec, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "manyknot", version, about = "Many-knot spline smoothing for spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic noisy spectrum.
    Generate(GenerateArgs),
    /// Smooth a spectrum with the many-knot method or the B-spline baseline.
    Smooth(SmoothArgs),
    /// Run both methods on the same grid and report their difference.
    Compare(CompareArgs),
    /// Time single-level many-knot construction against the least-squares baseline.
    Bench(BenchArgs),
}

/// `start:end`, inclusive channel indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionArg {
    pub start: usize,
    pub end: usize,
}

impl FromStr for RegionArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected start:end, got {s:?}"))?;
        let start = a.parse().map_err(|_| format!("bad region start {a:?}"))?;
        let end = b.parse().map_err(|_| format!("bad region end {b:?}"))?;
        Ok(RegionArg { start, end })
    }
}

/// `center:amplitude:width`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakArg(pub PeakSpec);

impl FromStr for PeakArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected center:amplitude:width, got {s:?}"));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|_| format!("bad number {p:?} in peak {s:?}")))
            .collect::<std::result::Result<_, _>>()?;
        PeakSpec::new(nums[0], nums[1], nums[2])
            .map(PeakArg)
            .map_err(|e| e.to_string())
    }
}

/// Level list: `a..b` (inclusive) or `a,b,c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelsArg(pub Vec<u32>);

impl FromStr for LevelsArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = |p: &str| format!("bad level {p:?} in {s:?}");
        let levels: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
            let a: u32 = a.parse().map_err(|_| bad(a))?;
            let b: u32 = b.parse().map_err(|_| bad(b))?;
            if b < a {
                return Err(format!("empty level range {s:?}"));
            }
            (a..=b).collect()
        } else {
            s.split(',')
                .map(|p| p.trim().parse().map_err(|_| bad(p)))
                .collect::<std::result::Result<_, _>>()?
        };
        if levels.is_empty() || levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(format!("levels must be strictly increasing: {s:?}"));
        }
        Ok(LevelsArg(levels))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    ManyKnot,
    BsplineLsq,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::ManyKnot => "many-knot",
            Method::BsplineLsq => "bspline-lsq",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Noise seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of channels.
    #[arg(long, default_value_t = SynthConfig::DEFAULT_CHANNELS)]
    pub channels: usize,
    /// Flat baseline in counts.
    #[arg(long, default_value_t = SynthConfig::DEFAULT_BASELINE)]
    pub baseline: f64,
    /// Gaussian peak as center:amplitude:width; repeatable. Replaces the default peaks.
    #[arg(long = "peaks", value_name = "C:A:W")]
    pub peaks: Vec<PeakArg>,
}

impl SynthArgs {
    fn config(&self, seed: u64) -> Result<SynthConfig> {
        let peaks = if self.peaks.is_empty() {
            SynthConfig::default_peaks()
        } else {
            self.peaks.iter().map(|p| p.0).collect()
        };
        let config = SynthConfig {
            n_channels: self.channels,
            baseline: self.baseline,
            peaks,
            seed,
        };
        config.validate().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Output spectrum CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the noiseless curve as CSV.
    #[arg(long)]
    pub truth_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BasisArgs {
    /// B-spline degree of the many-knot basis (1, 2 or 3).
    #[arg(long)]
    pub order: Option<u32>,
    /// Comma-separated shifts a_0..a_{k-1}; required for order 3.
    #[arg(long, value_delimiter = ',')]
    pub shifts: Option<Vec<f64>>,
}

impl BasisArgs {
    fn given(&self) -> bool {
        self.order.is_some() || self.shifts.is_some()
    }

    fn basis(&self) -> Result<ManyKnotBasis> {
        let order = BSplineOrder::new(self.order.unwrap_or(2))?;
        let shifts = match (&self.shifts, order.get()) {
            (Some(s), _) => s.clone(),
            (None, 1) => vec![0.0],
            (None, 2) => vec![0.0, 0.5],
            (None, k) => {
                return Err(Error::Usage(format!("order {k} requires --shifts")));
            }
        };
        ManyKnotBasis::from_shifts(order, shifts)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SmoothArgs {
    /// Input spectrum CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Smoothed spectrum CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Fit report (JSON).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Region start:end (inclusive); defaults to the whole spectrum.
    #[arg(long)]
    pub region: Option<RegionArg>,
    #[arg(long, value_enum, default_value_t = Method::ManyKnot)]
    pub method: Method,
    /// Single grid level; required for bspline-lsq.
    #[arg(long)]
    pub level: Option<u32>,
    #[command(flatten)]
    pub basis: BasisArgs,
    /// Stop refining at the first level meeting the criterion.
    #[arg(long)]
    pub early_stop: bool,
    /// Tab-separated plot data.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// SVG line chart.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Noiseless spectrum CSV to include in plot output.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Input spectrum CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Per-channel curves of both methods (TSV).
    #[arg(long)]
    pub out: PathBuf,
    /// Joint report (JSON).
    #[arg(long)]
    pub report: PathBuf,
    /// Region start:end (inclusive); defaults to the whole spectrum.
    #[arg(long)]
    pub region: Option<RegionArg>,
    /// Grid level; defaults to the many-knot selection, limited to one knot per channel.
    #[arg(long)]
    pub level: Option<u32>,
    #[command(flatten)]
    pub basis: BasisArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Input spectrum CSV; otherwise a spectrum is synthesized from the synth flags.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub synth: SynthArgs,
    /// Region start:end (inclusive); defaults to the whole spectrum.
    #[arg(long)]
    pub region: Option<RegionArg>,
    /// Levels as a..b (inclusive) or a,b,c.
    #[arg(long, default_value = "0..6")]
    pub levels: LevelsArg,
    /// Timed runs per level; the median is reported (at least 3).
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[command(flatten)]
    pub basis: BasisArgs,
    /// Bench report (JSON).
    #[arg(long)]
    pub out: PathBuf,
    /// knot_count, mks_time, lsq_time table for plotting.
    #[arg(long)]
    pub tsv: Option<PathBuf>,
}

/// Outputs written to temporary siblings and renamed together on commit.
#[derive(Default)]
struct Staged {
    files: Vec<(PathBuf, NamedTempFile)>,
}

impl Staged {
    fn add<F>(&mut self, path: &Path, write: F) -> Result<()>
    where
        F: FnOnce(&mut dyn Write) -> Result<()>,
    {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = NamedTempFile::new_in(dir)
            .map_err(|e| Error::io(format!("cannot create output in {}", dir.display()), e))?;
        {
            let mut w = std::io::BufWriter::new(tmp.as_file_mut());
            write(&mut w)?;
            w.flush()
                .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        }
        self.files.push((path.to_path_buf(), tmp));
        Ok(())
    }

    fn commit(self) -> Result<()> {
        for (path, tmp) in self.files {
            tmp.persist(&path)
                .map_err(|e| Error::io(format!("cannot write {}", path.display()), e.error))?;
        }
        Ok(())
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::io(format!("writing {}", path.display()), e)
}

fn resolve_region(arg: Option<RegionArg>, spectrum: &Spectrum) -> Result<Region> {
    match arg {
        Some(r) => Region::within(r.start, r.end, spectrum),
        None => Ok(Region::full(spectrum)),
    }
}

fn precheck_region(arg: Option<RegionArg>) -> Result<()> {
    if let Some(r) = arg {
        Region::new(r.start, r.end)?;
    }
    Ok(())
}

/// Full-length spectrum carrying `region_values` inside the region and the raw
/// counts elsewhere. Negative lobes of the curve are clamped to zero.
fn splice(spectrum: &Spectrum, region: Region, region_values: &[f64]) -> Result<Spectrum> {
    let mut counts = spectrum.counts().to_vec();
    for (c, &v) in region.channels().zip(region_values) {
        counts[c] = v.max(0.0);
    }
    Spectrum::new(counts)
}

fn full_length(spectrum: &Spectrum, region: Region, region_values: &[f64]) -> Vec<f64> {
    let mut out = spectrum.counts().to_vec();
    out[region.start()..=region.end()].copy_from_slice(region_values);
    out
}

fn rms(a: &[f64], b: &[f64]) -> f64 {
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (ss / a.len() as f64).sqrt()
}

pub fn run_generate(args: &GenerateArgs) -> Result<()> {
    let seed = args
        .synth
        .seed
        .ok_or_else(|| Error::Usage("generate requires --seed".into()))?;
    let config = args.synth.config(seed)?;
    let noisy = synthesize(&config)?;
    let mut staged = Staged::default();
    staged.add(&args.out, |w| write_spectrum(&noisy, w).map_err(io_err(&args.out)))?;
    if let Some(path) = &args.truth_out {
        let truth = truth_curve(&config)?;
        staged.add(path, |w| write_spectrum(&truth, w).map_err(io_err(path)))?;
    }
    staged.commit()
}

fn single_level_result(
    spectrum: &Spectrum,
    region: Region,
    basis: &ManyKnotBasis,
    level: u32,
) -> Result<FitResult> {
    let grid = KnotGrid::at_level(region, level)?;
    let fit = smooth_level(spectrum, &grid, region, basis)?;
    Ok(FitResult {
        levels: vec![fit],
        selected_level: level,
        n_points: region.n_points(),
        criterion_threshold: region.n_points() as f64,
    })
}

pub fn run_smooth(args: &SmoothArgs) -> Result<()> {
    precheck_region(args.region)?;
    if args.method == Method::BsplineLsq {
        if args.level.is_none() {
            return Err(Error::Usage("--method bspline-lsq requires --level".into()));
        }
        if args.basis.given() || args.early_stop {
            return Err(Error::Usage(
                "--order, --shifts and --early-stop apply only to --method many-knot".into(),
            ));
        }
    }
    if args.level.is_some() && args.early_stop {
        return Err(Error::Usage("--early-stop conflicts with --level".into()));
    }
    let basis = match args.method {
        Method::ManyKnot => Some(args.basis.basis()?),
        Method::BsplineLsq => None,
    };

    let spectrum = read_spectrum_file(&args.input)?;
    let truth = args.truth.as_deref().map(read_spectrum_file).transpose()?;
    if let Some(t) = &truth {
        if t.len() != spectrum.len() {
            return Err(Error::Usage(format!(
                "truth has {} channels, spectrum has {}",
                t.len(),
                spectrum.len()
            )));
        }
    }
    let region = resolve_region(args.region, &spectrum)?;

    let t0 = Instant::now();
    let (report, curve) = match (args.method, basis) {
        (Method::ManyKnot, Some(basis)) => {
            let result = match args.level {
                Some(level) => single_level_result(&spectrum, region, &basis, level)?,
                None => fit_with(
                    &spectrum,
                    region,
                    &basis,
                    FitOptions {
                        early_stop: args.early_stop,
                    },
                )?,
            };
            let curve = result.selected_curve().sample_channels();
            (FitReportDocument::from_fit(args.method.name(), region, &result), curve)
        }
        _ => {
            let level = args.level.expect("checked above");
            let grid = KnotGrid::at_level(region, level)?;
            let fit = lsq_fit(&spectrum, &grid, region)?;
            let curve = fit.sample_channels();
            let doc = FitReportDocument {
                format_version: REPORT_FORMAT_VERSION,
                method: args.method.name().into(),
                basis_order: BSplineOrder::CUBIC.get(),
                region: region.into(),
                levels: vec![crate::io::LevelRecord {
                    level,
                    knot_count: grid.len(),
                    chi_square: fit.residual_chi_square,
                }],
                selected_level: level,
                n_points: region.n_points(),
                rms_vs_raw: None,
                timing: None,
            };
            (doc, curve)
        }
    };
    let elapsed = t0.elapsed().as_secs_f64();
    let raw = &spectrum.counts()[region.start()..=region.end()];
    let report = FitReportDocument {
        rms_vs_raw: Some(rms(&curve, raw)),
        timing: Some(TimingDoc {
            total_seconds: elapsed,
        }),
        ..report
    };

    let smoothed = splice(&spectrum, region, &curve)?;
    let plot_smooth = full_length(&spectrum, region, &curve);
    let truth_counts = truth.as_ref().map(|t| t.counts());

    let mut staged = Staged::default();
    staged.add(&args.out, |w| write_spectrum(&smoothed, w).map_err(io_err(&args.out)))?;
    if let Some(path) = &args.report {
        staged.add(path, |w| write_fit_report(&report, w).map_err(io_err(path)))?;
    }
    if let Some(path) = &args.plot {
        staged.add(path, |w| write_plot_data(&spectrum, &plot_smooth, truth_counts, w))?;
    }
    if let Some(path) = &args.svg {
        staged.add(path, |w| write_plot_svg(&spectrum, &plot_smooth, truth_counts, w))?;
    }
    staged.commit()
}

/// Finest level not above `level` whose spacing is at least one channel.
fn cap_to_channel_resolution(region: Region, level: u32) -> u32 {
    (0..=level)
        .rev()
        .find(|&l| region.width() / (4u64 << l) as f64 >= 1.0)
        .unwrap_or(0)
}

pub fn run_compare(args: &CompareArgs) -> Result<()> {
    precheck_region(args.region)?;
    let basis = args.basis.basis()?;
    let spectrum = read_spectrum_file(&args.input)?;
    let region = resolve_region(args.region, &spectrum)?;

    let level = match args.level {
        Some(l) => l,
        None => {
            let selected = fit_with(&spectrum, region, &basis, FitOptions::default())?.selected_level;
            cap_to_channel_resolution(region, selected)
        }
    };
    let grid = KnotGrid::at_level(region, level)?;
    let mks = smooth_level(&spectrum, &grid, region, &basis)?;
    let lsq = lsq_fit(&spectrum, &grid, region)?;
    let mks_curve = mks.curve.sample_channels();
    let lsq_curve = lsq.sample_channels();

    let doc = CompareReportDocument {
        format_version: REPORT_FORMAT_VERSION,
        region: region.into(),
        level,
        knot_count: grid.len(),
        n_points: region.n_points(),
        many_knot: MethodSummary {
            method: Method::ManyKnot.name().into(),
            chi_square: mks.chi_square,
        },
        bspline_lsq: MethodSummary {
            method: Method::BsplineLsq.name().into(),
            chi_square: lsq.residual_chi_square,
        },
        rms_difference: rms(&mks_curve, &lsq_curve),
    };

    let mut staged = Staged::default();
    staged.add(&args.out, |w| {
        let mut text = String::from("channel\traw\tmany_knot\tbspline_lsq\n");
        for (i, c) in region.channels().enumerate() {
            text.push_str(&format!(
                "{c}\t{}\t{}\t{}\n",
                spectrum.count(c),
                mks_curve[i],
                lsq_curve[i]
            ));
        }
        w.write_all(text.as_bytes()).map_err(io_err(&args.out))
    })?;
    staged.add(&args.report, |w| write_json(&doc, w).map_err(io_err(&args.report)))?;
    staged.commit()
}

pub fn run_bench(args: &BenchArgs) -> Result<()> {
    if args.repeats < crate::baseline::MIN_REPEATS {
        return Err(Error::Usage(format!(
            "--repeats must be at least {}, got {}",
            crate::baseline::MIN_REPEATS,
            args.repeats
        )));
    }
    precheck_region(args.region)?;
    let basis = args.basis.basis()?;
    let spectrum = match &args.input {
        Some(path) => read_spectrum_file(path)?,
        None => {
            let seed = args
                .synth
                .seed
                .ok_or_else(|| Error::Usage("bench requires --in or --seed".into()))?;
            synthesize(&args.synth.config(seed)?)?
        }
    };
    let region = resolve_region(args.region, &spectrum)?;
    let report: BenchReport = bench_compare(&spectrum, region, &args.levels.0, args.repeats, &basis)?;

    let mut staged = Staged::default();
    staged.add(&args.out, |w| write_json(&report, w).map_err(io_err(&args.out)))?;
    if let Some(path) = &args.tsv {
        staged.add(path, |w| {
            let mut text = String::from("knot_count\tmks_time\tlsq_time\n");
            for e in &report.entries {
                let fmt = |t: Option<f64>| t.map_or_else(|| "NA".to_string(), |v| v.to_string());
                text.push_str(&format!(
                    "{}\t{}\t{}\n",
                    e.knot_count,
                    fmt(e.mks_time_seconds),
                    fmt(e.lsq_time_seconds)
                ));
            }
            w.write_all(text.as_bytes()).map_err(io_err(path))
        })?;
    }
    staged.commit()
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => run_generate(a),
        Command::Smooth(a) => run_smooth(a),
        Command::Compare(a) => run_compare(a),
        Command::Bench(a) => run_bench(a),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_grammars() {
        assert_eq!("0:1023".parse::<RegionArg>().unwrap(), RegionArg { start: 0, end: 1023 });
        assert!("0-10".parse::<RegionArg>().is_err());
        let p: PeakArg = "100:50:5".parse().unwrap();
        assert_eq!(p.0.center(), 100.0);
        assert!("100:0:5".parse::<PeakArg>().is_err());
        assert!("100:5".parse::<PeakArg>().is_err());
        assert_eq!("0..4".parse::<LevelsArg>().unwrap().0, vec![0, 1, 2, 3, 4]);
        assert_eq!("1,3,5".parse::<LevelsArg>().unwrap().0, vec![1, 3, 5]);
        assert!("3,1".parse::<LevelsArg>().is_err());
        assert!("4..2".parse::<LevelsArg>().is_err());
    }

    #[test]
    fn channel_resolution_cap() {
        let r = Region::new(0, 1023).unwrap();
        assert_eq!(cap_to_channel_resolution(r, 8), 7);
        assert_eq!(cap_to_channel_resolution(r, 3), 3);
        let r = Region::new(0, 1024).unwrap();
        assert_eq!(cap_to_channel_resolution(r, 8), 8);
    }
}
