//! File formats.
//!
//! Spectrum CSV (read and written):
//!
//! ```text
//! channel,count
//! 0,12
//! 1,15.25
//! ```
//!
//! The header line is exact. Each record is `<integer>,<decimal>` where the
//! decimal is `-?digits[.digits]`; channels start at 0 and increase by one.
//! LF or CRLF line endings are accepted, LF is written. Counts are written in
//! shortest round-trip form so that reading them back is exact.
//!
//! Fit reports are single JSON documents ([`FitReportDocument`],
//! [`CompareReportDocument`], [`crate::baseline::BenchReport`]). Plot data is
//! tab separated with one header line: `channel raw smooth [truth]`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::fitter::FitResult;
use crate::spectrum::{Region, Spectrum, MIN_CHANNELS};

pub const CSV_HEADER: &str = "channel,count";

/// Version stamped into every JSON document written by this crate.
pub const REPORT_FORMAT_VERSION: u32 = 1;

fn strip_eol(line: &str) -> &str {
    line.strip_suffix('\r').unwrap_or(line)
}

fn is_decimal(s: &str) -> bool {
    let digits = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    !int.is_empty()
        && int.bytes().all(|b| b.is_ascii_digit())
        && frac.is_none_or(|f| !f.is_empty() && f.bytes().all(|b| b.is_ascii_digit()))
}

/// Parses the spectrum CSV format. Never repairs malformed input.
pub fn read_spectrum<R: BufRead>(source: R) -> Result<Spectrum, ParseError> {
    let mut counts = Vec::new();
    let mut saw_header = false;
    for (idx, line) in source.split(b'\n').enumerate() {
        let line_no = idx + 1;
        let raw = line.map_err(|_| ParseError::Encoding { line: line_no })?;
        let text = String::from_utf8(raw).map_err(|_| ParseError::Encoding { line: line_no })?;
        let text = strip_eol(&text);
        if !saw_header {
            if text != CSV_HEADER {
                return Err(ParseError::BadHeader { line: line_no });
            }
            saw_header = true;
            continue;
        }
        let malformed = |reason| ParseError::Malformed {
            line: line_no,
            text: text.to_string(),
            reason,
        };
        let (ch, count) = text
            .split_once(',')
            .ok_or_else(|| malformed("expected two comma-separated fields"))?;
        if count.contains(',') {
            return Err(malformed("expected two comma-separated fields"));
        }
        if ch.is_empty() || !ch.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed("channel must be a nonnegative integer"));
        }
        let channel: u64 = ch
            .parse()
            .map_err(|_| malformed("channel out of range"))?;
        if !is_decimal(count) {
            return Err(malformed("count must be a decimal number"));
        }
        let value: f64 = count
            .parse()
            .map_err(|_| malformed("count must be a decimal number"))?;
        if !value.is_finite() {
            return Err(malformed("count out of range"));
        }
        if value < 0.0 {
            return Err(ParseError::NegativeCount {
                line: line_no,
                value,
            });
        }
        let expected = counts.len() as u64;
        if channel != expected {
            return Err(ParseError::NonContiguous {
                line: line_no,
                expected,
                found: channel,
            });
        }
        counts.push(value);
    }
    if !saw_header {
        return Err(ParseError::BadHeader { line: 1 });
    }
    if counts.len() < MIN_CHANNELS {
        return Err(ParseError::TooFewChannels {
            found: counts.len(),
        });
    }
    Ok(Spectrum::new(counts).expect("validated while parsing"))
}

/// Reads a spectrum file, mapping failures to IO or parse errors.
pub fn read_spectrum_file(path: &std::path::Path) -> Result<Spectrum> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::io(format!("cannot open {}", path.display()), e))?;
    read_spectrum(std::io::BufReader::new(file)).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}

fn format_count(v: f64) -> String {
    // Display for f64 is the shortest string that parses back to the same value
    // and never uses exponent notation.
    format!("{v}")
}

pub fn write_spectrum<W: Write>(spectrum: &Spectrum, mut sink: W) -> std::io::Result<()> {
    let mut out = String::with_capacity(16 * spectrum.len() + 16);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (c, &v) in spectrum.counts().iter().enumerate() {
        let _ = writeln!(out, "{c},{}", format_count(v));
    }
    sink.write_all(out.as_bytes())?;
    sink.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionDoc {
    pub start: usize,
    pub end: usize,
}

impl From<Region> for RegionDoc {
    fn from(r: Region) -> Self {
        RegionDoc {
            start: r.start(),
            end: r.end(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: u32,
    pub knot_count: usize,
    pub chi_square: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingDoc {
    pub total_seconds: f64,
}

/// Summary of a smoothing run. Optional fields are omitted when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReportDocument {
    pub format_version: u32,
    pub method: String,
    pub basis_order: u32,
    pub region: RegionDoc,
    pub levels: Vec<LevelRecord>,
    pub selected_level: u32,
    pub n_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rms_vs_raw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<TimingDoc>,
}

impl FitReportDocument {
    pub fn from_fit(method: &str, region: Region, result: &FitResult) -> Self {
        FitReportDocument {
            format_version: REPORT_FORMAT_VERSION,
            method: method.to_string(),
            basis_order: result.selected_curve().basis().order().get(),
            region: region.into(),
            levels: result
                .levels
                .iter()
                .map(|l| LevelRecord {
                    level: l.level,
                    knot_count: l.knot_count,
                    chi_square: l.chi_square,
                })
                .collect(),
            selected_level: result.selected_level,
            n_points: result.n_points,
            rms_vs_raw: None,
            timing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub chi_square: f64,
}

/// Joint report for a many-knot versus least-squares comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReportDocument {
    pub format_version: u32,
    pub region: RegionDoc,
    pub level: u32,
    pub knot_count: usize,
    pub n_points: usize,
    pub many_knot: MethodSummary,
    pub bspline_lsq: MethodSummary,
    pub rms_difference: f64,
}

/// Writes any report document as pretty-printed JSON followed by a newline.
pub fn write_json<T: Serialize, W: Write>(doc: &T, mut sink: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut sink, doc)?;
    sink.write_all(b"\n")?;
    sink.flush()
}

pub fn write_fit_report<W: Write>(report: &FitReportDocument, sink: W) -> std::io::Result<()> {
    write_json(report, sink)
}

pub fn read_fit_report<R: std::io::Read>(source: R) -> serde_json::Result<FitReportDocument> {
    serde_json::from_reader(source)
}

/// Tab-separated `channel raw smooth [truth]` columns for external plotting.
pub fn write_plot_data<W: Write>(
    spectrum: &Spectrum,
    smooth: &[f64],
    truth: Option<&[f64]>,
    mut sink: W,
) -> Result<()> {
    check_columns(spectrum, smooth, truth)?;
    let mut out = String::new();
    out.push_str("channel\traw\tsmooth");
    if truth.is_some() {
        out.push_str("\ttruth");
    }
    out.push('\n');
    for (c, (&raw, &s)) in spectrum.counts().iter().zip(smooth).enumerate() {
        let _ = write!(out, "{c}\t{raw}\t{s}");
        if let Some(t) = truth {
            let _ = write!(out, "\t{}", t[c]);
        }
        out.push('\n');
    }
    sink.write_all(out.as_bytes())
        .and_then(|_| sink.flush())
        .map_err(|e| Error::io("writing plot data", e))
}

fn check_columns(spectrum: &Spectrum, smooth: &[f64], truth: Option<&[f64]>) -> Result<()> {
    if smooth.len() != spectrum.len() || truth.is_some_and(|t| t.len() != spectrum.len()) {
        return Err(Error::InvalidInput(format!(
            "plot columns must have {} rows (smooth {}, truth {:?})",
            spectrum.len(),
            smooth.len(),
            truth.map(<[f64]>::len)
        )));
    }
    Ok(())
}

/// Standalone SVG line chart of the same columns (no external assets).
pub fn write_plot_svg<W: Write>(
    spectrum: &Spectrum,
    smooth: &[f64],
    truth: Option<&[f64]>,
    mut sink: W,
) -> Result<()> {
    check_columns(spectrum, smooth, truth)?;
    const W_PX: f64 = 960.0;
    const H_PX: f64 = 480.0;
    const PAD: f64 = 40.0;
    let n = spectrum.len();
    let ymax = spectrum
        .counts()
        .iter()
        .chain(smooth)
        .chain(truth.unwrap_or(&[]))
        .fold(1.0_f64, |m, &v| if v.is_finite() { m.max(v) } else { m });
    let sx = (W_PX - 2.0 * PAD) / (n - 1) as f64;
    let sy = (H_PX - 2.0 * PAD) / ymax;
    let path = |ys: &[f64]| {
        let mut d = String::new();
        for (i, &y) in ys.iter().enumerate() {
            let px = PAD + i as f64 * sx;
            let py = H_PX - PAD - y.clamp(0.0, ymax) * sy;
            let _ = write!(d, "{}{px:.2},{py:.2}", if i == 0 { "M" } else { " L" });
        }
        d
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W_PX}" height="{H_PX}" viewBox="0 0 {W_PX} {H_PX}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r##"<path d="M{PAD},{PAD} L{PAD},{b} L{r},{b}" fill="none" stroke="#444" stroke-width="1"/>"##,
        b = H_PX - PAD,
        r = W_PX - PAD
    );
    let _ = writeln!(
        out,
        r##"<path d="{}" fill="none" stroke="#9aa" stroke-width="0.8"/>"##,
        path(spectrum.counts())
    );
    if let Some(t) = truth {
        let _ = writeln!(
            out,
            r##"<path d="{}" fill="none" stroke="#2a2" stroke-width="1" stroke-dasharray="4 3"/>"##,
            path(t)
        );
    }
    let _ = writeln!(
        out,
        r##"<path d="{}" fill="none" stroke="#c22" stroke-width="1.4"/>"##,
        path(smooth)
    );
    let _ = writeln!(
        out,
        r##"<text x="{PAD}" y="24" font-family="sans-serif" font-size="13">raw (grey), smooth (red){}; y max {ymax:.1}</text>"##,
        if truth.is_some() { ", truth (green)" } else { "" }
    );
    out.push_str("</svg>\n");
    sink.write_all(out.as_bytes())
        .and_then(|_| sink.flush())
        .map_err(|e| Error::io("writing SVG plot", e))
}
