//! Cubic B-spline least-squares smoothing on a fixed knot grid, and the
//! timing harness that compares it with many-knot construction.
//!
//! The least-squares fit forms the dense normal equations `AᵀA c = Aᵀy` and
//! factors them with an in-crate Cholesky decomposition. The design matrix is
//! banded (each channel touches four cubic B-splines), and a banded solver
//! would be far cheaper; the dense route is kept deliberately so the baseline
//! shows the cost of solving a full system as the knot count grows.

use std::hint::black_box;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::basis::{bspline_eval, BSplineOrder, ManyKnotBasis};
use crate::error::{Error, Result};
use crate::fitter::{count_sigma, smooth_level, KnotGrid};
use crate::spectrum::{Region, Spectrum};

/// Relative pivot threshold below which the normal matrix is treated as singular.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `Aᵀ v`.
    pub fn transpose_mul(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &vr) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += a * vr;
            }
        }
        out
    }

    /// `A x`.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `AᵀA`, computed densely.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let ai = row[i];
                let gi = &mut g.data[i * n..(i + 1) * n];
                for j in i..n {
                    gi[j] += ai * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g.data[i * n + j] = g.data[j * n + i];
            }
        }
        g
    }
}

/// In-place Cholesky factorization `G = LLᵀ`; `None` when a pivot collapses.
fn cholesky(mut g: DenseMatrix) -> Option<DenseMatrix> {
    let n = g.rows;
    let max_diag = (0..n).map(|i| g.get(i, i)).fold(0.0_f64, f64::max);
    if max_diag <= 0.0 {
        return None;
    }
    for j in 0..n {
        let mut d = g.get(j, j);
        for k in 0..j {
            let l = g.get(j, k);
            d -= l * l;
        }
        if d <= PIVOT_TOLERANCE * max_diag {
            return None;
        }
        let d = d.sqrt();
        g.set(j, j, d);
        for i in j + 1..n {
            let mut s = g.get(i, j);
            for k in 0..j {
                s -= g.get(i, k) * g.get(j, k);
            }
            g.set(i, j, s / d);
        }
    }
    Some(g)
}

fn cholesky_solve(l: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l.get(i, k) * y[k]).sum();
        y[i] = (b[i] - s) / l.get(i, i);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l.get(k, i) * x[k]).sum();
        x[i] = (y[i] - s) / l.get(i, i);
    }
    x
}

/// Centers of the cubic B-spline columns: the grid plus one extra knot on each side.
pub fn column_centers(grid: &KnotGrid) -> Vec<f64> {
    let h = grid.spacing();
    let mut centers = Vec::with_capacity(grid.len() + 2);
    centers.push(grid.start() - h);
    centers.extend_from_slice(grid.positions());
    centers.push(grid.end() + h);
    centers
}

/// Cubic B-spline design matrix: one row per region channel, one column per
/// extended knot, entry `Ω_3((c − center)/h)`.
///
/// A knot two spacings outside the region already evaluates to 0 at the edge
/// channel, so one extra knot per side completes the partition of unity.
pub fn design_matrix(spectrum: &Spectrum, grid: &KnotGrid, region: Region) -> DenseMatrix {
    debug_assert!(region.end() < spectrum.len());
    let centers = column_centers(grid);
    let h = grid.spacing();
    let mut a = DenseMatrix::zeros(region.n_points(), centers.len());
    for (r, c) in region.channels().enumerate() {
        let x = c as f64;
        for (j, &center) in centers.iter().enumerate() {
            a.set(r, j, bspline_eval(BSplineOrder::CUBIC, (x - center) / h));
        }
    }
    a
}

/// Result of a cubic B-spline least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LsqFit {
    pub grid: KnotGrid,
    pub region: Region,
    /// One coefficient per column of the design matrix (grid length + 2).
    pub coefficients: Vec<f64>,
    /// `Σ ((y − s)/σ)²` with the same σ model as the many-knot fitter.
    pub residual_chi_square: f64,
    /// Unweighted `Σ (y − s)²`, the quantity the fit minimizes.
    pub residual_sum_squares: f64,
}

impl LsqFit {
    pub fn eval(&self, x: f64) -> f64 {
        let h = self.grid.spacing();
        let start = self.grid.start() - h;
        self.coefficients
            .iter()
            .enumerate()
            .map(|(j, &c)| c * bspline_eval(BSplineOrder::CUBIC, (x - (start + j as f64 * h)) / h))
            .sum()
    }

    pub fn sample_channels(&self) -> Vec<f64> {
        self.region.channels().map(|c| self.eval(c as f64)).collect()
    }
}

/// Unweighted least-squares fit of cubic B-splines on `grid`.
pub fn lsq_fit(spectrum: &Spectrum, grid: &KnotGrid, region: Region) -> Result<LsqFit> {
    region.check_within(spectrum)?;
    let columns = grid.len() + 2;
    let rows = region.n_points();
    if rows < columns {
        return Err(Error::RankDeficient { rows, columns });
    }
    let a = design_matrix(spectrum, grid, region);
    let y = &spectrum.counts()[region.start()..=region.end()];
    let rhs = a.transpose_mul(y);
    let l = cholesky(a.gram()).ok_or(Error::RankDeficient { rows, columns })?;
    let coefficients = cholesky_solve(&l, &rhs);
    let fitted = a.mul(&coefficients);
    let (mut chi2, mut sse) = (0.0, 0.0);
    for (&yi, &si) in y.iter().zip(&fitted) {
        let r = yi - si;
        sse += r * r;
        let w = r / count_sigma(yi);
        chi2 += w * w;
    }
    Ok(LsqFit {
        grid: grid.clone(),
        region,
        coefficients,
        residual_chi_square: chi2,
        residual_sum_squares: sse,
    })
}

/// One benchmarked grid level. Measurement fields are absent when the entry failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub level: u32,
    pub knot_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mks_time_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsq_time_seconds: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mks_chi2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsq_chi2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mks_sse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lsq_sse: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl BenchEntry {
    fn failed(level: u32, knot_count: usize, err: &Error) -> Self {
        BenchEntry {
            level,
            knot_count,
            mks_time_seconds: None,
            lsq_time_seconds: None,
            mks_chi2: None,
            lsq_chi2: None,
            mks_sse: None,
            lsq_sse: None,
            failure: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub n_channels: usize,
    pub region_start: usize,
    pub region_end: usize,
    pub repeats: usize,
    pub entries: Vec<BenchEntry>,
    pub environment: String,
}

impl BenchReport {
    /// `(knot_count, seconds)` pairs for the many-knot column.
    pub fn mks_points(&self) -> Vec<(f64, f64)> {
        self.entries
            .iter()
            .filter_map(|e| Some((e.knot_count as f64, e.mks_time_seconds?)))
            .collect()
    }

    /// `(knot_count, seconds)` pairs for the least-squares column.
    pub fn lsq_points(&self) -> Vec<(f64, f64)> {
        self.entries
            .iter()
            .filter_map(|e| Some((e.knot_count as f64, e.lsq_time_seconds?)))
            .collect()
    }
}

fn environment_note() -> String {
    format!(
        "baseline: fixed-knot cubic B-spline linear least squares on the same grids, \
         dense normal equations with Cholesky (not free-knot nonlinear least squares); \
         many-knot timing covers knot averages, curve construction and chi-square evaluated \
         at every channel; median wall-clock over repeats, single thread; \
         target {}-{}, {} build",
        std::env::consts::ARCH,
        std::env::consts::OS,
        if cfg!(debug_assertions) { "debug" } else { "optimized" }
    )
}

fn median(mut samples: Vec<Duration>) -> Duration {
    samples.sort_unstable();
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2
    }
}

fn time_median<T, F>(repeats: usize, mut work: F) -> Result<(Duration, T)>
where
    F: FnMut() -> Result<T>,
{
    let mut samples = Vec::with_capacity(repeats);
    let mut last = None;
    for _ in 0..repeats {
        let t0 = Instant::now();
        let out = black_box(work()?);
        samples.push(t0.elapsed());
        last = Some(out);
    }
    Ok((median(samples), last.expect("repeats >= 1")))
}

pub const MIN_REPEATS: usize = 3;

/// Times single-level many-knot smoothing against [`lsq_fit`] on the same grid
/// for each level, sequentially on the calling thread.
pub fn bench_compare(
    spectrum: &Spectrum,
    region: Region,
    levels: &[u32],
    repeats: usize,
    basis: &ManyKnotBasis,
) -> Result<BenchReport> {
    if repeats < MIN_REPEATS {
        return Err(Error::Usage(format!(
            "at least {MIN_REPEATS} repeats are required, got {repeats}"
        )));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Usage("bench levels must be strictly increasing".into()));
    }
    region.check_within(spectrum)?;
    let mut entries = Vec::with_capacity(levels.len());
    for &level in levels {
        let knot_count = (4usize << level.min(crate::fitter::MAX_LEVEL)) + 1;
        let grid = match KnotGrid::at_level(region, level) {
            Ok(g) => g,
            Err(e) => {
                entries.push(BenchEntry::failed(level, knot_count, &e));
                continue;
            }
        };
        let mks = time_median(repeats, || smooth_level(spectrum, &grid, region, basis));
        let (mks_time, mks_fit) = match mks {
            Ok(v) => v,
            Err(e) => {
                entries.push(BenchEntry::failed(level, knot_count, &e));
                continue;
            }
        };
        let mks_sse: f64 = region
            .channels()
            .map(|c| {
                let r = spectrum.count(c) - mks_fit.curve.eval(c as f64);
                r * r
            })
            .sum();
        let mut entry = BenchEntry {
            level,
            knot_count,
            mks_time_seconds: Some(mks_time.as_secs_f64()),
            lsq_time_seconds: None,
            mks_chi2: Some(mks_fit.chi_square),
            lsq_chi2: None,
            mks_sse: Some(mks_sse),
            lsq_sse: None,
            failure: None,
        };
        match time_median(repeats, || lsq_fit(spectrum, &grid, region)) {
            Ok((t, fit)) => {
                entry.lsq_time_seconds = Some(t.as_secs_f64());
                entry.lsq_chi2 = Some(fit.residual_chi_square);
                entry.lsq_sse = Some(fit.residual_sum_squares);
            }
            Err(e) => entry.failure = Some(format!("bspline-lsq: {e}")),
        }
        entries.push(entry);
    }
    Ok(BenchReport {
        n_channels: spectrum.len(),
        region_start: region.start(),
        region_end: region.end(),
        repeats,
        entries,
        environment: environment_note(),
    })
}

/// Least-squares slope of `ln(time)` against `ln(knots)`, ignoring points
/// faster than `min_seconds`. `None` with fewer than two usable points.
pub fn loglog_slope(points: &[(f64, f64)], min_seconds: f64) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(k, t)| *t >= min_seconds && *k > 0.0 && *t > 0.0)
        .map(|(k, t)| (k.ln(), t.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(counts: Vec<f64>) -> Spectrum {
        Spectrum::new(counts).unwrap()
    }

    #[test]
    fn design_matrix_properties() {
        let s = spectrum(vec![1.0; 65]);
        let r = Region::full(&s);
        let g = KnotGrid::at_level(r, 2).unwrap(); // h = 4
        let a = design_matrix(&s, &g, r);
        assert_eq!(a.rows(), 65);
        assert_eq!(a.cols(), g.len() + 2);
        for i in 0..a.rows() {
            let sum: f64 = a.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-10, "row {i}: {sum}");
        }
        // Channel 8 sits on grid knot 2, which is column 3.
        assert_eq!(a.get(8, 3), 2.0 / 3.0);
        // Column 0 is centered at -4 with support (-12, 4); channel 4 is outside.
        assert_eq!(a.get(4, 0), 0.0);
        assert_eq!(a.get(30, 3), 0.0);
    }

    #[test]
    fn recovers_exact_spline_data() {
        let n = 81;
        let r = Region::new(0, n - 1).unwrap();
        let g = KnotGrid::at_level(r, 1).unwrap();
        let coeffs: Vec<f64> = (0..g.len() + 2).map(|j| 10.0 + (j as f64 * 1.7).sin() * 5.0).collect();
        let probe = LsqFit {
            grid: g.clone(),
            region: r,
            coefficients: coeffs.clone(),
            residual_chi_square: 0.0,
            residual_sum_squares: 0.0,
        };
        let s = spectrum(probe.sample_channels());
        let fit = lsq_fit(&s, &g, r).unwrap();
        for c in 0..n {
            assert!((fit.eval(c as f64) - s.count(c)).abs() < 1e-6);
        }
        for (a, b) in fit.coefficients.iter().zip(&coeffs) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_data_gives_constant_curve() {
        let s = spectrum(vec![42.0; 200]);
        let r = Region::full(&s);
        for level in 0..4 {
            let g = KnotGrid::at_level(r, level).unwrap();
            let fit = lsq_fit(&s, &g, r).unwrap();
            for i in 0..=1990 {
                let x = i as f64 * 0.1;
                assert!((fit.eval(x) - 42.0).abs() < 1e-8, "level {level} x {x}");
            }
            assert!(fit.residual_chi_square < 1e-12);
        }
    }

    #[test]
    fn too_many_knots_is_rank_deficient() {
        let s = spectrum(vec![3.0; 9]);
        let r = Region::full(&s);
        let g = KnotGrid::at_level(r, 3).unwrap();
        assert_eq!(g.len(), 33);
        assert!(matches!(lsq_fit(&s, &g, r), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn residuals_orthogonal_to_columns() {
        let counts: Vec<f64> = (0..300)
            .map(|i| 50.0 + 30.0 * ((i as f64) / 17.0).sin() + ((i * 7919) % 13) as f64)
            .collect();
        let s = spectrum(counts);
        let r = Region::new(10, 290).unwrap();
        let g = KnotGrid::at_level(r, 3).unwrap();
        let fit = lsq_fit(&s, &g, r).unwrap();
        let a = design_matrix(&s, &g, r);
        let resid: Vec<f64> = r
            .channels()
            .map(|c| s.count(c) - fit.eval(c as f64))
            .collect();
        for v in a.transpose_mul(&resid) {
            assert!(v.abs() < 1e-6, "{v}");
        }
    }

    #[test]
    fn bench_requires_three_repeats() {
        let s = spectrum(vec![5.0; 64]);
        let r = Region::full(&s);
        let err = bench_compare(&s, r, &[0], 2, &ManyKnotBasis::quadric());
        assert!(matches!(err, Err(Error::Usage(_))));
    }

    #[test]
    fn bench_constant_spectrum() {
        let s = spectrum(vec![5.0; 64]);
        let r = Region::full(&s);
        let rep = bench_compare(&s, r, &[0], 3, &ManyKnotBasis::quadric()).unwrap();
        assert_eq!(rep.entries.len(), 1);
        let e = &rep.entries[0];
        assert_eq!(e.knot_count, 5);
        assert!(e.mks_chi2.unwrap() < 1e-20);
        assert!(e.lsq_chi2.unwrap() < 1e-12);
        assert!(e.mks_time_seconds.unwrap() > 0.0 && e.lsq_time_seconds.unwrap() > 0.0);
    }

    #[test]
    fn bench_marks_rank_deficient_entry() {
        let s = spectrum(vec![5.0; 16]);
        let r = Region::full(&s);
        let rep = bench_compare(&s, r, &[0, 3], 3, &ManyKnotBasis::quadric()).unwrap();
        assert!(rep.entries[0].failure.is_none());
        assert!(rep.entries[1].failure.is_some());
        assert!(rep.entries[1].mks_time_seconds.is_some());
        assert!(rep.entries[1].lsq_time_seconds.is_none());
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = (1..8).map(|i| (i as f64 * 10.0, 3e-3 * (i as f64).powf(1.5))).collect();
        assert!((loglog_slope(&pts, 0.0).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts, 1.0), None);
        let with_fast = [(5.0, 1e-6), (10.0, 1e-3), (20.0, 2e-3)];
        assert!((loglog_slope(&with_fast, 1e-4).unwrap() - 1.0).abs() < 1e-12);
    }
}
