//! Multiresolution many-knot smoothing.
//!
//! Five equally spaced knots are laid over the region and each knot takes the
//! mean count of the channels around it. Summing the cardinal basis scaled by
//! those means gives a curve that passes through every knot value. The grid is
//! then refined by inserting midpoints until the spacing reaches one channel,
//! and the Reinsch criterion picks one curve out of the resulting set: the
//! coarsest level whose chi-square does not exceed the number of channels.

use crate::basis::ManyKnotBasis;
use crate::error::{Error, Result};
use crate::spectrum::{Region, Spectrum};

/// Slack applied to averaging-window edges to absorb rounding in knot positions.
const WINDOW_SLACK: f64 = 1e-9;

/// Deepest level a grid may be built at directly.
pub const MAX_LEVEL: u32 = 24;

/// Equally spaced knots over a region at one refinement level.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotGrid {
    level: u32,
    spacing: f64,
    positions: Vec<f64>,
}

impl KnotGrid {
    /// Level-0 grid: five knots from region start to region end.
    pub fn initial(region: Region) -> Self {
        Self::at_level(region, 0).expect("level 0 is always constructible")
    }

    /// Grid with `4·2^level + 1` knots spanning the region, without the
    /// spacing limit that [`KnotGrid::refine`] enforces.
    pub fn at_level(region: Region, level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::InvalidInput(format!(
                "grid level {level} exceeds the maximum of {MAX_LEVEL}"
            )));
        }
        let intervals = 4usize << level;
        let spacing = region.width() / intervals as f64;
        let start = region.start() as f64;
        let mut positions: Vec<f64> = (0..=intervals)
            .map(|j| start + j as f64 * spacing)
            .collect();
        positions[intervals] = region.end() as f64;
        Ok(KnotGrid {
            level,
            spacing,
            positions,
        })
    }

    /// Inserts a knot at the middle of every interval.
    ///
    /// Refinement is refused once the spacing is at most one channel. A
    /// refinement from a spacing in (1, 2) is still performed; it yields the
    /// terminal level with spacing in (0.5, 1).
    pub fn refine(&self) -> Result<Self> {
        if self.spacing <= 1.0 {
            return Err(Error::CannotRefine {
                spacing: self.spacing,
            });
        }
        let mut positions = Vec::with_capacity(2 * self.positions.len() - 1);
        for w in self.positions.windows(2) {
            positions.push(w[0]);
            positions.push(0.5 * (w[0] + w[1]));
        }
        positions.push(*self.positions.last().expect("grid is nonempty"));
        Ok(KnotGrid {
            level: self.level + 1,
            spacing: self.spacing / 2.0,
            positions,
        })
    }

    pub fn can_refine(&self) -> bool {
        self.spacing > 1.0
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.positions[0]
    }

    pub fn end(&self) -> f64 {
        self.positions[self.positions.len() - 1]
    }

    fn matches(&self, region: Region) -> bool {
        self.start() == region.start() as f64 && self.end() == region.end() as f64
    }
}

/// Free-function form of [`KnotGrid::initial`].
pub fn initial_grid(region: Region) -> KnotGrid {
    KnotGrid::initial(region)
}

/// Free-function form of [`KnotGrid::refine`].
pub fn refine_grid(grid: &KnotGrid) -> Result<KnotGrid> {
    grid.refine()
}

/// Mean count over the region channels `c` with `|c - position| <= spacing/2`.
///
/// When no channel falls in the window (spacing below one channel) the
/// nearest channel is used.
pub fn window_mean(counts: &[f64], region: Region, position: f64, spacing: f64) -> f64 {
    let half = 0.5 * spacing;
    let lo = (position - half - WINDOW_SLACK).ceil().max(region.start() as f64);
    let hi = (position + half + WINDOW_SLACK).floor().min(region.end() as f64);
    if lo > hi {
        let nearest = position
            .round()
            .clamp(region.start() as f64, region.end() as f64) as usize;
        return counts[nearest];
    }
    let (lo, hi) = (lo as usize, hi as usize);
    counts[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
}

/// Knot values for `grid`: the windowed mean count around each knot.
pub fn knot_averages(spectrum: &Spectrum, grid: &KnotGrid, region: Region) -> Vec<f64> {
    grid.positions()
        .iter()
        .map(|&p| window_mean(spectrum.counts(), region, p, grid.spacing()))
        .collect()
}

/// A curve `s(x) = Σ_j v_j · q((x − p_j)/h)` over a knot grid.
///
/// Beyond each region edge the sum carries ghost knots at the same spacing
/// whose values repeat the nearest edge knot, so constants are reproduced up
/// to the region boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothCurve {
    grid: KnotGrid,
    knot_values: Vec<f64>,
    basis: ManyKnotBasis,
    region: Region,
    ghosts: usize,
}

impl SmoothCurve {
    pub fn grid(&self) -> &KnotGrid {
        &self.grid
    }

    pub fn knot_values(&self) -> &[f64] {
        &self.knot_values
    }

    pub fn basis(&self) -> &ManyKnotBasis {
        &self.basis
    }

    pub fn region(&self) -> Region {
        self.region
    }

    /// Number of ghost knots on each side of the region.
    pub fn ghosts_per_side(&self) -> usize {
        self.ghosts
    }

    /// All knots including ghosts, as `(position, value)` pairs in order.
    pub fn extended_knots(&self) -> Vec<(f64, f64)> {
        let h = self.grid.spacing();
        let (start, end) = (self.grid.start(), self.grid.end());
        let first = self.knot_values[0];
        let last = *self.knot_values.last().expect("curve has knots");
        let mut out = Vec::with_capacity(self.knot_values.len() + 2 * self.ghosts);
        out.extend((1..=self.ghosts).rev().map(|g| (start - g as f64 * h, first)));
        out.extend(
            self.grid
                .positions()
                .iter()
                .copied()
                .zip(self.knot_values.iter().copied()),
        );
        out.extend((1..=self.ghosts).map(|g| (end + g as f64 * h, last)));
        out
    }

    /// Evaluates the curve at `x` (channel units).
    pub fn eval(&self, x: f64) -> f64 {
        let h = self.grid.spacing();
        let (start, end) = (self.grid.start(), self.grid.end());
        let first = self.knot_values[0];
        let last = self.knot_values[self.knot_values.len() - 1];
        let mut sum = 0.0;
        for g in 1..=self.ghosts {
            let g = g as f64;
            sum += first * self.basis.eval((x - (start - g * h)) / h);
            sum += last * self.basis.eval((x - (end + g * h)) / h);
        }
        for (&p, &v) in self.grid.positions().iter().zip(&self.knot_values) {
            // The basis returns 0 immediately outside its support.
            sum += v * self.basis.eval((x - p) / h);
        }
        sum
    }

    /// The curve sampled at every channel of its region.
    pub fn sample_channels(&self) -> Vec<f64> {
        self.region.channels().map(|c| self.eval(c as f64)).collect()
    }
}

/// Assembles the curve for `values` on `grid`; no system is solved.
pub fn construct_curve(
    grid: &KnotGrid,
    values: Vec<f64>,
    basis: &ManyKnotBasis,
    region: Region,
) -> Result<SmoothCurve> {
    if values.len() != grid.len() {
        return Err(Error::InvalidInput(format!(
            "{} knot values for a grid of {} knots",
            values.len(),
            grid.len()
        )));
    }
    if !grid.matches(region) {
        return Err(Error::InvalidInput(format!(
            "grid spans [{}, {}] but region is {}:{}",
            grid.start(),
            grid.end(),
            region.start(),
            region.end()
        )));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite knot value {v}")));
    }
    let ghosts = (basis.support().half_width().ceil() as usize).max(2);
    Ok(SmoothCurve {
        grid: grid.clone(),
        knot_values: values,
        basis: basis.clone(),
        region,
        ghosts,
    })
}

/// Poisson standard deviation of an observed count, floored at one count.
pub fn count_sigma(observed: f64) -> f64 {
    observed.max(1.0).sqrt()
}

/// `Σ ((y_i − m_i)/σ_i)²` with `σ_i = sqrt(max(y_i, 1))`.
pub fn chi_square_terms(observed: &[f64], model: &[f64]) -> f64 {
    assert_eq!(observed.len(), model.len(), "observed/model length mismatch");
    observed
        .iter()
        .zip(model)
        .map(|(&y, &m)| {
            let r = (y - m) / count_sigma(y);
            r * r
        })
        .sum()
}

/// Weighted residual sum of `curve` against the spectrum over `region`.
pub fn chi_square(spectrum: &Spectrum, curve: &SmoothCurve, region: Region) -> f64 {
    region
        .channels()
        .map(|c| {
            let y = spectrum.count(c);
            let r = (y - curve.eval(c as f64)) / count_sigma(y);
            r * r
        })
        .sum()
}

/// One refinement level of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelFit {
    pub level: u32,
    pub knot_count: usize,
    pub chi_square: f64,
    pub curve: SmoothCurve,
}

/// Averages, curve and chi-square for a single grid.
pub fn smooth_level(
    spectrum: &Spectrum,
    grid: &KnotGrid,
    region: Region,
    basis: &ManyKnotBasis,
) -> Result<LevelFit> {
    let values = knot_averages(spectrum, grid, region);
    let curve = construct_curve(grid, values, basis, region)?;
    let chi_square = chi_square(spectrum, &curve, region);
    Ok(LevelFit {
        level: grid.level(),
        knot_count: grid.len(),
        chi_square,
        curve,
    })
}

/// Reinsch selection over `(level, chi_square)` records ordered from coarse
/// to fine: the coarsest level with `chi_square <= threshold`, otherwise the
/// finest. `None` only for an empty record.
pub fn select_level<I>(records: I, threshold: f64) -> Option<u32>
where
    I: IntoIterator<Item = (u32, f64)>,
{
    let mut finest = None;
    for (level, chi2) in records {
        if chi2 <= threshold {
            return Some(level);
        }
        finest = Some(level);
    }
    finest
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitOptions {
    /// Stop refining at the first level meeting the criterion.
    pub early_stop: bool,
}

/// Every computed level plus the Reinsch choice among them.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub levels: Vec<LevelFit>,
    pub selected_level: u32,
    pub n_points: usize,
    pub criterion_threshold: f64,
}

impl FitResult {
    pub fn selected(&self) -> &LevelFit {
        self.levels
            .iter()
            .find(|l| l.level == self.selected_level)
            .expect("selected level is recorded")
    }

    pub fn selected_curve(&self) -> &SmoothCurve {
        &self.selected().curve
    }

    /// Re-applies the selection rule to the recorded chi-square values.
    pub fn reselect(&self) -> Option<u32> {
        select_level(
            self.levels.iter().map(|l| (l.level, l.chi_square)),
            self.criterion_threshold,
        )
    }
}

/// Runs the full multiresolution pipeline, computing every level.
pub fn fit(spectrum: &Spectrum, region: Region, basis: &ManyKnotBasis) -> Result<FitResult> {
    fit_with(spectrum, region, basis, FitOptions::default())
}

pub fn fit_with(
    spectrum: &Spectrum,
    region: Region,
    basis: &ManyKnotBasis,
    options: FitOptions,
) -> Result<FitResult> {
    region.check_within(spectrum)?;
    let n_points = region.n_points();
    let threshold = n_points as f64;
    let mut grid = KnotGrid::initial(region);
    let mut levels = Vec::new();
    loop {
        let level = smooth_level(spectrum, &grid, region, basis)?;
        let done = options.early_stop && level.chi_square <= threshold;
        levels.push(level);
        if done || !grid.can_refine() {
            break;
        }
        grid = grid.refine()?;
    }
    let selected_level = select_level(levels.iter().map(|l| (l.level, l.chi_square)), threshold)
        .expect("at least one level is computed");
    Ok(FitResult {
        levels,
        selected_level,
        n_points,
        criterion_threshold: threshold,
    })
}
