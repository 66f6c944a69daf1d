use crate::error::{Error, Result};

/// Minimum number of channels in a spectrum and of channels spanned by a region.
pub const MIN_CHANNELS: usize = 5;

/// A histogram of counts over contiguous, 0-based channels.
///
/// Counts are stored as reals so that smoothed curves sampled per channel
/// share the representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    counts: Vec<f64>,
}

impl Spectrum {
    pub fn new(counts: Vec<f64>) -> Result<Self> {
        if counts.len() < MIN_CHANNELS {
            return Err(Error::InvalidSpectrum(format!(
                "{} channels, at least {MIN_CHANNELS} required",
                counts.len()
            )));
        }
        if let Some((i, c)) = counts
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_finite() || **c < 0.0)
        {
            return Err(Error::InvalidSpectrum(format!(
                "channel {i} has invalid count {c}"
            )));
        }
        Ok(Spectrum { counts })
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    /// Always false; a valid spectrum has at least five channels.
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn count(&self, channel: usize) -> f64 {
        self.counts[channel]
    }

    pub fn channels(&self) -> impl ExactSizeIterator<Item = usize> {
        0..self.counts.len()
    }

    pub fn into_counts(self) -> Vec<f64> {
        self.counts
    }
}

/// An inclusive channel range `[start, end]` selected for smoothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Region {
    start: usize,
    end: usize,
}

impl Region {
    /// A region must span at least four channel intervals so that five knots fit.
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if end <= start || end - start < MIN_CHANNELS - 1 {
            return Err(Error::InvalidRegion {
                start,
                end,
                reason: "a region must span at least 5 channels".into(),
            });
        }
        Ok(Region { start, end })
    }

    /// Like [`Region::new`], and additionally checks the region lies inside `spectrum`.
    pub fn within(start: usize, end: usize, spectrum: &Spectrum) -> Result<Self> {
        let region = Region::new(start, end)?;
        region.check_within(spectrum)?;
        Ok(region)
    }

    pub fn full(spectrum: &Spectrum) -> Self {
        Region {
            start: 0,
            end: spectrum.len() - 1,
        }
    }

    pub fn check_within(&self, spectrum: &Spectrum) -> Result<()> {
        if self.end >= spectrum.len() {
            return Err(Error::InvalidRegion {
                start: self.start,
                end: self.end,
                reason: format!("spectrum only has channels 0..={}", spectrum.len() - 1),
            });
        }
        Ok(())
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    /// Number of channels in the region (N).
    pub fn n_points(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn width(&self) -> f64 {
        (self.end - self.start) as f64
    }

    pub fn channels(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}
