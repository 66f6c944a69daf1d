//! Synthetic spectra: Gaussian peaks on a flat baseline with counting noise.
//!
//! Noise is Gaussian with standard deviation `sqrt(f)` at each channel, where
//! `f` is the noiseless curve, then rounded to whole counts and clamped at 0.
//! Deviates come from ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`)
//! through `rand_distr::StandardNormal`, drawn once per channel in channel
//! order. Both crates are pinned to exact versions because stored golden
//! spectra depend on this stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::spectrum::{Spectrum, MIN_CHANNELS};

/// One Gaussian peak: `amplitude · exp(−(c − center)² / (2·width²))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakSpec {
    center: f64,
    amplitude: f64,
    width: f64,
}

impl PeakSpec {
    pub fn new(center: f64, amplitude: f64, width: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::InvalidConfig(format!("peak center {center} is not finite")));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "peak amplitude must be positive, got {amplitude}"
            )));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "peak width must be positive, got {width}"
            )));
        }
        Ok(PeakSpec {
            center,
            amplitude,
            width,
        })
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn value_at(&self, channel: f64) -> f64 {
        let z = (channel - self.center) / self.width;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_channels: usize,
    pub baseline: f64,
    pub peaks: Vec<PeakSpec>,
    pub seed: u64,
}

impl SynthConfig {
    pub const DEFAULT_CHANNELS: usize = 1024;
    pub const DEFAULT_BASELINE: f64 = 20.0;

    /// Default peaks: centers 200/512/800, amplitudes 400/900/250, widths 8/12/6.
    pub fn default_peaks() -> Vec<PeakSpec> {
        [(200.0, 400.0, 8.0), (512.0, 900.0, 12.0), (800.0, 250.0, 6.0)]
            .iter()
            .map(|&(c, a, w)| PeakSpec::new(c, a, w).expect("default peaks are valid"))
            .collect()
    }

    /// The default three-peak spectrum over 1024 channels with the given seed.
    pub fn with_seed(seed: u64) -> Self {
        SynthConfig {
            n_channels: Self::DEFAULT_CHANNELS,
            baseline: Self::DEFAULT_BASELINE,
            peaks: Self::default_peaks(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_channels < MIN_CHANNELS {
            return Err(Error::InvalidConfig(format!(
                "{} channels requested, at least {MIN_CHANNELS} required",
                self.n_channels
            )));
        }
        if !(self.baseline >= 0.0 && self.baseline.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "baseline must be a nonnegative number, got {}",
                self.baseline
            )));
        }
        Ok(())
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

/// Noiseless counts. Independent of the seed.
pub fn truth_curve(config: &SynthConfig) -> Result<Spectrum> {
    config.validate()?;
    let counts = (0..config.n_channels)
        .map(|c| {
            let c = c as f64;
            config.baseline + config.peaks.iter().map(|p| p.value_at(c)).sum::<f64>()
        })
        .collect();
    Spectrum::new(counts)
}

/// Applies sqrt-of-counts noise to an arbitrary truth vector.
pub fn add_counting_noise(truth: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    truth
        .iter()
        .map(|&f| {
            let g: f64 = StandardNormal.sample(&mut rng);
            (f + f.max(0.0).sqrt() * g).round().max(0.0)
        })
        .collect()
}

/// Noisy spectrum; identical configs give bitwise-identical output.
pub fn synthesize(config: &SynthConfig) -> Result<Spectrum> {
    let truth = truth_curve(config)?;
    Spectrum::new(add_counting_noise(truth.counts(), config.seed))
}
