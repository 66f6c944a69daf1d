//! Smoothing of noisy spectroscopic data with many-knot splines.
//!
//! A many-knot basis is a cardinal combination of shifted centered B-splines,
//! so a smoothing curve is assembled directly from local count averages at
//! the knots without solving any system. [`fitter::fit`] runs the
//! multiresolution pipeline and picks a level with the Reinsch criterion;
//! [`baseline`] holds a cubic B-spline least-squares fit for comparison.

pub mod baseline;
pub mod basis;
pub mod cli;
pub mod error;
pub mod fitter;
pub mod io;
pub mod spectrum;
pub mod synth;

pub use basis::{BSplineOrder, ManyKnotBasis, SupportInterval};
pub use error::{Error, ParseError, Result};
pub use fitter::{fit, FitResult, KnotGrid, LevelFit, SmoothCurve};
pub use spectrum::{Region, Spectrum};
pub use synth::{PeakSpec, SynthConfig};
