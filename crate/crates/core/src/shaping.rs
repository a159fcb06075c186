//! Shaped pump pulses: double-blob spectra and discrete shaper masks.
//!
//! The pump spectrum used throughout is a pair of Gaussian lobes separated by
//! the Raman mode spacing, with a controllable relative phase `phi_l` on the
//! high-frequency lobe. Widths are intensity FWHMs in THz. The rotating frame
//! sits midway between the lobes, so the intensity beat of an equal-amplitude
//! pair is `1 + cos(2 pi s t + phi_l)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::envelope::{ComplexEnvelope, Domain, GridSpec};
use crate::error::{Error, Result};

/// Per-bin spectral amplitude/phase mask (the discretized Fourier-filter).
#[derive(Debug, Clone, PartialEq)]
pub struct ShaperMask {
    amplitudes: Vec<f64>,
    phases: Vec<f64>,
}

impl ShaperMask {
    /// Amplitudes must lie in [0, 1]; lengths must agree.
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if amplitudes.len() != phases.len() {
            return Err(Error::GridMismatch(format!(
                "mask amplitude/phase length mismatch: {} vs {}",
                amplitudes.len(),
                phases.len()
            )));
        }
        if let Some(a) = amplitudes
            .iter()
            .find(|a| !(0.0..=1.0).contains(*a) || !a.is_finite())
        {
            return Err(Error::invalid(
                "amplitudes",
                format!("mask amplitude {a} outside [0, 1]"),
            ));
        }
        Ok(ShaperMask { amplitudes, phases })
    }

    /// Identity mask: unit amplitude, zero phase.
    pub fn identity(n: usize) -> Self {
        ShaperMask {
            amplitudes: vec![1.0; n],
            phases: vec![0.0; n],
        }
    }

    /// Phase-only mask (all amplitudes 1).
    pub fn phase_only(phases: Vec<f64>) -> Self {
        ShaperMask {
            amplitudes: vec![1.0; phases.len()],
            phases,
        }
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
}

/// Parametric two-lobe pump spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleBlobSpec {
    /// Intensity FWHM of each lobe, THz.
    pub blob_width: f64,
    /// Center-to-center separation, THz.
    pub separation: f64,
    /// Relative phase of the high-frequency lobe, radians.
    pub phase_offset: f64,
    /// Amplitude of the high-frequency lobe relative to the low one.
    pub amplitude_ratio: f64,
}

impl DoubleBlobSpec {
    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if !(self.blob_width > 0.0) {
            return Err(Error::invalid(
                "blob_width",
                format!("must be positive, got {}", self.blob_width),
            ));
        }
        if !(self.amplitude_ratio >= 0.0) {
            return Err(Error::invalid(
                "amplitude_ratio",
                format!("must be >= 0, got {}", self.amplitude_ratio),
            ));
        }
        if !(self.separation >= 0.0) || self.separation >= 1.0 / grid.dt() {
            return Err(Error::GridMismatch(format!(
                "separation {} THz does not fit the grid bandwidth {} THz",
                self.separation,
                1.0 / grid.dt()
            )));
        }
        // Each lobe (center +- 4 amplitude sigmas) must stay inside Nyquist.
        let sigma_a = self.blob_width / (2.0 * f64::ln(2.0).sqrt()) / std::f64::consts::SQRT_2;
        if self.separation / 2.0 + 4.0 * sigma_a > grid.nyquist() {
            return Err(Error::GridMismatch(format!(
                "blob at {:.3} THz with width {:.3} THz exceeds the Nyquist bandwidth {:.3} THz",
                self.separation / 2.0,
                self.blob_width,
                grid.nyquist()
            )));
        }
        // The transform-limited duration of one lobe must fit the window 4x over.
        let duration = 2.0 * f64::ln(2.0) / (std::f64::consts::PI * self.blob_width);
        if 4.0 * duration > grid.window() {
            return Err(Error::GridMismatch(format!(
                "pulse duration {duration:.3} ps needs a window of at least {:.3} ps, grid has {:.3} ps",
                4.0 * duration,
                grid.window()
            )));
        }
        Ok(())
    }
}

/// Gaussian spectral amplitude with intensity FWHM `width`, centered at `f0`.
fn lobe(f: f64, f0: f64, width: f64) -> f64 {
    (-2.0 * f64::ln(2.0) * (f - f0) * (f - f0) / (width * width)).exp()
}

/// Build the two-lobe pump spectrum, normalized to unit energy.
///
/// `E(f) = B(f + s/2) + r exp(i phi_l) B(f - s/2)` on the centered frequency
/// axis, with `B` a Gaussian of the requested intensity FWHM.
pub fn make_double_blob(spec: &DoubleBlobSpec, grid: &GridSpec) -> Result<ComplexEnvelope> {
    spec.validate(grid)?;
    let rot = Complex64::from_polar(spec.amplitude_ratio, spec.phase_offset);
    let samples: Vec<Complex64> = grid
        .freq_axis()
        .iter()
        .map(|&f| {
            Complex64::new(lobe(f, -spec.separation / 2.0, spec.blob_width), 0.0)
                + rot * lobe(f, spec.separation / 2.0, spec.blob_width)
        })
        .collect();
    let mut env = ComplexEnvelope::new(*grid, Domain::Frequency, samples)?;
    let energy = crate::envelope::pulse_energy(&env);
    if energy <= 0.0 {
        return Err(Error::invalid(
            "spec",
            "double-blob spectrum has zero energy on this grid",
        ));
    }
    let norm = 1.0 / energy.sqrt();
    for s in env.samples_mut() {
        *s *= norm;
    }
    Ok(env)
}

/// Apply a shaper mask bin-by-bin to a frequency-domain envelope.
pub fn apply_mask(input: &ComplexEnvelope, mask: &ShaperMask) -> Result<ComplexEnvelope> {
    if input.domain() != Domain::Frequency {
        return Err(Error::DomainMismatch {
            expected: Domain::Frequency,
            got: input.domain(),
        });
    }
    if mask.len() != input.grid().n_samples() {
        return Err(Error::GridMismatch(format!(
            "mask has {} bins, grid has {}",
            mask.len(),
            input.grid().n_samples()
        )));
    }
    let samples: Vec<Complex64> = input
        .samples()
        .iter()
        .zip(mask.amplitudes().iter().zip(mask.phases()))
        .map(|(s, (&a, &p))| s * Complex64::from_polar(a, p))
        .collect();
    ComplexEnvelope::new(*input.grid(), Domain::Frequency, samples)
}
