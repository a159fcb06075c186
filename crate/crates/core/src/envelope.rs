//! Sampled complex envelopes on uniform time/frequency grids.
//!
//! Envelopes are dimensionless slowly-varying field amplitudes in a rotating
//! frame. Time is in ps, frequency in THz, so `df = 1/(n*dt)` needs no unit
//! conversion. The Fourier pair is unitary in the energy sense:
//! `sum |e|^2 dt == sum |E|^2 df` exactly.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which axis an envelope is sampled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Time,
    Frequency,
}

/// Uniform sampling grid shared by the time and frequency representations.
///
/// Both axes are centered: `t_j = (j - n/2) dt`, `f_k = (k - n/2) df`.
/// `center_frequency` records the THz offset of the rotating frame and is
/// metadata only; all arithmetic happens in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n_samples: usize,
    dt: f64,
    center_frequency: f64,
}

impl GridSpec {
    /// n_samples must be a power of two >= 64; dt positive (ps).
    pub fn new(n_samples: usize, dt: f64, center_frequency: f64) -> Result<Self> {
        if n_samples < 64 || !n_samples.is_power_of_two() {
            return Err(Error::invalid(
                "n_samples",
                format!("must be a power of two >= 64, got {n_samples}"),
            ));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        Ok(GridSpec {
            n_samples,
            dt,
            center_frequency,
        })
    }

    /// Default grid: 1024 samples at 10 fs (10.24 ps window, 50 THz Nyquist).
    pub fn default_grid() -> Self {
        GridSpec::new(1024, 0.01, 0.0).unwrap()
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Time step in ps.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Frequency step in THz.
    pub fn df(&self) -> f64 {
        1.0 / (self.n_samples as f64 * self.dt)
    }

    /// Total time window in ps.
    pub fn window(&self) -> f64 {
        self.n_samples as f64 * self.dt
    }

    /// Half the sampling rate, in THz.
    pub fn nyquist(&self) -> f64 {
        0.5 / self.dt
    }

    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    /// Centered time axis in ps.
    pub fn time_axis(&self) -> Vec<f64> {
        let h = (self.n_samples / 2) as isize;
        (0..self.n_samples as isize)
            .map(|j| (j - h) as f64 * self.dt)
            .collect()
    }

    /// Centered frequency axis in THz (rotating-frame offset).
    pub fn freq_axis(&self) -> Vec<f64> {
        let h = (self.n_samples / 2) as isize;
        let df = self.df();
        (0..self.n_samples as isize)
            .map(|k| (k - h) as f64 * df)
            .collect()
    }
}

/// A complex field envelope sampled on a [`GridSpec`], in one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexEnvelope {
    grid: GridSpec,
    domain: Domain,
    samples: Vec<Complex64>,
}

impl ComplexEnvelope {
    pub fn new(grid: GridSpec, domain: Domain, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.n_samples() {
            return Err(Error::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.n_samples(),
                samples.len()
            )));
        }
        Ok(ComplexEnvelope {
            grid,
            domain,
            samples,
        })
    }

    pub fn zero(grid: GridSpec, domain: Domain) -> Self {
        ComplexEnvelope {
            grid,
            domain,
            samples: vec![Complex64::new(0.0, 0.0); grid.n_samples()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Axis values for this envelope's domain (ps or THz).
    pub fn axis(&self) -> Vec<f64> {
        match self.domain {
            Domain::Time => self.grid.time_axis(),
            Domain::Frequency => self.grid.freq_axis(),
        }
    }

    /// Step of this envelope's domain (dt or df).
    pub fn step(&self) -> f64 {
        match self.domain {
            Domain::Time => self.grid.dt(),
            Domain::Frequency => self.grid.df(),
        }
    }

    /// Scale all samples by a complex factor.
    pub fn scaled(&self, factor: Complex64) -> Self {
        let samples = self.samples.iter().map(|s| s * factor).collect();
        ComplexEnvelope {
            grid: self.grid,
            domain: self.domain,
            samples,
        }
    }
}

/// Energy of an envelope: `sum |s|^2 * step`. Domain-independent by Parseval.
pub fn pulse_energy(input: &ComplexEnvelope) -> f64 {
    let step = input.step();
    input.samples().iter().map(|s| s.norm_sqr()).sum::<f64>() * step
}

/// Centered unitary DFT, frequency -> time: `e[j] = df * sum_k E[k] exp(+2pi i f_k t_j)`.
pub fn to_time(input: &ComplexEnvelope) -> Result<ComplexEnvelope> {
    if input.domain() != Domain::Frequency {
        return Err(Error::DomainMismatch {
            expected: Domain::Frequency,
            got: input.domain(),
        });
    }
    let out = centered_dft(input.samples(), input.grid().df(), true);
    ComplexEnvelope::new(*input.grid(), Domain::Time, out)
}

/// Centered unitary DFT, time -> frequency: `E[k] = dt * sum_j e[j] exp(-2pi i f_k t_j)`.
pub fn to_frequency(input: &ComplexEnvelope) -> Result<ComplexEnvelope> {
    if input.domain() != Domain::Time {
        return Err(Error::DomainMismatch {
            expected: Domain::Time,
            got: input.domain(),
        });
    }
    let out = centered_dft(input.samples(), input.grid().dt(), false);
    ComplexEnvelope::new(*input.grid(), Domain::Frequency, out)
}

/// DFT with both axes centered on sample n/2.
///
/// With h = n/2: exp(-2pi i (j-h)(k-h)/n) = (-1)^j (-1)^(k+h) exp(-2pi i jk/n),
/// so a centered transform is a standard FFT with sign flips on odd samples.
fn centered_dft(samples: &[Complex64], scale: f64, inverse: bool) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(j, s)| if j % 2 == 0 { *s } else { -*s })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    fft.process(&mut buf);
    let half_sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
    for (k, v) in buf.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { half_sign } else { -half_sign };
        *v *= sign * scale;
    }
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(GridSpec::new(1000, 0.01, 0.0).is_err());
        assert!(GridSpec::new(32, 0.01, 0.0).is_err());
        assert!(GridSpec::new(128, -0.1, 0.0).is_err());
        assert!(GridSpec::new(128, 0.01, 0.0).is_ok());
    }

    #[test]
    fn delta_in_frequency_gives_constant_modulus() {
        let grid = GridSpec::new(128, 0.05, 0.0).unwrap();
        let mut samples = vec![Complex64::new(0.0, 0.0); 128];
        samples[37] = Complex64::new(1.0, 0.0);
        let env = ComplexEnvelope::new(grid, Domain::Frequency, samples).unwrap();
        let t = to_time(&env).unwrap();
        let mods: Vec<f64> = t.samples().iter().map(|s| s.norm()).collect();
        for m in &mods {
            assert_relative_eq!(*m, mods[0], max_relative = 1e-12);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        let grid = GridSpec::new(256, 0.02, 0.0).unwrap();
        // deterministic pseudo-random envelope
        let samples: Vec<Complex64> = (0..256)
            .map(|j| {
                let x = (j as f64 * 0.71).sin() + 0.3 * (j as f64 * 2.13).cos();
                let y = (j as f64 * 1.37).cos() - 0.2 * (j as f64 * 0.29).sin();
                Complex64::new(x, y)
            })
            .collect();
        let f = ComplexEnvelope::new(grid, Domain::Frequency, samples).unwrap();
        let t = to_time(&f).unwrap();
        let f2 = to_frequency(&t).unwrap();
        let scale = f
            .samples()
            .iter()
            .map(|s| s.norm())
            .fold(0.0, f64::max);
        assert!(max_abs_diff(f.samples(), f2.samples()) / scale <= 1e-12);
        assert_relative_eq!(pulse_energy(&f), pulse_energy(&t), max_relative = 1e-12);
    }

    #[test]
    fn gaussian_fwhm_duality() {
        // 0.5 THz intensity-FWHM Gaussian spectrum -> 2ln2/(pi*0.5) ps intensity FWHM.
        let grid = GridSpec::default_grid();
        let w = 0.5;
        let samples: Vec<Complex64> = grid
            .freq_axis()
            .iter()
            .map(|&f| Complex64::new((-2.0 * f64::ln(2.0) * f * f / (w * w)).exp(), 0.0))
            .collect();
        let env = ComplexEnvelope::new(grid, Domain::Frequency, samples).unwrap();
        let t = to_time(&env).unwrap();
        let intens: Vec<f64> = t.samples().iter().map(|s| s.norm_sqr()).collect();
        let peak = intens.iter().cloned().fold(0.0, f64::max);
        let half = peak / 2.0;
        // locate FWHM by linear interpolation around the half-maximum crossings
        let axis = grid.time_axis();
        let mut left = 0.0;
        let mut right = 0.0;
        for i in 1..intens.len() {
            if intens[i - 1] < half && intens[i] >= half {
                let frac = (half - intens[i - 1]) / (intens[i] - intens[i - 1]);
                left = axis[i - 1] + frac * grid.dt();
            }
            if intens[i - 1] >= half && intens[i] < half {
                let frac = (intens[i - 1] - half) / (intens[i - 1] - intens[i]);
                right = axis[i - 1] + frac * grid.dt();
            }
        }
        let expected = 2.0 * f64::ln(2.0) / (std::f64::consts::PI * w);
        assert_relative_eq!(right - left, expected, max_relative = 1e-4);
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let grid = GridSpec::new(64, 0.01, 0.0).unwrap();
        let t = ComplexEnvelope::zero(grid, Domain::Time);
        assert!(to_time(&t).is_err());
        assert!(to_frequency(&t).is_ok());
    }
}
