//! Wigner and Husimi time-frequency distributions of pulse envelopes.
//!
//! The Wigner function is computed per time sample from the lag correlation
//! `e(t + s/2) e*(t - s/2)` followed by an FFT over the lag. Its frequency
//! axis has twice the density of the envelope grid (spacing df/2) and spans
//! half the Nyquist band, which is ample for the bandwidths used here.
//!
//! The Husimi distribution is the minimum-uncertainty Gaussian smoothing of
//! the Wigner function (sigma_t * sigma_omega = 1/2). It is evaluated as a
//! Gaussian-window spectrogram, which equals that convolution analytically
//! and is nonnegative by construction.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::envelope::{ComplexEnvelope, Domain};
use crate::error::{Error, Result};

/// A real-valued distribution over the time-frequency plane.
///
/// `values` is row-major with rows indexed by time: `values[i * n_freq + k]`.
#[derive(Debug, Clone)]
pub struct TFDistribution {
    pub time_axis: Vec<f64>,
    pub freq_axis: Vec<f64>,
    values: Vec<f64>,
}

impl TFDistribution {
    pub fn n_time(&self) -> usize {
        self.time_axis.len()
    }

    pub fn n_freq(&self) -> usize {
        self.freq_axis.len()
    }

    pub fn get(&self, time_idx: usize, freq_idx: usize) -> f64 {
        self.values[time_idx * self.freq_axis.len() + freq_idx]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Marginal over frequency: `sum_f W dw/2pi`, one value per time sample.
    /// For the Wigner distribution this recovers |e(t)|^2.
    pub fn time_marginal(&self) -> Vec<f64> {
        let dw = (self.freq_axis[1] - self.freq_axis[0]) * 2.0 * std::f64::consts::PI;
        let nf = self.freq_axis.len();
        self.values
            .chunks(nf)
            .map(|row| row.iter().sum::<f64>() * dw / (2.0 * std::f64::consts::PI))
            .collect()
    }

    /// Marginal over time: `sum_t W dt`, one value per frequency sample.
    /// For the Wigner distribution this recovers |E(w)|^2.
    pub fn freq_marginal(&self) -> Vec<f64> {
        let dt = self.time_axis[1] - self.time_axis[0];
        let nf = self.freq_axis.len();
        let mut out = vec![0.0; nf];
        for row in self.values.chunks(nf) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v * dt;
            }
        }
        out
    }

    /// Total integral over the (t, f) plane with the 1/2pi frequency measure.
    /// Equals the pulse energy for the Wigner and Husimi distributions.
    pub fn total(&self) -> f64 {
        let dt = self.time_axis[1] - self.time_axis[0];
        let df = self.freq_axis[1] - self.freq_axis[0];
        self.values.iter().sum::<f64>() * dt * df
    }

    /// Downsample both axes by integer strides (for compact dump files).
    pub fn downsample(&self, time_stride: usize, freq_stride: usize) -> TFDistribution {
        let ts = time_stride.max(1);
        let fs = freq_stride.max(1);
        let time_axis: Vec<f64> = self.time_axis.iter().step_by(ts).cloned().collect();
        let freq_axis: Vec<f64> = self.freq_axis.iter().step_by(fs).cloned().collect();
        let nf = self.freq_axis.len();
        let mut values = Vec::with_capacity(time_axis.len() * freq_axis.len());
        for i in (0..self.time_axis.len()).step_by(ts) {
            for k in (0..nf).step_by(fs) {
                values.push(self.values[i * nf + k]);
            }
        }
        TFDistribution {
            time_axis,
            freq_axis,
            values,
        }
    }
}

/// Discrete Wigner distribution of a time-domain envelope.
///
/// `W(t, w) = sum_s e(t + s/2) e*(t - s/2) exp(-i w s) ds` with the lag `s`
/// running over even multiples of dt. The output is checked to be real (the
/// lag correlation is conjugate-symmetric) and the imaginary residue must be
/// below 1e-10 of the peak.
pub fn wigner(input: &ComplexEnvelope) -> Result<TFDistribution> {
    if input.domain() != Domain::Time {
        return Err(Error::DomainMismatch {
            expected: Domain::Time,
            got: input.domain(),
        });
    }
    let n = input.grid().n_samples();
    let dt = input.grid().dt();
    let samples = input.samples();
    let half = (n / 2) as isize;

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut values = vec![0.0; n * n];
    let mut max_abs = 0.0f64;
    let mut max_im = 0.0f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];

    for t_idx in 0..n as isize {
        // lag correlation, centered lag k in [-n/2, n/2); out-of-window -> 0
        for v in buf.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        for k in -half..half {
            let a = t_idx + k;
            let b = t_idx - k;
            if a < 0 || a >= n as isize || b < 0 || b >= n as isize {
                continue;
            }
            let r = samples[a as usize] * samples[b as usize].conj();
            let sign = if (k & 1) == 0 { 1.0 } else { -1.0 };
            buf[k.rem_euclid(n as isize) as usize] = r * sign;
        }
        fft.process(&mut buf);
        // the (-1)^k lag sign already centers the axis: buf[m] is the value
        // at centered fine-frequency index m, f = (m - n/2) df/2
        let row = &mut values[(t_idx as usize) * n..(t_idx as usize + 1) * n];
        for m in 0..n {
            let w = buf[m] * 2.0 * dt;
            row[m] = w.re;
            max_abs = max_abs.max(w.re.abs());
            max_im = max_im.max(w.im.abs());
        }
    }
    debug_assert!(max_abs == 0.0 || max_im <= 1e-10 * max_abs);

    // lag step 2*dt -> frequency spacing df/2 over [-nyquist/2, nyquist/2)
    let dfw = input.grid().df() / 2.0;
    let freq_axis: Vec<f64> = (0..n as isize).map(|k| (k - half) as f64 * dfw).collect();
    Ok(TFDistribution {
        time_axis: input.grid().time_axis(),
        freq_axis,
        values,
    })
}

/// Husimi distribution: minimum-uncertainty smoothing of the Wigner function
/// with time width `sigma_t` (ps) and frequency width `1/(2 sigma_t)` (rad/ps).
///
/// Computed as `|<g_{t,w} | e>|^2` with a normalized Gaussian window, on the
/// same axes as [`wigner`]. Nonnegative by construction.
pub fn husimi(input: &ComplexEnvelope, sigma_t: f64) -> Result<TFDistribution> {
    if input.domain() != Domain::Time {
        return Err(Error::DomainMismatch {
            expected: Domain::Time,
            got: input.domain(),
        });
    }
    if !(sigma_t > 0.0) || !sigma_t.is_finite() {
        return Err(Error::invalid(
            "sigma_t",
            format!("must be positive, got {sigma_t}"),
        ));
    }
    let n = input.grid().n_samples();
    let dt = input.grid().dt();
    let samples = input.samples();
    let taxis = input.grid().time_axis();
    let half = (n / 2) as isize;

    // |g|^2 integrates to 1 so the spectrogram carries the pulse energy
    let norm = (2.0 * std::f64::consts::PI * sigma_t * sigma_t).powf(-0.25);

    // frequency axis with df/2 spacing needs a length-2n transform
    let m = 2 * n;
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(m);
    let mut values = vec![0.0; n * n];
    let mut buf = vec![Complex64::new(0.0, 0.0); m];

    for (i, &t0) in taxis.iter().enumerate() {
        for v in buf.iter_mut() {
            *v = Complex64::new(0.0, 0.0);
        }
        // windowed signal; sign flip implements the centered transform
        for (j, (&s, &tj)) in samples.iter().zip(&taxis).enumerate() {
            let u = tj - t0;
            let g = norm * (-u * u / (4.0 * sigma_t * sigma_t)).exp();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            buf[j] = s * g * sign * dt;
        }
        fft.process(&mut buf);
        // buf[k] holds frequency (k/2 - n/2) * df in units of the fine axis;
        // see below: exponent -2pi i j k / (2n) with j offset n/2 absorbed by
        // the sign flip up to a constant phase (irrelevant under |.|^2).
        let row = &mut values[i * n..(i + 1) * n];
        for k in 0..n {
            // centered fine-frequency index c corresponds to FFT bin (c + n) mod 2n
            // shifted by n/2 pairs of bins: f_c = (c - n/2) * df/2 with c in [0, n)
            let bin = (k + n / 2) % m;
            row[k] = buf[bin].norm_sqr();
        }
    }

    let dfw = input.grid().df() / 2.0;
    let freq_axis: Vec<f64> = (0..n as isize).map(|k| (k - half) as f64 * dfw).collect();
    Ok(TFDistribution {
        time_axis: taxis,
        freq_axis,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{pulse_energy, to_frequency, ComplexEnvelope, GridSpec};
    use crate::shaping::{make_double_blob, DoubleBlobSpec};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn gaussian_pulse(grid: &GridSpec, sigma_int: f64) -> ComplexEnvelope {
        // intensity std sigma_int (ps)
        let samples: Vec<Complex64> = grid
            .time_axis()
            .iter()
            .map(|&t| Complex64::new((-t * t / (4.0 * sigma_int * sigma_int)).exp(), 0.0))
            .collect();
        ComplexEnvelope::new(*grid, Domain::Time, samples).unwrap()
    }

    fn blob(grid: &GridSpec, phase: f64) -> ComplexEnvelope {
        let spec = DoubleBlobSpec {
            blob_width: 0.5,
            separation: 3.3,
            phase_offset: phase,
            amplitude_ratio: 1.0,
        };
        crate::envelope::to_time(&make_double_blob(&spec, grid).unwrap()).unwrap()
    }

    #[test]
    fn gaussian_wigner_is_nonnegative() {
        let grid = GridSpec::new(256, 0.04, 0.0).unwrap();
        let w = wigner(&gaussian_pulse(&grid, 0.3)).unwrap();
        assert!(w.min_value() >= -1e-10 * w.max_value());
    }

    #[test]
    fn wigner_time_marginal_matches_intensity() {
        let grid = GridSpec::new(512, 0.02, 0.0).unwrap();
        let env = blob(&grid, 1.3);
        let w = wigner(&env).unwrap();
        let marg = w.time_marginal();
        let peak = env
            .samples()
            .iter()
            .map(|s| s.norm_sqr())
            .fold(0.0, f64::max);
        for (m, s) in marg.iter().zip(env.samples()) {
            assert!((m - s.norm_sqr()).abs() <= 1e-8 * peak);
        }
    }

    #[test]
    fn wigner_freq_marginal_matches_spectrum() {
        let grid = GridSpec::new(512, 0.02, 0.0).unwrap();
        let env = blob(&grid, 0.4);
        let spec = to_frequency(&env).unwrap();
        let w = wigner(&env).unwrap();
        let marg = w.freq_marginal();
        let peak = spec
            .samples()
            .iter()
            .map(|s| s.norm_sqr())
            .fold(0.0, f64::max);
        // even Wigner frequency bins coincide with the envelope frequency grid
        for (k, &f) in w.freq_axis.iter().enumerate() {
            if k % 2 != 0 {
                continue;
            }
            let grid_idx = (f / grid.df()).round() as isize + (grid.n_samples() / 2) as isize;
            if grid_idx < 0 || grid_idx >= grid.n_samples() as isize {
                continue;
            }
            let expected = spec.samples()[grid_idx as usize].norm_sqr();
            assert!(
                (marg[k] - expected).abs() <= 1e-8 * peak,
                "bin {k}: {} vs {}",
                marg[k],
                expected
            );
        }
    }

    #[test]
    fn wigner_total_is_energy() {
        let grid = GridSpec::new(256, 0.04, 0.0).unwrap();
        let env = blob(&grid, 2.0);
        let w = wigner(&env).unwrap();
        assert_relative_eq!(w.total(), pulse_energy(&env), max_relative = 1e-8);
    }

    #[test]
    fn double_blob_wigner_fringe_inverts_with_phase() {
        let grid = GridSpec::default_grid();
        let w0 = wigner(&blob(&grid, 0.0)).unwrap();
        let wpi = wigner(&blob(&grid, PI)).unwrap();
        // fringe band sits at the midpoint frequency f = 0
        let k0 = w0.n_freq() / 2;
        let mut dot = 0.0;
        let mut n0 = 0.0;
        let mut n1 = 0.0;
        for i in 0..w0.n_time() {
            let a = w0.get(i, k0);
            let b = wpi.get(i, k0);
            dot += a * b;
            n0 += a * a;
            n1 += b * b;
        }
        let corr = dot / (n0.sqrt() * n1.sqrt());
        assert!(corr < -0.9, "fringe correlation {corr}");
    }

    #[test]
    fn husimi_nonnegative_for_random_envelopes() {
        let grid = GridSpec::new(128, 0.05, 0.0).unwrap();
        for seed in 0..100u64 {
            let samples: Vec<Complex64> = (0..128)
                .map(|j| {
                    let a = ((j as u64 * 2654435761 + seed * 97) % 1000) as f64 / 500.0 - 1.0;
                    let b = ((j as u64 * 40503 + seed * 31) % 1000) as f64 / 500.0 - 1.0;
                    Complex64::new(a, b)
                })
                .collect();
            let env = ComplexEnvelope::new(grid, Domain::Time, samples).unwrap();
            let h = husimi(&env, 0.1).unwrap();
            assert!(h.min_value() >= -1e-12);
        }
    }

    #[test]
    fn husimi_gaussian_widths_add_in_quadrature() {
        let grid = GridSpec::default_grid();
        let sigma_p = 0.25; // pulse intensity std, ps
        let sigma_k = 0.15; // smoothing kernel, ps
        let env = gaussian_pulse(&grid, sigma_p);
        let h = husimi(&env, sigma_k).unwrap();
        // time marginal of the Husimi is |e|^2 convolved with the kernel
        let marg = h.time_marginal();
        let total: f64 = marg.iter().sum();
        let mean: f64 = marg
            .iter()
            .zip(&h.time_axis)
            .map(|(m, t)| m * t)
            .sum::<f64>()
            / total;
        let var: f64 = marg
            .iter()
            .zip(&h.time_axis)
            .map(|(m, t)| m * (t - mean) * (t - mean))
            .sum::<f64>()
            / total;
        let expected = sigma_p * sigma_p + sigma_k * sigma_k;
        assert_relative_eq!(var, expected, max_relative = 1e-6);

        // frequency marginal: spectrum std (1/(4 pi sigma_p) in THz) plus kernel
        let fmarg = h.freq_marginal();
        let ftotal: f64 = fmarg.iter().sum();
        let fmean: f64 = fmarg
            .iter()
            .zip(&h.freq_axis)
            .map(|(m, f)| m * f)
            .sum::<f64>()
            / ftotal;
        let fvar: f64 = fmarg
            .iter()
            .zip(&h.freq_axis)
            .map(|(m, f)| m * (f - fmean) * (f - fmean))
            .sum::<f64>()
            / ftotal;
        let sf = 1.0 / (4.0 * PI * sigma_p);
        let skf = 1.0 / (2.0 * sigma_k) / (2.0 * PI); // sigma_w = 1/(2 sigma_t), in THz
        let fexpected = sf * sf + skf * skf;
        assert_relative_eq!(fvar, fexpected, max_relative = 1e-6);
    }

    #[test]
    fn husimi_insensitive_to_blob_phase() {
        let grid = GridSpec::default_grid();
        let h0 = husimi(&blob(&grid, 0.0), 0.15).unwrap();
        let hpi = husimi(&blob(&grid, PI), 0.15).unwrap();
        // the two dominant lobes (at +-1.65 THz) keep their position and
        // their peak value moves by under 5%; only the faint skirt between
        // them reacts to the phase
        for side in [-1.0, 1.0] {
            let mut peak0 = (0usize, 0usize, 0.0f64);
            for i in 0..h0.n_time() {
                for (k, &f) in h0.freq_axis.iter().enumerate() {
                    if f * side > 1.0 && h0.get(i, k) > peak0.2 {
                        peak0 = (i, k, h0.get(i, k));
                    }
                }
            }
            let mut peak_pi = (0usize, 0usize, 0.0f64);
            for i in 0..hpi.n_time() {
                for (k, &f) in hpi.freq_axis.iter().enumerate() {
                    if f * side > 1.0 && hpi.get(i, k) > peak_pi.2 {
                        peak_pi = (i, k, hpi.get(i, k));
                    }
                }
            }
            assert_eq!((peak0.0, peak0.1), (peak_pi.0, peak_pi.1), "lobe moved");
            let rel = (peak0.2 - peak_pi.2).abs() / peak0.2;
            assert!(rel <= 0.05, "lobe peak changed by {rel}");
        }
    }

    #[test]
    fn husimi_rejects_bad_sigma() {
        let grid = GridSpec::new(64, 0.05, 0.0).unwrap();
        let env = gaussian_pulse(&grid, 0.2);
        assert!(husimi(&env, 0.0).is_err());
        assert!(husimi(&env, -1.0).is_err());
    }
}
