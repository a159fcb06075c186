//! Monte Carlo trial runner, mode-asymmetry observable, and phase-offset
//! scans over ensembles of random initial coherences.
//!
//! Each trial draws its coherence seeds from a counter-derived ChaCha
//! substream of the run seed, so trials are order-independent, parallel-safe
//! and bit-reproducible. Phase scans reuse the same seed sequence at every
//! phase offset (common random numbers): the curves differ only through the
//! pump phase.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::{pulse_energy, to_time, ComplexEnvelope, GridSpec};
use crate::error::{Error, Result};
use crate::shaping::{make_double_blob, DoubleBlobSpec};
use crate::solver::{
    conservation_residual, integrate_two_mode, two_mode_initial_state, ModeSeeds, SimConfig,
};

/// Trials whose total Stokes output falls below this fraction of the pump
/// energy are flagged as undefined-asymmetry and excluded from means.
pub const ASYMMETRY_FLOOR: f64 = 1e-12;

/// Stream offset reserved for pilot (calibration) trials so they never
/// collide with scan trials.
const PILOT_STREAM_OFFSET: u64 = 1 << 32;

/// Initial coherence pair for one trial, reproducible from
/// `(rng_seed, trial_index)` alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSeed {
    pub q1_0: Complex64,
    pub q2_0: Complex64,
    pub trial_index: u64,
}

impl TrialSeed {
    /// Draw the seed pair for trial `trial_index` from its own substream.
    ///
    /// Both coherences are i.i.d. circular Gaussian with standard deviation
    /// `noise_sigma` (sigma/sqrt(2) per quadrature).
    pub fn draw(rng_seed: u64, trial_index: u64, noise_sigma: f64) -> TrialSeed {
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        rng.set_stream(trial_index);
        let quad = Normal::new(0.0, noise_sigma / std::f64::consts::SQRT_2).unwrap();
        let q1_0 = Complex64::new(quad.sample(&mut rng), quad.sample(&mut rng));
        let q2_0 = Complex64::new(quad.sample(&mut rng), quad.sample(&mut rng));
        TrialSeed {
            q1_0,
            q2_0,
            trial_index,
        }
    }

    /// Initial Stokes phase of mode 1 (arg q1_0).
    pub fn phi_s1(&self) -> f64 {
        self.q1_0.arg()
    }

    /// Initial Stokes phase of mode 2 (arg q2_0).
    pub fn phi_s2(&self) -> f64 {
        self.q2_0.arg()
    }

    /// Solver seeds for this trial: one pair, or one per slice when the
    /// spatially-resolved noise option is on (drawn from the same substream,
    /// first pair equal to `q1_0`/`q2_0`).
    pub fn mode_seeds(&self, cfg: &SimConfig) -> ModeSeeds {
        if !cfg.spatial_noise {
            return ModeSeeds::Uniform {
                q1: self.q1_0,
                q2: self.q2_0,
            };
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(self.trial_index);
        let quad = Normal::new(0.0, cfg.noise_sigma / std::f64::consts::SQRT_2).unwrap();
        let mut draw = || Complex64::new(quad.sample(&mut rng), quad.sample(&mut rng));
        let pairs: Vec<(Complex64, Complex64)> = (0..=cfg.grid.n_x)
            .map(|_| (draw(), draw()))
            .collect();
        ModeSeeds::PerSlice(pairs)
    }
}

/// Output observables of a single trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_index: u64,
    /// tau-integrated output Stokes energies at x = x_max.
    pub e_s1: f64,
    pub e_s2: f64,
    /// `(E_S1 - E_S2) / (E_S1 + E_S2)`; `None` when the total output fell
    /// below the undefined-asymmetry floor.
    pub asymmetry: Option<f64>,
    pub conservation_residual: f64,
}

/// `(E1 - E2) / (E1 + E2)`, in [-1, 1].
pub fn mode_asymmetry(e1: f64, e2: f64) -> Result<f64> {
    if !(e1 >= 0.0) || !(e2 >= 0.0) {
        return Err(Error::invalid(
            "energies",
            format!("must be nonnegative, got ({e1}, {e2})"),
        ));
    }
    if e1 + e2 == 0.0 {
        return Err(Error::UndefinedAsymmetry);
    }
    Ok((e1 - e2) / (e1 + e2))
}

/// Beam parameters for the Fresnel-number count of independent spatial modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FresnelParams {
    /// Beam area, m^2.
    pub beam_area: f64,
    /// Stokes wavelength, m.
    pub stokes_wavelength: f64,
    /// Interaction cell length, m.
    pub cell_length: f64,
}

/// `F = A / (lambda_S L)`.
pub fn fresnel_number(p: &FresnelParams) -> Result<f64> {
    for (name, v) in [
        ("beam_area", p.beam_area),
        ("stokes_wavelength", p.stokes_wavelength),
        ("cell_length", p.cell_length),
    ] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(name, format!("must be positive, got {v}")));
        }
    }
    Ok(p.beam_area / (p.stokes_wavelength * p.cell_length))
}

/// Run one trial: integrate the two-mode system for the given pump
/// (unit-energy envelope, scaled by `cfg.pump_scale`) and seed pair.
pub fn run_trial(pump: &ComplexEnvelope, seed: &TrialSeed, cfg: &SimConfig) -> Result<TrialResult> {
    let wrap = |e: Error| Error::Trial {
        trial_index: seed.trial_index,
        source: Box::new(e),
    };
    let initial = two_mode_initial_state(pump, cfg).map_err(wrap)?;
    let (fields, _) = integrate_two_mode(pump, &seed.mode_seeds(cfg), cfg).map_err(wrap)?;
    let e_s1 = pulse_energy(&fields.eps_s1);
    let e_s2 = pulse_energy(&fields.eps_s2);
    let pump_energy = pulse_energy(&initial.eps_l);
    let asymmetry = if e_s1 + e_s2 > ASYMMETRY_FLOOR * pump_energy {
        Some((e_s1 - e_s2) / (e_s1 + e_s2))
    } else {
        None
    };
    Ok(TrialResult {
        trial_index: seed.trial_index,
        e_s1,
        e_s2,
        asymmetry,
        conservation_residual: conservation_residual(&initial, &fields),
    })
}

/// Options controlling scan robustness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Fraction of failed (not merely undefined) trials tolerated per phase
    /// point before the scan aborts.
    pub max_failed_fraction: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            max_failed_fraction: 0.0,
        }
    }
}

/// Ensemble statistics of a phase-offset scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseScanResult {
    pub phases: Vec<f64>,
    pub mean_asymmetry: Vec<f64>,
    pub stderr_asymmetry: Vec<f64>,
    /// Trials with a defined asymmetry per phase point.
    pub n_effective: Vec<usize>,
    /// Trials excluded by the undefined-asymmetry floor per phase point.
    pub dropouts: Vec<usize>,
    pub n_trials: usize,
    /// Per-trial asymmetries, `[phase][trial]`, for paired analyses.
    pub trial_asymmetries: Vec<Vec<Option<f64>>>,
    pub config: SimConfig,
    pub blob: DoubleBlobSpec,
}

impl PhaseScanResult {
    /// Peak-to-peak spread of the mean asymmetry over the scanned phases.
    pub fn modulation_depth(&self) -> f64 {
        let max = self.mean_asymmetry.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.mean_asymmetry.iter().cloned().fold(f64::MAX, f64::min);
        max - min
    }

    /// Least-squares fit of `mean_asymmetry` to `a cos(phi + p) + c`;
    /// returns (amplitude a >= 0, phase p).
    pub fn fit_cosine(&self) -> (f64, f64) {
        let n = self.phases.len() as f64;
        let mut sc = 0.0;
        let mut ss = 0.0;
        for (&phi, &m) in self.phases.iter().zip(&self.mean_asymmetry) {
            sc += m * phi.cos();
            ss += m * phi.sin();
        }
        // m(phi) = a cos(phi + p) = a cos p cos phi - a sin p sin phi;
        // project on the (approximately orthogonal) phase set
        let c = 2.0 * sc / n;
        let s = 2.0 * ss / n;
        ((c * c + s * s).sqrt(), (-s).atan2(c))
    }
}

/// Scan the inter-lobe phase offset: at each value of `phases`, rebuild the
/// pump from `blob` with that offset and run `n_trials` trials with the same
/// seed sequence (trial-matched across phases).
pub fn phase_scan(
    blob: &DoubleBlobSpec,
    grid: &GridSpec,
    phases: &[f64],
    n_trials: usize,
    cfg: &SimConfig,
    opts: &ScanOptions,
) -> Result<PhaseScanResult> {
    if phases.is_empty() {
        return Err(Error::invalid("phases", "must be nonempty"));
    }
    if n_trials == 0 {
        return Err(Error::invalid("n_trials", "must be >= 1"));
    }
    cfg.validate()?;

    let mut result = PhaseScanResult {
        phases: phases.to_vec(),
        mean_asymmetry: Vec::with_capacity(phases.len()),
        stderr_asymmetry: Vec::with_capacity(phases.len()),
        n_effective: Vec::with_capacity(phases.len()),
        dropouts: Vec::with_capacity(phases.len()),
        n_trials,
        trial_asymmetries: Vec::with_capacity(phases.len()),
        config: cfg.clone(),
        blob: *blob,
    };

    for &phi in phases {
        let spec = DoubleBlobSpec {
            phase_offset: phi,
            ..*blob
        };
        let pump = to_time(&make_double_blob(&spec, grid)?)?;
        let trials: Vec<Result<TrialResult>> = (0..n_trials as u64)
            .into_par_iter()
            .map(|i| {
                let seed = TrialSeed::draw(cfg.rng_seed, i, cfg.noise_sigma);
                run_trial(&pump, &seed, cfg)
            })
            .collect();

        let failed = trials.iter().filter(|t| t.is_err()).count();
        if failed as f64 > opts.max_failed_fraction * n_trials as f64 {
            let first_err = trials.into_iter().find_map(|t| t.err()).unwrap();
            return Err(if opts.max_failed_fraction == 0.0 {
                first_err
            } else {
                Error::ScanAborted {
                    failed,
                    total: n_trials,
                    allowed: opts.max_failed_fraction,
                }
            });
        }

        let asyms: Vec<Option<f64>> = trials
            .iter()
            .map(|t| t.as_ref().ok().and_then(|r| r.asymmetry))
            .collect();
        let defined: Vec<f64> = asyms.iter().filter_map(|a| *a).collect();
        let n_eff = defined.len();
        let dropout = n_trials - failed - n_eff;
        let (mean, stderr) = mean_stderr(&defined);
        result.mean_asymmetry.push(mean);
        result.stderr_asymmetry.push(stderr);
        result.n_effective.push(n_eff);
        result.dropouts.push(dropout);
        result.trial_asymmetries.push(asyms);
    }
    Ok(result)
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Median of the total-Stokes-to-pump energy ratio over a pilot ensemble.
pub fn pilot_conversion_ratio(
    blob: &DoubleBlobSpec,
    grid: &GridSpec,
    cfg: &SimConfig,
    pilot_trials: usize,
) -> Result<f64> {
    let pump = to_time(&make_double_blob(blob, grid)?)?;
    let pump_energy = pulse_energy(&pump) * cfg.pump_scale * cfg.pump_scale;
    let ratios: Vec<Result<f64>> = (0..pilot_trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = TrialSeed::draw(cfg.rng_seed, PILOT_STREAM_OFFSET + i, cfg.noise_sigma);
            run_trial(&pump, &seed, cfg).map(|r| (r.e_s1 + r.e_s2) / pump_energy)
        })
        .collect();
    let mut ok: Vec<f64> = Vec::with_capacity(pilot_trials);
    for r in ratios {
        match r {
            Ok(v) => ok.push(v),
            // divergence means the drive is far too strong for this scale
            Err(Error::Trial { source, .. })
                if matches!(*source, Error::Divergence { .. } | Error::NonFinite { .. }) =>
            {
                return Ok(f64::INFINITY)
            }
            Err(e) => return Err(e),
        }
    }
    ok.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ok[ok.len() / 2])
}

/// Bounds of the below-saturation operating band (median Stokes conversion).
pub const CONVERSION_BAND: (f64, f64) = (1e-3, 5e-2);

/// Auto-calibrate `pump_scale` so the median total Stokes conversion of a
/// pilot ensemble lands inside [`CONVERSION_BAND`] (targeting its upper
/// half, where the pump-pump coupling is most visible while the gain stays
/// below saturation).
pub fn calibrate_pump_scale(
    blob: &DoubleBlobSpec,
    grid: &GridSpec,
    cfg: &SimConfig,
    pilot_trials: usize,
) -> Result<f64> {
    let target = 2.5e-2;
    let mut scale = cfg.pump_scale;
    let ratio_at = |s: f64| -> Result<f64> {
        let c = SimConfig {
            pump_scale: s,
            ..cfg.clone()
        };
        pilot_conversion_ratio(blob, grid, &c, pilot_trials)
    };

    // bracket the target with a geometric walk
    let mut r = ratio_at(scale)?;
    let mut lo = scale;
    let mut hi = scale;
    let mut iter = 0;
    while r < target && iter < 60 {
        lo = scale;
        scale *= 1.3;
        r = ratio_at(scale)?;
        hi = scale;
        iter += 1;
    }
    while r > target && iter < 60 {
        hi = scale;
        scale /= 1.3;
        r = ratio_at(scale)?;
        lo = scale;
        iter += 1;
    }
    // bisect (in log scale) into the band
    for _ in 0..40 {
        if (CONVERSION_BAND.0..=CONVERSION_BAND.1).contains(&r) {
            return Ok(scale);
        }
        if r < target {
            lo = scale;
        } else {
            hi = scale;
        }
        scale = (lo * hi).sqrt();
        r = ratio_at(scale)?;
    }
    if (CONVERSION_BAND.0..=CONVERSION_BAND.1).contains(&r) {
        Ok(scale)
    } else {
        Err(Error::invalid(
            "pump_scale",
            format!("calibration failed to reach the conversion band (last ratio {r:.3e})"),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_cfg() -> SimConfig {
        SimConfig {
            grid: crate::solver::SolverGrid { n_x: 96, x_max: 30.0 },
            pump_scale: 0.6,
            ..SimConfig::default()
        }
    }

    fn blob() -> DoubleBlobSpec {
        DoubleBlobSpec {
            blob_width: 0.5,
            separation: 3.3,
            phase_offset: 0.0,
            amplitude_ratio: 1.0,
        }
    }

    fn grid() -> GridSpec {
        GridSpec::new(256, 0.04, 0.0).unwrap()
    }

    #[test]
    fn asymmetry_arithmetic() {
        assert_eq!(mode_asymmetry(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(mode_asymmetry(2.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(mode_asymmetry(0.3, 0.1).unwrap(), 0.5, max_relative = 1e-15);
        assert!(matches!(
            mode_asymmetry(0.0, 0.0),
            Err(Error::UndefinedAsymmetry)
        ));
        assert!(mode_asymmetry(-1.0, 1.0).is_err());
    }

    #[test]
    fn fresnel_arithmetic() {
        let p = FresnelParams {
            beam_area: 1e-6,
            stokes_wavelength: 1e-6,
            cell_length: 0.1,
        };
        assert_relative_eq!(fresnel_number(&p).unwrap(), 10.0, max_relative = 1e-15);
        let unit = FresnelParams {
            beam_area: 2e-7,
            stokes_wavelength: 1e-6,
            cell_length: 0.2,
        };
        assert_relative_eq!(fresnel_number(&unit).unwrap(), 1.0, max_relative = 1e-15);
        let doubled = FresnelParams {
            beam_area: 2.0 * p.beam_area,
            ..p
        };
        assert_relative_eq!(
            fresnel_number(&doubled).unwrap(),
            2.0 * fresnel_number(&p).unwrap(),
            max_relative = 1e-15
        );
        let bad = FresnelParams {
            beam_area: -1.0,
            ..p
        };
        assert!(fresnel_number(&bad).is_err());
    }

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let a = TrialSeed::draw(42, 7, 1e-3);
        let b = TrialSeed::draw(42, 7, 1e-3);
        assert_eq!(a, b);
        let c = TrialSeed::draw(42, 8, 1e-3);
        assert_ne!(a.q1_0, c.q1_0);
        let d = TrialSeed::draw(43, 7, 1e-3);
        assert_ne!(a.q1_0, d.q1_0);
    }

    #[test]
    fn zero_seed_trial_is_flagged_undefined() {
        let cfg = small_cfg();
        let pump = to_time(&make_double_blob(&blob(), &grid()).unwrap()).unwrap();
        let seed = TrialSeed {
            q1_0: Complex64::new(0.0, 0.0),
            q2_0: Complex64::new(0.0, 0.0),
            trial_index: 0,
        };
        let r = run_trial(&pump, &seed, &cfg).unwrap();
        assert_eq!(r.e_s1, 0.0);
        assert_eq!(r.e_s2, 0.0);
        assert_eq!(r.asymmetry, None);
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = small_cfg();
        let pump = to_time(&make_double_blob(&blob(), &grid()).unwrap()).unwrap();
        let seed = TrialSeed::draw(cfg.rng_seed, 3, cfg.noise_sigma);
        let a = run_trial(&pump, &seed, &cfg).unwrap();
        let b = run_trial(&pump, &seed, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scan_shapes_and_determinism() {
        let cfg = small_cfg();
        let phases = [0.0, 1.0];
        let a = phase_scan(&blob(), &grid(), &phases, 4, &cfg, &ScanOptions::default()).unwrap();
        let b = phase_scan(&blob(), &grid(), &phases, 4, &cfg, &ScanOptions::default()).unwrap();
        assert_eq!(a.mean_asymmetry, b.mean_asymmetry);
        assert_eq!(a.phases.len(), 2);
        assert_eq!(a.n_effective.len(), 2);
        for col in &a.trial_asymmetries {
            assert_eq!(col.len(), 4);
            for asym in col.iter().flatten() {
                assert!((-1.0..=1.0).contains(asym));
            }
        }
    }

    #[test]
    fn scan_rejects_empty_inputs() {
        let cfg = small_cfg();
        assert!(phase_scan(&blob(), &grid(), &[], 4, &cfg, &ScanOptions::default()).is_err());
        assert!(phase_scan(&blob(), &grid(), &[0.0], 0, &cfg, &ScanOptions::default()).is_err());
    }
}
