//! Transient SRS propagation: single-mode and two-mode coupled envelope
//! equations on the reduced (x, tau) grid.
//!
//! Single mode:
//! ```text
//!   d/dx eps_L = -q eps_S
//!   d/dx eps_S =  q* eps_L
//!   d/dtau q   =  1/4 eps_L eps_S*
//! ```
//!
//! Two modes (pump-pump coupling alpha, excited-excited coherence q3):
//! ```text
//!   d/dx eps_L  = -eps_S1 q1 - eps_S2 q2 - 1/4 eps_L q3 p~ + 1/4 eps_L q3* p
//!   d/dx eps_S1 =  eps_L q1* + 1/4 eps_S2 q3*
//!   d/dx eps_S2 =  eps_L q2* - 1/4 eps_S1 q3
//!   d/dtau q1   = 1/4 [-w1 eps_L eps_S1* - i alpha (eps_L eps_L*) p q2
//!                      - i eps_L eps_S2* q3 - i eps_S2 eps_S1* q2]
//!   d/dtau q2   = 1/4 [-w2 eps_L eps_S2* + i alpha (eps_L eps_L*) p~ q1
//!                      - i eps_L eps_S1* q3* + i eps_S1 eps_S2* q1]
//!   d/dtau q3   = 1/4 [ i eps_S2 eps_L* q1 + i eps_L eps_S1* q2*
//!                      - (eps_L eps_L*) p (w1 - w2) - eps_S2 eps_S1* (w1 - w2)]
//! ```
//! with `p = exp(-i delta tau)` and `p~` its conjugate. `delta` is the
//! spacing of the two vibrational modes (rad/ps): every envelope lives in its
//! own rotating frame, and after the frame bookkeeping the residual phase
//! lands exactly on the terms that consume the pump intensity beat (plus the
//! conjugate pair of q3 terms in the pump equation). When the pump lobe
//! separation matches delta/2pi, those beat terms acquire a resonant DC
//! component carrying the inter-lobe phase phi_l - this is the control
//! channel. The global 1/4 on the coherence equations keeps the two-mode
//! system exactly reducible to two independent single-mode systems at
//! alpha = 0 with q3 suppressed.
//!
//! The pointwise intensity |eps_L|^2 + |eps_S1|^2 + |eps_S2|^2 is conserved
//! along x analytically; the numerical residual gauges scheme error.
//!
//! Scheme: fields advance in x with a Heun (predictor-corrector midpoint)
//! rule; coherences are re-integrated along tau at each slice with a
//! trapezoidal predictor-corrector. Second order in both steps.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::envelope::{ComplexEnvelope, Domain};
use crate::error::{Error, Result};

/// Reduced propagation grid: `n_x` steps covering `[0, x_max]`.
/// The tau grid is inherited from the pump envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverGrid {
    pub n_x: usize,
    pub x_max: f64,
}

impl SolverGrid {
    pub fn new(n_x: usize, x_max: f64) -> Result<Self> {
        if n_x < 2 {
            return Err(Error::invalid("n_x", format!("must be >= 2, got {n_x}")));
        }
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::invalid(
                "x_max",
                format!("must be positive, got {x_max}"),
            ));
        }
        Ok(SolverGrid { n_x, x_max })
    }

    pub fn dx(&self) -> f64 {
        self.x_max / self.n_x as f64
    }
}

/// Full simulation configuration for a two-mode run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Pump-pump Raman coupling strength between the two excited modes.
    pub alpha: f64,
    /// Drop q3 and every term containing it.
    pub suppress_q3: bool,
    /// Population inversions, held constant (ground-state dominated: negative).
    pub w1_init: f64,
    pub w2_init: f64,
    /// Spacing of the two vibrational modes, rad/ps. The pump beat drives
    /// the inter-mode coupling resonantly when the lobe separation (THz)
    /// equals delta/2pi.
    pub delta: f64,
    /// Scalar applied to the (unit-energy) pump envelope at x = 0.
    pub pump_scale: f64,
    pub grid: SolverGrid,
    /// Std of the circular-Gaussian initial coherences.
    pub noise_sigma: f64,
    pub rng_seed: u64,
    /// Draw an independent coherence seed for every x slice instead of one
    /// seed shared by all slices.
    pub spatial_noise: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            alpha: 7.0,
            suppress_q3: false,
            w1_init: -1.0,
            w2_init: -1.0,
            delta: 2.0 * std::f64::consts::PI * 3.3,
            pump_scale: 1.0,
            grid: SolverGrid {
                n_x: 128,
                x_max: 20.0,
            },
            noise_sigma: 1e-3,
            rng_seed: 7,
            spatial_noise: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) {
            return Err(Error::invalid(
                "alpha",
                format!("must be >= 0, got {}", self.alpha),
            ));
        }
        if !(self.pump_scale > 0.0) {
            return Err(Error::invalid(
                "pump_scale",
                format!("must be positive, got {}", self.pump_scale),
            ));
        }
        if !(self.noise_sigma > 0.0) {
            return Err(Error::invalid(
                "noise_sigma",
                format!("must be positive, got {}", self.noise_sigma),
            ));
        }
        if !self.delta.is_finite() || !self.w1_init.is_finite() || !self.w2_init.is_finite() {
            return Err(Error::invalid("delta/w1/w2", "must be finite"));
        }
        SolverGrid::new(self.grid.n_x, self.grid.x_max).map(|_| ())
    }
}

/// Optical fields on the tau grid at one propagation slice.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub eps_l: ComplexEnvelope,
    pub eps_s1: ComplexEnvelope,
    pub eps_s2: ComplexEnvelope,
}

impl FieldState {
    /// Pointwise total intensity |eps_L|^2 + |eps_S1|^2 + |eps_S2|^2.
    pub fn total_intensity(&self) -> Vec<f64> {
        self.eps_l
            .samples()
            .iter()
            .zip(self.eps_s1.samples())
            .zip(self.eps_s2.samples())
            .map(|((l, s1), s2)| l.norm_sqr() + s1.norm_sqr() + s2.norm_sqr())
            .collect()
    }
}

/// Molecular coherences on the tau grid at one propagation slice.
#[derive(Debug, Clone)]
pub struct MediumState {
    pub q1: Vec<Complex64>,
    pub q2: Vec<Complex64>,
    pub q3: Vec<Complex64>,
    pub w1: f64,
    pub w2: f64,
}

/// Single-mode results.
#[derive(Debug, Clone)]
pub struct SingleModeFields {
    pub eps_l: ComplexEnvelope,
    pub eps_s: ComplexEnvelope,
}

#[derive(Debug, Clone)]
pub struct SingleModeMedium {
    pub q: Vec<Complex64>,
}

/// Initial coherence seeds: one pair for the whole run, or one per x slice.
#[derive(Debug, Clone)]
pub enum ModeSeeds {
    Uniform { q1: Complex64, q2: Complex64 },
    PerSlice(Vec<(Complex64, Complex64)>),
}

impl ModeSeeds {
    fn at(&self, slice: usize) -> (Complex64, Complex64) {
        match self {
            ModeSeeds::Uniform { q1, q2 } => (*q1, *q2),
            ModeSeeds::PerSlice(v) => v[slice.min(v.len() - 1)],
        }
    }
}

const DIVERGENCE_FACTOR: f64 = 1e6;

fn require_time_domain(env: &ComplexEnvelope) -> Result<()> {
    if env.domain() != Domain::Time {
        return Err(Error::DomainMismatch {
            expected: Domain::Time,
            got: env.domain(),
        });
    }
    Ok(())
}

/// Integrate the single-mode system from x = 0 to x = x_max.
///
/// The Stokes field starts at zero; the coherence starts at `q0` on the first
/// tau sample (impulsive seed at the leading edge).
pub fn integrate_single_mode(
    pump: &ComplexEnvelope,
    q0: Complex64,
    grid: &SolverGrid,
) -> Result<(SingleModeFields, SingleModeMedium)> {
    require_time_domain(pump)?;
    SolverGrid::new(grid.n_x, grid.x_max)?;
    let n = pump.grid().n_samples();
    let dtau = pump.grid().dt();
    let dx = grid.dx();

    let mut el: Vec<Complex64> = pump.samples().to_vec();
    let mut es = vec![Complex64::new(0.0, 0.0); n];
    let scale = el.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);

    let mut q = vec![Complex64::new(0.0, 0.0); n];
    let mut qp = vec![Complex64::new(0.0, 0.0); n];
    let mut elp = vec![Complex64::new(0.0, 0.0); n];
    let mut esp = vec![Complex64::new(0.0, 0.0); n];

    // the single-mode coherence derivative is q-independent, so the
    // trapezoidal sweep needs no predictor
    let sweep = |el: &[Complex64], es: &[Complex64], q: &mut [Complex64]| {
        q[0] = q0;
        for j in 0..n - 1 {
            let g0 = 0.25 * el[j] * es[j].conj();
            let g1 = 0.25 * el[j + 1] * es[j + 1].conj();
            q[j + 1] = q[j] + 0.5 * dtau * (g0 + g1);
        }
    };

    for step in 0..grid.n_x {
        sweep(&el, &es, &mut q);
        // predictor
        for j in 0..n {
            elp[j] = el[j] + dx * (-q[j] * es[j]);
            esp[j] = es[j] + dx * (q[j].conj() * el[j]);
        }
        sweep(&elp, &esp, &mut qp);
        // corrector
        for j in 0..n {
            let k1l = -q[j] * es[j];
            let k1s = q[j].conj() * el[j];
            let k2l = -qp[j] * esp[j];
            let k2s = qp[j].conj() * elp[j];
            el[j] += 0.5 * dx * (k1l + k2l);
            es[j] += 0.5 * dx * (k1s + k2s);
        }
        check_fields(&[&el, &es], scale, step)?;
    }
    sweep(&el, &es, &mut q);

    let g = *pump.grid();
    Ok((
        SingleModeFields {
            eps_l: ComplexEnvelope::new(g, Domain::Time, el)?,
            eps_s: ComplexEnvelope::new(g, Domain::Time, es)?,
        },
        SingleModeMedium { q },
    ))
}

fn check_fields(fields: &[&[Complex64]], scale: f64, step: usize) -> Result<()> {
    let mut max = 0.0f64;
    for f in fields {
        for c in *f {
            let m = c.norm_sqr();
            if m > max {
                max = m;
            }
        }
    }
    if !max.is_finite() {
        return Err(Error::NonFinite { slice: step });
    }
    if max.sqrt() > DIVERGENCE_FACTOR * scale {
        return Err(Error::Divergence { slice: step });
    }
    Ok(())
}

struct TwoModeWork {
    q1: Vec<Complex64>,
    q2: Vec<Complex64>,
    q3: Vec<Complex64>,
    q1p: Vec<Complex64>,
    q2p: Vec<Complex64>,
    q3p: Vec<Complex64>,
    elp: Vec<Complex64>,
    s1p: Vec<Complex64>,
    s2p: Vec<Complex64>,
    /// exp(-i delta tau) per sample
    beat: Vec<Complex64>,
}

struct TwoModeParams {
    alpha: f64,
    w1: f64,
    w2: f64,
    suppress_q3: bool,
}

/// Coherence derivatives at one tau sample.
#[inline]
fn q_rhs(
    p: &TwoModeParams,
    el: Complex64,
    s1: Complex64,
    s2: Complex64,
    q1: Complex64,
    q2: Complex64,
    q3: Complex64,
    beat: Complex64,
) -> (Complex64, Complex64, Complex64) {
    let iq = Complex64::new(0.0, 0.25);
    let intensity = el.norm_sqr();
    let pump_beat = intensity * beat; // (eps_L eps_L*) exp(-i delta tau)
    let mut dq1 = -0.25 * p.w1 * el * s1.conj() - iq * p.alpha * pump_beat * q2;
    let mut dq2 = -0.25 * p.w2 * el * s2.conj() + iq * p.alpha * pump_beat.conj() * q1;
    let cross = s2 * s1.conj();
    dq1 -= iq * cross * q2;
    dq2 += iq * cross.conj() * q1;
    if p.suppress_q3 {
        return (dq1, dq2, Complex64::new(0.0, 0.0));
    }
    dq1 -= iq * el * s2.conj() * q3;
    dq2 -= iq * el * s1.conj() * q3.conj();
    let dw = 0.25 * (p.w1 - p.w2);
    let dq3 = iq * s2 * el.conj() * q1 + iq * el * s1.conj() * q2.conj() - pump_beat * dw - cross * dw;
    (dq1, dq2, dq3)
}

/// Field derivatives at one tau sample.
#[inline]
fn field_rhs(
    p: &TwoModeParams,
    el: Complex64,
    s1: Complex64,
    s2: Complex64,
    q1: Complex64,
    q2: Complex64,
    q3: Complex64,
    beat: Complex64,
) -> (Complex64, Complex64, Complex64) {
    let mut dl = -s1 * q1 - s2 * q2;
    let mut ds1 = el * q1.conj();
    let mut ds2 = el * q2.conj();
    if !p.suppress_q3 {
        let q3b = q3 * beat.conj();
        dl += 0.25 * el * (q3b.conj() - q3b);
        ds1 += 0.25 * s2 * q3.conj();
        ds2 -= 0.25 * s1 * q3;
    }
    (dl, ds1, ds2)
}

/// Trapezoidal predictor-corrector sweep of the coherences along tau.
fn coherence_sweep(
    p: &TwoModeParams,
    el: &[Complex64],
    s1: &[Complex64],
    s2: &[Complex64],
    beat: &[Complex64],
    seed: (Complex64, Complex64),
    dtau: f64,
    q1: &mut [Complex64],
    q2: &mut [Complex64],
    q3: &mut [Complex64],
) {
    let n = el.len();
    q1[0] = seed.0;
    q2[0] = seed.1;
    q3[0] = Complex64::new(0.0, 0.0);
    for j in 0..n - 1 {
        let (a0, b0, c0) = q_rhs(p, el[j], s1[j], s2[j], q1[j], q2[j], q3[j], beat[j]);
        let p1 = q1[j] + dtau * a0;
        let p2 = q2[j] + dtau * b0;
        let p3 = q3[j] + dtau * c0;
        let (a1, b1, c1) = q_rhs(p, el[j + 1], s1[j + 1], s2[j + 1], p1, p2, p3, beat[j + 1]);
        q1[j + 1] = q1[j] + 0.5 * dtau * (a0 + a1);
        q2[j + 1] = q2[j] + 0.5 * dtau * (b0 + b1);
        q3[j + 1] = q3[j] + 0.5 * dtau * (c0 + c1);
    }
}

/// The pump (scaled by `pump_scale`) plus empty Stokes fields: the x = 0 state.
pub fn two_mode_initial_state(pump: &ComplexEnvelope, cfg: &SimConfig) -> Result<FieldState> {
    require_time_domain(pump)?;
    let g = *pump.grid();
    Ok(FieldState {
        eps_l: pump.scaled(Complex64::new(cfg.pump_scale, 0.0)),
        eps_s1: ComplexEnvelope::zero(g, Domain::Time),
        eps_s2: ComplexEnvelope::zero(g, Domain::Time),
    })
}

/// Integrate the two-mode system from x = 0 to x = x_max.
///
/// Stokes fields start at zero; `seeds` provides the q1/q2 boundary values at
/// the first tau sample (q3 starts at zero: no initial excited population).
pub fn integrate_two_mode(
    pump: &ComplexEnvelope,
    seeds: &ModeSeeds,
    cfg: &SimConfig,
) -> Result<(FieldState, MediumState)> {
    cfg.validate()?;
    require_time_domain(pump)?;
    let n = pump.grid().n_samples();
    let dtau = pump.grid().dt();
    let dx = cfg.grid.dx();
    let params = TwoModeParams {
        alpha: cfg.alpha,
        w1: cfg.w1_init,
        w2: cfg.w2_init,
        suppress_q3: cfg.suppress_q3,
    };

    let zero = Complex64::new(0.0, 0.0);
    let mut el: Vec<Complex64> = pump
        .samples()
        .iter()
        .map(|s| s * cfg.pump_scale)
        .collect();
    let mut s1 = vec![zero; n];
    let mut s2 = vec![zero; n];
    let scale = el.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);

    let mut w = TwoModeWork {
        q1: vec![zero; n],
        q2: vec![zero; n],
        q3: vec![zero; n],
        q1p: vec![zero; n],
        q2p: vec![zero; n],
        q3p: vec![zero; n],
        elp: vec![zero; n],
        s1p: vec![zero; n],
        s2p: vec![zero; n],
        beat: pump
            .grid()
            .time_axis()
            .iter()
            .map(|&t| Complex64::from_polar(1.0, -cfg.delta * t))
            .collect(),
    };

    for step in 0..cfg.grid.n_x {
        coherence_sweep(
            &params,
            &el,
            &s1,
            &s2,
            &w.beat,
            seeds.at(step),
            dtau,
            &mut w.q1,
            &mut w.q2,
            &mut w.q3,
        );
        for j in 0..n {
            let (dl, d1, d2) = field_rhs(
                &params, el[j], s1[j], s2[j], w.q1[j], w.q2[j], w.q3[j], w.beat[j],
            );
            w.elp[j] = el[j] + dx * dl;
            w.s1p[j] = s1[j] + dx * d1;
            w.s2p[j] = s2[j] + dx * d2;
        }
        coherence_sweep(
            &params,
            &w.elp,
            &w.s1p,
            &w.s2p,
            &w.beat,
            seeds.at(step + 1),
            dtau,
            &mut w.q1p,
            &mut w.q2p,
            &mut w.q3p,
        );
        for j in 0..n {
            let (k1l, k1s1, k1s2) = field_rhs(
                &params, el[j], s1[j], s2[j], w.q1[j], w.q2[j], w.q3[j], w.beat[j],
            );
            let (k2l, k2s1, k2s2) = field_rhs(
                &params, w.elp[j], w.s1p[j], w.s2p[j], w.q1p[j], w.q2p[j], w.q3p[j], w.beat[j],
            );
            el[j] += 0.5 * dx * (k1l + k2l);
            s1[j] += 0.5 * dx * (k1s1 + k2s1);
            s2[j] += 0.5 * dx * (k1s2 + k2s2);
        }
        check_fields(&[&el, &s1, &s2], scale, step)?;
    }
    coherence_sweep(
        &params,
        &el,
        &s1,
        &s2,
        &w.beat,
        seeds.at(cfg.grid.n_x),
        dtau,
        &mut w.q1,
        &mut w.q2,
        &mut w.q3,
    );

    let g = *pump.grid();
    Ok((
        FieldState {
            eps_l: ComplexEnvelope::new(g, Domain::Time, el)?,
            eps_s1: ComplexEnvelope::new(g, Domain::Time, s1)?,
            eps_s2: ComplexEnvelope::new(g, Domain::Time, s2)?,
        },
        MediumState {
            q1: w.q1,
            q2: w.q2,
            q3: w.q3,
            w1: cfg.w1_init,
            w2: cfg.w2_init,
        },
    ))
}

/// Max-over-tau relative drift of the pointwise total intensity between two
/// propagation slices. Zero for an exact integration.
pub fn conservation_residual(initial: &FieldState, final_state: &FieldState) -> f64 {
    let i0 = initial.total_intensity();
    let i1 = final_state.total_intensity();
    let peak = i0.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    i0.iter()
        .zip(&i1)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
        / peak
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{pulse_energy, to_time, GridSpec};
    use crate::shaping::{make_double_blob, DoubleBlobSpec};
    use crate::special::stokes_growth_oracle;
    use approx::assert_relative_eq;

    fn constant_pump(grid: &GridSpec, amp: f64) -> ComplexEnvelope {
        let samples = vec![Complex64::new(amp, 0.0); grid.n_samples()];
        ComplexEnvelope::new(*grid, Domain::Time, samples).unwrap()
    }

    fn blob_pump(grid: &GridSpec, phase: f64) -> ComplexEnvelope {
        let spec = DoubleBlobSpec {
            blob_width: 0.5,
            separation: 3.3,
            phase_offset: phase,
            amplitude_ratio: 1.0,
        };
        to_time(&make_double_blob(&spec, grid).unwrap()).unwrap()
    }

    #[test]
    fn zero_seed_is_a_fixed_point() {
        let grid = GridSpec::new(256, 0.02, 0.0).unwrap();
        let pump = blob_pump(&grid, 0.0);
        let sgrid = SolverGrid::new(64, 10.0).unwrap();
        let (fields, medium) =
            integrate_single_mode(&pump, Complex64::new(0.0, 0.0), &sgrid).unwrap();
        assert_eq!(pulse_energy(&fields.eps_s), 0.0);
        assert_eq!(fields.eps_l.samples(), pump.samples());
        assert!(medium.q.iter().all(|q| q.norm() == 0.0));
    }

    #[test]
    fn single_mode_matches_bessel_oracle() {
        // kappa * x * tau up to 9 on a unit-amplitude constant pump
        let grid = GridSpec::new(1024, 6.0 / 1024.0, 0.0).unwrap();
        let pump = constant_pump(&grid, 2.0); // kappa = 1
        let q0 = Complex64::new(1e-9, 5e-10);
        let sgrid = SolverGrid::new(1024, 1.5).unwrap();
        let (fields, _) = integrate_single_mode(&pump, q0, &sgrid).unwrap();
        let kappa = 1.0;
        let t0 = grid.time_axis()[0];
        let mut checked = 0;
        for (j, &t) in grid.time_axis().iter().enumerate() {
            let tau = t - t0;
            if kappa * sgrid.x_max * tau > 9.0 || tau <= 0.5 {
                continue;
            }
            let expected = q0.conj() * 2.0 * stokes_growth_oracle(kappa, sgrid.x_max, tau);
            let got = fields.eps_s.samples()[j];
            assert!(
                (got - expected).norm() <= 1e-4 * expected.norm(),
                "tau={tau}: got {got}, expected {expected}"
            );
            checked += 1;
        }
        assert!(checked > 100);
    }

    #[test]
    fn single_mode_pointwise_conservation() {
        let grid = GridSpec::new(512, 0.02, 0.0).unwrap();
        let pump = blob_pump(&grid, 1.0).scaled(Complex64::new(0.8, 0.0));
        let sgrid = SolverGrid::new(512, 40.0).unwrap();
        let q0 = Complex64::new(2e-3, -1e-3);
        let (fields, _) = integrate_single_mode(&pump, q0, &sgrid).unwrap();
        let peak = pump
            .samples()
            .iter()
            .map(|s| s.norm_sqr())
            .fold(0.0, f64::max);
        // appreciable transfer happened, and the sum is still conserved
        assert!(pulse_energy(&fields.eps_s) > 1e-6);
        for (j, (l, s)) in fields
            .eps_l
            .samples()
            .iter()
            .zip(fields.eps_s.samples())
            .enumerate()
        {
            let before = pump.samples()[j].norm_sqr();
            let after = l.norm_sqr() + s.norm_sqr();
            assert!((after - before).abs() <= 1e-6 * peak, "tau index {j}");
        }
    }

    #[test]
    fn two_mode_zero_pump_stays_dark() {
        let grid = GridSpec::new(128, 0.05, 0.0).unwrap();
        let pump = ComplexEnvelope::zero(grid, Domain::Time);
        let cfg = SimConfig {
            grid: SolverGrid::new(32, 5.0).unwrap(),
            ..SimConfig::default()
        };
        let seeds = ModeSeeds::Uniform {
            q1: Complex64::new(1e-3, 0.0),
            q2: Complex64::new(0.0, 1e-3),
        };
        let (fields, medium) = integrate_two_mode(&pump, &seeds, &cfg).unwrap();
        assert_eq!(pulse_energy(&fields.eps_s1), 0.0);
        assert_eq!(pulse_energy(&fields.eps_s2), 0.0);
        assert!(medium.q1.iter().all(|q| (q - medium.q1[0]).norm() == 0.0));
        assert!(medium.q2.iter().all(|q| (q - medium.q2[0]).norm() == 0.0));
    }

    #[test]
    fn decoupled_two_mode_equals_single_mode() {
        let grid = GridSpec::new(512, 0.02, 0.0).unwrap();
        let pump = blob_pump(&grid, 0.7);
        let cfg = SimConfig {
            alpha: 0.0,
            suppress_q3: true,
            pump_scale: 0.9,
            grid: SolverGrid::new(256, 30.0).unwrap(),
            ..SimConfig::default()
        };
        let q1 = Complex64::new(1.2e-3, -0.4e-3);
        let q2 = Complex64::new(-0.3e-3, 0.8e-3);
        let seeds = ModeSeeds::Uniform { q1, q2 };
        let (fields, _) = integrate_two_mode(&pump, &seeds, &cfg).unwrap();

        // a run seeded with only mode 1 must match the single-mode system
        // exactly: alpha = 0 and a suppressed q3 leave no coupling channel
        let scaled = pump.scaled(Complex64::new(cfg.pump_scale, 0.0));
        let (one, med1) = integrate_single_mode(&scaled, q1, &cfg.grid).unwrap();
        let seeds1 = ModeSeeds::Uniform {
            q1,
            q2: Complex64::new(0.0, 0.0),
        };
        let (f1, m1) = integrate_two_mode(&pump, &seeds1, &cfg).unwrap();
        let e_single = pulse_energy(&one.eps_s);
        let e_two = pulse_energy(&f1.eps_s1);
        assert_relative_eq!(e_two, e_single, max_relative = 1e-10);
        for (a, b) in f1.eps_s1.samples().iter().zip(one.eps_s.samples()) {
            assert!((a - b).norm() <= 1e-10 * cfg.pump_scale);
        }
        for (a, b) in m1.q1.iter().zip(&med1.q) {
            assert!((a - b).norm() <= 1e-10);
        }
        assert_eq!(pulse_energy(&f1.eps_s2), 0.0);

        // with both seeds present the pump feeds both modes
        assert!(pulse_energy(&fields.eps_s2) > 0.0);
    }

    #[test]
    fn alpha_zero_mode2_stays_empty_without_seed() {
        let grid = GridSpec::new(256, 0.04, 0.0).unwrap();
        let pump = blob_pump(&grid, 0.0);
        let cfg = SimConfig {
            alpha: 0.0,
            suppress_q3: true,
            pump_scale: 0.8,
            grid: SolverGrid::new(128, 20.0).unwrap(),
            ..SimConfig::default()
        };
        let seeds = ModeSeeds::Uniform {
            q1: Complex64::new(1e-3, 2e-4),
            q2: Complex64::new(0.0, 0.0),
        };
        let (fields, _) = integrate_two_mode(&pump, &seeds, &cfg).unwrap();
        assert!(pulse_energy(&fields.eps_s1) > 0.0);
        assert!(pulse_energy(&fields.eps_s2) <= 1e-30 * pulse_energy(&fields.eps_s1));
    }

    #[test]
    fn two_mode_pointwise_conservation_and_convergence() {
        let grid = GridSpec::new(512, 0.02, 0.0).unwrap();
        let pump = blob_pump(&grid, 2.1);
        let cfg = SimConfig {
            pump_scale: 0.8,
            grid: SolverGrid::new(256, 30.0).unwrap(),
            ..SimConfig::default()
        };
        let seeds = ModeSeeds::Uniform {
            q1: Complex64::new(1e-3, -2e-4),
            q2: Complex64::new(3e-4, 1e-3),
        };
        let initial = two_mode_initial_state(&pump, &cfg).unwrap();
        let (fields, _) = integrate_two_mode(&pump, &seeds, &cfg).unwrap();
        let res = conservation_residual(&initial, &fields);
        assert!(res <= 1e-6, "residual {res}");

        // doubling both grids improves the residual at least 4x
        let fine_grid = GridSpec::new(1024, 0.01, 0.0).unwrap();
        let fine_pump = blob_pump(&fine_grid, 2.1);
        let fine_cfg = SimConfig {
            grid: SolverGrid::new(512, 30.0).unwrap(),
            ..cfg.clone()
        };
        let fine_initial = two_mode_initial_state(&fine_pump, &fine_cfg).unwrap();
        let (fine_fields, _) = integrate_two_mode(&fine_pump, &seeds, &fine_cfg).unwrap();
        let fine_res = conservation_residual(&fine_initial, &fine_fields);
        assert!(
            fine_res * 4.0 <= res,
            "coarse {res} vs fine {fine_res}"
        );
    }

    #[test]
    fn seed_linearity_at_small_gain() {
        let grid = GridSpec::new(256, 0.04, 0.0).unwrap();
        let pump = blob_pump(&grid, 0.0);
        let cfg = SimConfig {
            pump_scale: 0.5,
            grid: SolverGrid::new(128, 10.0).unwrap(),
            ..SimConfig::default()
        };
        let q1 = Complex64::new(1e-6, 2e-7);
        let q2 = Complex64::new(-3e-7, 1e-6);
        let seeds = ModeSeeds::Uniform { q1, q2 };
        let (f, _) = integrate_two_mode(&pump, &seeds, &cfg).unwrap();
        // undepleted check
        assert!(
            pulse_energy(&f.eps_s1) + pulse_energy(&f.eps_s2)
                <= 0.01 * cfg.pump_scale * cfg.pump_scale
        );
        let c = 3.0;
        let seeds_scaled = ModeSeeds::Uniform {
            q1: q1 * c,
            q2: q2 * c,
        };
        let (fc, _) = integrate_two_mode(&pump, &seeds_scaled, &cfg).unwrap();
        for (a, b) in fc.eps_s1.samples().iter().zip(f.eps_s1.samples()) {
            assert!((a - b * c).norm() <= 1e-3 * c * b.norm().max(1e-12));
        }
    }

    #[test]
    fn global_pump_phase_covariance() {
        let grid = GridSpec::new(256, 0.04, 0.0).unwrap();
        let pump = blob_pump(&grid, 0.9);
        let cfg = SimConfig {
            pump_scale: 0.8,
            grid: SolverGrid::new(128, 20.0).unwrap(),
            ..SimConfig::default()
        };
        let seeds = ModeSeeds::Uniform {
            q1: Complex64::new(1e-3, 0.0),
            q2: Complex64::new(0.0, 1e-3),
        };
        let (f0, m0) = integrate_two_mode(&pump, &seeds, &cfg).unwrap();
        let theta = Complex64::from_polar(1.0, 0.77);
        let rotated = pump.scaled(theta);
        let (f1, m1) = integrate_two_mode(&rotated, &seeds, &cfg).unwrap();
        for (a, b) in f1.eps_s1.samples().iter().zip(f0.eps_s1.samples()) {
            assert!((a - b * theta).norm() <= 1e-10);
        }
        for (a, b) in f1.eps_s2.samples().iter().zip(f0.eps_s2.samples()) {
            assert!((a - b * theta).norm() <= 1e-10);
        }
        for (a, b) in m1.q1.iter().zip(&m0.q1) {
            assert!((a.norm() - b.norm()).abs() <= 1e-10);
        }
        assert_relative_eq!(
            pulse_energy(&f1.eps_s1),
            pulse_energy(&f0.eps_s1),
            max_relative = 1e-10
        );
    }

    #[test]
    fn divergence_is_reported() {
        let grid = GridSpec::new(128, 0.05, 0.0).unwrap();
        let pump = constant_pump(&grid, 10.0);
        let cfg = SimConfig {
            alpha: 7.0,
            pump_scale: 10.0,
            grid: SolverGrid::new(512, 500.0).unwrap(),
            ..SimConfig::default()
        };
        let seeds = ModeSeeds::Uniform {
            q1: Complex64::new(0.1, 0.0),
            q2: Complex64::new(0.0, 0.1),
        };
        match integrate_two_mode(&pump, &seeds, &cfg) {
            Err(Error::Divergence { .. }) | Err(Error::NonFinite { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
