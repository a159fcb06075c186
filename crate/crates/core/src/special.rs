//! Modified Bessel series for the small-signal transient-gain oracle.
//!
//! The linearized single-mode system (constant pump amplitude `A`, coherence
//! seeded at the leading edge) has the closed-form Stokes solution
//!
//! ```text
//!   eps_S(x, tau) = q0* A sqrt(x / (kappa tau)) I1(2 sqrt(kappa x tau)),
//!   kappa = |A|^2 / 4,
//! ```
//!
//! equivalently `q0* A x sum_n (kappa x tau)^n / (n! (n+1)!)`. This module
//! evaluates that series directly and independently of the propagation
//! scheme, so it can gate the solver.

/// Modified Bessel function of the first kind, order 1, by power series.
///
/// Converges quickly for the moderate arguments used here (|z| <= ~30).
pub fn bessel_i1(z: f64) -> f64 {
    let half = z / 2.0;
    let mut term = half; // n = 0: (z/2) / (0! 1!)
    let mut sum = term;
    let z2 = half * half;
    for n in 1..200 {
        term *= z2 / (n as f64 * (n + 1) as f64);
        sum += term;
        if term.abs() <= 1e-16 * sum.abs() {
            break;
        }
    }
    sum
}

/// `sqrt(x / (kappa tau)) I1(2 sqrt(kappa x tau))`, evaluated through the
/// series `x sum_n (kappa x tau)^n / (n! (n+1)!)` which is regular at tau = 0.
///
/// Multiply by `q0* A` for the small-signal Stokes field.
pub fn stokes_growth_oracle(kappa: f64, x: f64, tau: f64) -> f64 {
    let z = kappa * x * tau;
    let mut term = 1.0; // n = 0
    let mut sum = term;
    for n in 1..200 {
        term *= z / (n as f64 * (n + 1) as f64);
        sum += term;
        if term.abs() <= 1e-16 * sum.abs() {
            break;
        }
    }
    x * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn i1_reference_values() {
        // Abramowitz & Stegun table values
        assert_relative_eq!(bessel_i1(0.5), 0.2578943054, max_relative = 1e-9);
        assert_relative_eq!(bessel_i1(1.0), 0.5651591040, max_relative = 1e-9);
        assert_relative_eq!(bessel_i1(2.0), 1.5906368546, max_relative = 1e-9);
        assert_relative_eq!(bessel_i1(5.0), 24.335642142, max_relative = 1e-9);
        assert_relative_eq!(bessel_i1(6.0), 61.341936807, max_relative = 1e-9);
    }

    #[test]
    fn i1_small_argument_behavior() {
        // I1(z) ~ z/2 + z^3/16
        let z = 1e-4;
        assert_relative_eq!(bessel_i1(z), z / 2.0, max_relative = 1e-8);
    }

    #[test]
    fn oracle_consistent_with_i1() {
        for &(kappa, x, tau) in &[(1.0_f64, 1.5, 4.0), (0.25, 3.0, 2.0), (2.0, 0.5, 1.1)] {
            let direct = (x / (kappa * tau)).sqrt() * bessel_i1(2.0 * (kappa * x * tau).sqrt());
            assert_relative_eq!(
                stokes_growth_oracle(kappa, x, tau),
                direct,
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn oracle_regular_at_zero_tau() {
        assert_relative_eq!(stokes_growth_oracle(1.0, 2.0, 0.0), 2.0, max_relative = 1e-15);
    }
}
