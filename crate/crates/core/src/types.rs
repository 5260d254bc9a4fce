//! Domain types: run parameters, dynamical state, and per-sample observables.

use alloc::vec::Vec;

use crate::math::fmath;

/// How the initial particle distribution is laid out inside the waterbag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// Deterministic low-discrepancy lattice whose sample moments match the
    /// uniform distribution to high order. Default.
    QuietLattice,
    /// Seeded pseudo-random placement: i.i.d. uniform phases, randomly
    /// permuted stratified momenta (see [`crate::sample::sample_waterbag`]).
    PseudoRandom {
        /// Stream seed; identical seeds give bit-identical states.
        seed: u64,
    },
}

/// Initial-condition parameters of a rectangular bunched waterbag.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaterbagSpec {
    /// Half-width of the phase interval, radians, `0 < alpha <= pi`.
    pub alpha: f64,
    /// Full momentum spread (dimensionless), `>= 0`.
    pub delta_p: f64,
    /// Normalized seed intensity `I0/N >= 0`.
    pub i0_norm: f64,
    /// Number of particles, `>= 2`.
    pub n_particles: usize,
    /// Initial layout inside the waterbag.
    pub sampling: Sampling,
}

/// A single violated bound of [`WaterbagSpec`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SpecViolation {
    /// `alpha <= 0` or not finite.
    #[error("alpha must be positive and finite")]
    AlphaNotPositive,
    /// `alpha > pi`.
    #[error("alpha exceeds pi")]
    AlphaExceedsPi,
    /// `delta_p < 0` or not finite.
    #[error("delta_p must be non-negative and finite")]
    DeltaPNegative,
    /// `i0_norm < 0` or not finite.
    #[error("i0_norm must be non-negative and finite")]
    I0Negative,
    /// `n_particles < 2`.
    #[error("n_particles must be at least 2")]
    TooFewParticles,
}

/// Complete list of violated bounds, not just the first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecErrors(pub Vec<SpecViolation>);

impl core::fmt::Display for SpecErrors {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl core::error::Error for SpecErrors {}

impl WaterbagSpec {
    /// Convenience constructor with quiet-lattice sampling.
    pub fn quiet(alpha: f64, delta_p: f64, i0_norm: f64, n_particles: usize) -> Self {
        Self {
            alpha,
            delta_p,
            i0_norm,
            n_particles,
            sampling: Sampling::QuietLattice,
        }
    }

    /// Checks every invariant and returns the full list of violations.
    pub fn validate(&self) -> Result<(), SpecErrors> {
        let mut errs = Vec::new();
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            errs.push(SpecViolation::AlphaNotPositive);
        } else if self.alpha > core::f64::consts::PI {
            errs.push(SpecViolation::AlphaExceedsPi);
        }
        if !(self.delta_p >= 0.0) || !self.delta_p.is_finite() {
            errs.push(SpecViolation::DeltaPNegative);
        }
        if !(self.i0_norm >= 0.0) || !self.i0_norm.is_finite() {
            errs.push(SpecViolation::I0Negative);
        }
        if self.n_particles < 2 {
            errs.push(SpecViolation::TooFewParticles);
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SpecErrors(errs))
        }
    }

    /// Phase-space density `1/(2*alpha*delta_p)` of the filled waterbag;
    /// `None` for a cold beam (`delta_p = 0`).
    pub fn density(&self) -> Option<f64> {
        (self.delta_p > 0.0).then(|| 1.0 / (2.0 * self.alpha * self.delta_p))
    }

    /// Seed field amplitude `sqrt(i0_norm)`.
    pub fn a_x0(&self) -> f64 {
        fmath::sqrt(self.i0_norm)
    }
}

/// Validates a spec and hands it back unchanged, or reports every violation.
pub fn validate_spec(spec: WaterbagSpec) -> Result<WaterbagSpec, SpecErrors> {
    spec.validate()?;
    Ok(spec)
}

/// Particle phases/momenta plus the two real field components at one instant.
///
/// Phases are stored unwrapped (never folded to `[-pi, pi]`) so boundary
/// tracking and flip detection see continuous trajectories. The field is kept
/// in per-particle normalization: `a_x^2 + a_y^2` is the intensity per
/// particle.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemState {
    /// Time (rescaled propagation coordinate).
    pub t: f64,
    /// Phases, one per particle, unwrapped.
    pub theta: Vec<f64>,
    /// Momenta, one per particle.
    pub p: Vec<f64>,
    /// Real part of the normalized field.
    pub a_x: f64,
    /// Imaginary part of the normalized field.
    pub a_y: f64,
}

/// A state with non-finite entries or mismatched array lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum StateError {
    /// `theta` and `p` differ in length.
    #[error("theta and p must have identical length")]
    LengthMismatch,
    /// Some phase, momentum, field component, or the time is not finite.
    #[error("state contains non-finite values")]
    NonFinite,
}

impl SystemState {
    /// Number of particles.
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    /// True when the state holds no particles.
    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Per-particle intensity `a_x^2 + a_y^2`.
    pub fn intensity(&self) -> f64 {
        self.a_x * self.a_x + self.a_y * self.a_y
    }

    /// Verifies array lengths and finiteness of every entry.
    pub fn validate(&self) -> Result<(), StateError> {
        if self.theta.len() != self.p.len() {
            return Err(StateError::LengthMismatch);
        }
        let finite = self.t.is_finite()
            && self.a_x.is_finite()
            && self.a_y.is_finite()
            && self.theta.iter().all(|x| x.is_finite())
            && self.p.iter().all(|x| x.is_finite());
        if finite {
            Ok(())
        } else {
            Err(StateError::NonFinite)
        }
    }
}

/// Macroscopic observables at one sample time.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSample {
    /// Sample time.
    pub t: f64,
    /// Real field component.
    pub a_x: f64,
    /// Imaginary field component.
    pub a_y: f64,
    /// Per-particle intensity; equals `a_x^2 + a_y^2` exactly for samples
    /// produced by the integrator.
    pub intensity: f64,
    /// Bunching `(magnitude, phase)` for harmonics `k = 1..=k_max`.
    pub b: Vec<(f64, f64)>,
    /// Momentum variance `<p^2> - <p>^2`.
    pub dispersion: f64,
    /// Energy per particle.
    pub energy: f64,
    /// Momentum per particle (particles plus wave).
    pub momentum: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn valid_spec_passes_unchanged() {
        let s = WaterbagSpec::quiet(PI / 3.0, 0.1, 0.0, 10_000);
        assert_eq!(validate_spec(s).unwrap(), s);
    }

    #[test]
    fn zero_alpha_is_rejected() {
        let s = WaterbagSpec::quiet(0.0, 0.1, 0.0, 100);
        let errs = s.validate().unwrap_err();
        assert_eq!(errs.0, [SpecViolation::AlphaNotPositive]);
    }

    #[test]
    fn oversized_alpha_is_rejected() {
        let s = WaterbagSpec::quiet(1.5 * PI, 0.1, 0.0, 100);
        let errs = s.validate().unwrap_err();
        assert_eq!(errs.0, [SpecViolation::AlphaExceedsPi]);
    }

    #[test]
    fn all_violations_are_reported_together() {
        let s = WaterbagSpec::quiet(-1.0, -0.1, -2.0, 1);
        let errs = s.validate().unwrap_err();
        assert_eq!(
            errs.0,
            [
                SpecViolation::AlphaNotPositive,
                SpecViolation::DeltaPNegative,
                SpecViolation::I0Negative,
                SpecViolation::TooFewParticles,
            ]
        );
    }

    #[test]
    fn density_is_lazy_for_cold_beams() {
        assert_eq!(WaterbagSpec::quiet(1.0, 0.0, 0.0, 2).density(), None);
        let f0 = WaterbagSpec::quiet(1.0, 0.5, 0.0, 2).density().unwrap();
        assert_eq!(f0, 1.0);
    }

    #[test]
    fn state_validation_catches_mismatch_and_nan() {
        let mut st = SystemState {
            t: 0.0,
            theta: alloc::vec![0.0, 1.0],
            p: alloc::vec![0.0],
            a_x: 0.0,
            a_y: 0.0,
        };
        assert_eq!(st.validate(), Err(StateError::LengthMismatch));
        st.p.push(f64::NAN);
        assert_eq!(st.validate(), Err(StateError::NonFinite));
        st.p[1] = 0.0;
        assert_eq!(st.validate(), Ok(()));
    }
}
