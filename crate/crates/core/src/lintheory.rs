//! Linear dispersion relation of homogeneous equilibria: cubic reduction,
//! complex root solving, and stability classification.
//!
//! Frequencies follow the `exp(-i omega t)` convention, so a positive
//! imaginary part means exponential growth of the field amplitude and the
//! intensity e-folds at twice the growth rate.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::math::fmath;

/// Homogeneous equilibrium whose dispersion relation reduces to a cubic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EquilibriumProfile {
    /// All particles at `p = 0`.
    ColdBeam,
    /// Uniform momentum spread of full width `delta_p`.
    Waterbag {
        /// Full momentum spread, `>= 0`.
        delta_p: f64,
    },
}

impl EquilibriumProfile {
    fn half_spread(&self) -> f64 {
        match *self {
            EquilibriumProfile::ColdBeam => 0.0,
            EquilibriumProfile::Waterbag { delta_p } => 0.5 * delta_p,
        }
    }
}

/// Monic cubic `omega^3 + c2 omega^2 + c1 omega + c0 = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicCoeffs {
    /// Quadratic coefficient.
    pub c2: f64,
    /// Linear coefficient.
    pub c1: f64,
    /// Constant coefficient.
    pub c0: f64,
}

impl CubicCoeffs {
    /// Evaluates the cubic at `z`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        ((z + self.c2) * z + self.c1) * z + self.c0
    }

    fn eval_deriv(&self, z: Complex64) -> Complex64 {
        (3.0 * z + 2.0 * self.c2) * z + self.c1
    }

    /// Back-substitution residual `|f(z)|`.
    pub fn residual(&self, z: Complex64) -> f64 {
        fmath::sqrt(self.eval(z).norm_sqr())
    }
}

/// Dispersion cubic `omega^3 - (delta_p/2)^2 omega - 1 = 0` of the profile
/// (`omega^3 = 1` for the cold beam).
pub fn dispersion_polynomial(profile: &EquilibriumProfile) -> CubicCoeffs {
    let a = profile.half_spread();
    CubicCoeffs {
        c2: 0.0,
        c1: -a * a,
        c0: -1.0,
    }
}

/// Sign of the imaginary part under the `exp(-i omega t)` convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    /// `Im omega > 0`: exponential growth.
    Unstable,
    /// `Im omega = 0` within tolerance: purely oscillatory.
    Neutral,
    /// `Im omega < 0`: exponential decay.
    Damped,
}

/// One root of the dispersion relation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DispersionRoot {
    /// Complex frequency.
    pub omega: Complex64,
    /// Back-substitution residual `|omega^3 + c1 omega + c0|`.
    pub residual: f64,
    /// Stability class from the sign of `Im omega`.
    pub classification: Stability,
}

/// Why the solver refused to run or to vouch for its roots.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum SolveError {
    /// `tol <= 0`.
    #[error("tolerance must be positive")]
    TolNotPositive,
    /// `delta_p < 0` or not finite.
    #[error("delta_p must be non-negative and finite")]
    NegativeSpread,
    /// Refinement stalled above the requested residual.
    #[error("root residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualAboveTolerance {
        /// Achieved residual.
        residual: f64,
        /// Requested bound.
        tol: f64,
    },
}

/// Imaginary parts below this are treated as zero when classifying.
pub const IM_TOL: f64 = 1e-9;

/// Roots of the cold-beam cubic `omega^3 = 1`; the standard Newton seeds for
/// nearby profiles.
pub fn cold_beam_seeds() -> [Complex64; 3] {
    let half_sqrt3 = 0.8660254037844386;
    [
        Complex64::new(1.0, 0.0),
        Complex64::new(-0.5, half_sqrt3),
        Complex64::new(-0.5, -half_sqrt3),
    ]
}

/// Newton iteration in the complex plane from `seed`; returns the refined
/// point (unchanged when the derivative vanishes at the seed).
pub fn newton_polish(cubic: &CubicCoeffs, seed: Complex64, tol: f64, max_iter: u32) -> Complex64 {
    let mut z = seed;
    for _ in 0..max_iter {
        let f = cubic.eval(z);
        if fmath::sqrt(f.norm_sqr()) <= tol {
            break;
        }
        let df = cubic.eval_deriv(z);
        if df.norm_sqr() == 0.0 {
            break;
        }
        z -= f / df;
    }
    z
}

/// General solver entry: refines every seed with [`newton_polish`]. The
/// analytic fast path below seeds itself; other equilibria can start from
/// [`cold_beam_seeds`].
pub fn newton_roots(
    cubic: &CubicCoeffs,
    seeds: &[Complex64],
    tol: f64,
    max_iter: u32,
) -> Vec<Complex64> {
    seeds
        .iter()
        .map(|&s| newton_polish(cubic, s, tol, max_iter))
        .collect()
}

/// All three roots of a monic cubic, by the closed-form resolvent.
pub fn solve_cubic(cubic: &CubicCoeffs) -> [Complex64; 3] {
    let shift = cubic.c2 / 3.0;
    let p = cubic.c1 - cubic.c2 * cubic.c2 / 3.0;
    let q = cubic.c0 - cubic.c1 * cubic.c2 / 3.0 + 2.0 * cubic.c2 * cubic.c2 * cubic.c2 / 27.0;
    let disc = 0.25 * q * q + p * p * p / 27.0;
    let ys: [Complex64; 3] = if disc > 0.0 {
        let r = fmath::sqrt(disc);
        let u = if -0.5 * q + r != 0.0 || -0.5 * q - r == 0.0 {
            fmath::cbrt(-0.5 * q + r)
        } else {
            fmath::cbrt(-0.5 * q - r)
        };
        let v = if u == 0.0 { 0.0 } else { -p / (3.0 * u) };
        let re = -0.5 * (u + v);
        let im = 0.8660254037844386 * (u - v);
        [
            Complex64::new(u + v, 0.0),
            Complex64::new(re, im),
            Complex64::new(re, -im),
        ]
    } else if p == 0.0 {
        [Complex64::new(0.0, 0.0); 3]
    } else {
        let m = 2.0 * fmath::sqrt(-p / 3.0);
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = fmath::acos(arg) / 3.0;
        let third = 2.0 * core::f64::consts::FRAC_PI_3;
        [
            Complex64::new(m * fmath::cos(phi), 0.0),
            Complex64::new(m * fmath::cos(phi - third), 0.0),
            Complex64::new(m * fmath::cos(phi - 2.0 * third), 0.0),
        ]
    };
    ys.map(|y| y - shift)
}

/// Solves the dispersion relation of `profile`: closed-form roots polished by
/// Newton iteration, each verified by back-substitution to `tol`, sorted by
/// descending imaginary part.
pub fn solve_dispersion(
    profile: &EquilibriumProfile,
    tol: f64,
) -> Result<Vec<DispersionRoot>, SolveError> {
    if !(tol > 0.0) {
        return Err(SolveError::TolNotPositive);
    }
    let spread = profile.half_spread();
    if !(spread >= 0.0) || !spread.is_finite() {
        return Err(SolveError::NegativeSpread);
    }
    let cubic = dispersion_polynomial(profile);
    let mut roots: Vec<DispersionRoot> = solve_cubic(&cubic)
        .into_iter()
        .map(|seed| {
            let omega = newton_polish(&cubic, seed, tol * 0.01, 60);
            let residual = cubic.residual(omega);
            let classification = if omega.im > IM_TOL {
                Stability::Unstable
            } else if omega.im < -IM_TOL {
                Stability::Damped
            } else {
                Stability::Neutral
            };
            DispersionRoot {
                omega,
                residual,
                classification,
            }
        })
        .collect();
    for r in &roots {
        if r.residual > tol {
            return Err(SolveError::ResidualAboveTolerance {
                residual: r.residual,
                tol,
            });
        }
    }
    roots.sort_by(|a, b| {
        (b.omega.im, b.omega.re)
            .partial_cmp(&(a.omega.im, a.omega.re))
            .expect("finite roots")
    });
    Ok(roots)
}

/// Field growth rate: `max(0, max Im omega)`. Intensity e-folds at twice
/// this value.
pub fn growth_rate(roots: &[DispersionRoot]) -> f64 {
    roots.iter().fold(0.0, |acc, r| acc.max(r.omega.im))
}
