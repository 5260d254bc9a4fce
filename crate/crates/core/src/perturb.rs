//! Closed-form short-time expansions of the field, boundary, and macroscopic
//! observables, with explicit truncation orders and validity windows.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::fmath;
use crate::nbody::{IntegratorConfig, RunMetadata};
use crate::types::WaterbagSpec;

/// Seed intensities below this use the explicit quartic branch of the energy
/// dispersion; above it the characteristic-time form is numerically safe.
pub const D_BRANCH_THRESHOLD: f64 = 1e-6;

/// Validity window of the expansions: half-width bound.
pub const VALIDITY_ALPHA_MAX: f64 = core::f64::consts::FRAC_PI_2;
/// Validity window of the expansions: seed-intensity bound.
pub const VALIDITY_I0_MAX: f64 = 0.8;

/// Which parabola branch of the boundary is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Upper boundary (`+`).
    Plus,
    /// Lower boundary (`-`).
    Minus,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
}

/// A truncated power series in `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    coeffs: Vec<(u32, f64)>,
    truncation: u32,
    note: &'static str,
}

fn powu(t: f64, k: u32) -> f64 {
    let mut acc = 1.0;
    for _ in 0..k {
        acc *= t;
    }
    acc
}

impl Expansion {
    /// Builds a series from `(power, coefficient)` pairs with strictly
    /// increasing powers, cut at `O(t^truncation)`.
    pub fn new(coeffs: Vec<(u32, f64)>, truncation: u32, note: &'static str) -> Self {
        debug_assert!(coeffs.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(coeffs.last().is_none_or(|&(p, _)| truncation + 1 > p));
        Self {
            coeffs,
            truncation,
            note,
        }
    }

    /// Evaluates the stored polynomial at `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &(p, c) in &self.coeffs {
            acc += c * powu(t, p);
        }
        acc
    }

    /// Term-by-term derivative (truncation drops by one power).
    pub fn derivative(&self) -> Expansion {
        Expansion {
            coeffs: self
                .coeffs
                .iter()
                .filter(|&&(p, _)| p > 0)
                .map(|&(p, c)| (p - 1, c * p as f64))
                .collect(),
            truncation: self.truncation.saturating_sub(1),
            note: self.note,
        }
    }

    /// `(power, coefficient)` pairs in increasing power order.
    pub fn coefficients(&self) -> &[(u32, f64)] {
        &self.coeffs
    }

    /// Power at which the series was cut.
    pub fn truncation_order(&self) -> u32 {
        self.truncation
    }

    /// Human-readable validity remark.
    pub fn validity_note(&self) -> &'static str {
        self.note
    }
}

const WINDOW_NOTE: &str = "short-time expansion; accurate for alpha <= pi/2, i0_norm <= 0.8";

/// `sin(alpha)/alpha` with the small-argument limit.
pub fn s_alpha(alpha: f64) -> f64 {
    if fmath::abs(alpha) < 1e-8 {
        1.0
    } else {
        fmath::sin(alpha) / alpha
    }
}

fn ay_coeffs(spec: &WaterbagSpec) -> (f64, f64) {
    let s = s_alpha(spec.alpha);
    let k = 4.0 - 8.0 * s + 9.0 * s * s;
    (spec.a_x0() / 15.0 * k, s / 60.0 * k)
}

/// In-phase field component: `sqrt(i0) + s_alpha t + O(t^4)`.
pub fn field_x_expansion(spec: &WaterbagSpec) -> Expansion {
    Expansion::new(
        vec![(0, spec.a_x0()), (1, s_alpha(spec.alpha))],
        4,
        WINDOW_NOTE,
    )
}

/// Evaluates [`field_x_expansion`] at `t`.
pub fn field_x(t: f64, spec: &WaterbagSpec) -> f64 {
    field_x_expansion(spec).eval(t)
}

/// Quadrature field component: cubic onset plus quartic correction,
/// both proportional to `4 - 8 s_alpha + 9 s_alpha^2`.
pub fn field_y_expansion(spec: &WaterbagSpec) -> Expansion {
    let (c3, c4) = ay_coeffs(spec);
    Expansion::new(vec![(3, c3), (4, c4)], 5, WINDOW_NOTE)
}

/// Evaluates [`field_y_expansion`] at `t`.
pub fn field_y(t: f64, spec: &WaterbagSpec) -> f64 {
    field_y_expansion(spec).eval(t)
}

/// Lateral boundary phase: `±alpha - sqrt(i0) cos(alpha) t^2
/// - (1/3) s_alpha cos(alpha) t^3 + O(t^4)`.
pub fn theta_boundary_expansion(spec: &WaterbagSpec, side: Side) -> Expansion {
    let ca = fmath::cos(spec.alpha);
    Expansion::new(
        vec![
            (0, side.sign() * spec.alpha),
            (2, -spec.a_x0() * ca),
            (3, -s_alpha(spec.alpha) * ca / 3.0),
        ],
        4,
        WINDOW_NOTE,
    )
}

/// Evaluates [`theta_boundary_expansion`] at `t`.
pub fn theta_boundary(t: f64, spec: &WaterbagSpec, side: Side) -> f64 {
    theta_boundary_expansion(spec, side).eval(t)
}

/// Parabola offset: `±delta_p/2 - 2 sqrt(i0) t - s_alpha t^2 + O(t^3)`.
pub fn v_expansion(spec: &WaterbagSpec, side: Side) -> Expansion {
    Expansion::new(
        vec![
            (0, side.sign() * 0.5 * spec.delta_p),
            (1, -2.0 * spec.a_x0()),
            (2, -s_alpha(spec.alpha)),
        ],
        3,
        WINDOW_NOTE,
    )
}

/// Evaluates [`v_expansion`] at `t`.
pub fn v_pm(t: f64, spec: &WaterbagSpec, side: Side) -> f64 {
    v_expansion(spec, side).eval(t)
}

/// Shared parabola curvature: `(6/alpha^2)(1-s_alpha) sqrt(i0) t
/// + (3/alpha^2) s_alpha (1-s_alpha) t^2 + O(t^3)`.
pub fn u_expansion(spec: &WaterbagSpec) -> Expansion {
    let s = s_alpha(spec.alpha);
    let a2 = spec.alpha * spec.alpha;
    Expansion::new(
        vec![
            (1, 6.0 / a2 * (1.0 - s) * spec.a_x0()),
            (2, 3.0 / a2 * s * (1.0 - s)),
        ],
        3,
        WINDOW_NOTE,
    )
}

/// Evaluates [`u_expansion`] at `t`.
pub fn u_coeff(t: f64, spec: &WaterbagSpec) -> f64 {
    u_expansion(spec).eval(t)
}

/// Boundary momentum at phase `theta`: `u(t) theta^2 + v_pm(t)`.
pub fn p_boundary(theta: f64, t: f64, spec: &WaterbagSpec, side: Side) -> f64 {
    u_coeff(t, spec) * theta * theta + v_pm(t, spec, side)
}

/// Intensity: `i0 + 2 sqrt(i0) s_alpha t + s_alpha^2 t^2 + O(t^4)`.
pub fn intensity_expansion(spec: &WaterbagSpec) -> Expansion {
    let s = s_alpha(spec.alpha);
    Expansion::new(
        vec![(0, spec.i0_norm), (1, 2.0 * spec.a_x0() * s), (2, s * s)],
        4,
        WINDOW_NOTE,
    )
}

/// Evaluates [`intensity_expansion`] at `t`.
pub fn intensity(t: f64, spec: &WaterbagSpec) -> f64 {
    intensity_expansion(spec).eval(t)
}

/// A closed form was requested outside its domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PerturbError {
    /// Gain and characteristic time need a nonzero seed.
    #[error("gain undefined for zero seed")]
    GainUndefinedForZeroSeed,
    /// `time_to_gain` needs a target `>= 1`.
    #[error("gain target must be at least 1")]
    GainTargetBelowOne,
}

/// Characteristic growth time `sqrt(i0)/s_alpha`.
pub fn characteristic_time(spec: &WaterbagSpec) -> Result<f64, PerturbError> {
    if spec.i0_norm <= 0.0 {
        return Err(PerturbError::GainUndefinedForZeroSeed);
    }
    Ok(spec.a_x0() / s_alpha(spec.alpha))
}

/// Gain `(1 + t/T_c)^2`; depends on `t` only through `t/T_c`.
pub fn gain(t: f64, spec: &WaterbagSpec) -> Result<f64, PerturbError> {
    let tc = characteristic_time(spec)?;
    let x = 1.0 + t / tc;
    Ok(x * x)
}

/// Inverts [`gain`]: the time at which the gain first reaches `g_star`.
pub fn time_to_gain(g_star: f64, spec: &WaterbagSpec) -> Result<f64, PerturbError> {
    if !(g_star >= 1.0) {
        return Err(PerturbError::GainTargetBelowOne);
    }
    let tc = characteristic_time(spec)?;
    Ok(tc * (fmath::sqrt(g_star) - 1.0))
}

/// Momentum variance with the default branch threshold
/// [`D_BRANCH_THRESHOLD`]; see [`energy_dispersion_with_threshold`].
pub fn energy_dispersion(t: f64, spec: &WaterbagSpec) -> f64 {
    energy_dispersion_with_threshold(t, spec, D_BRANCH_THRESHOLD)
}

/// Momentum variance `D(t)`.
///
/// Above `branch_threshold` the characteristic-time form
/// `delta_p^2/12 + (16/5) i0^2 (s_alpha-1)^2/s_alpha^2 [(t/T_c)^2 + (t/T_c)^3]`
/// is used; below it the seed-free quartic
/// `delta_p^2/12 + (4/5) s_alpha^2 (s_alpha-1)^2 t^4` (the former is
/// singular as `i0 -> 0`).
pub fn energy_dispersion_with_threshold(t: f64, spec: &WaterbagSpec, branch_threshold: f64) -> f64 {
    let d0 = spec.delta_p * spec.delta_p / 12.0;
    let s = s_alpha(spec.alpha);
    if s == 0.0 {
        return d0;
    }
    let sm1 = s - 1.0;
    if spec.i0_norm < branch_threshold {
        return d0 + 0.8 * s * s * sm1 * sm1 * powu(t, 4);
    }
    let x = t * s / spec.a_x0();
    d0 + 3.2 * spec.i0_norm * spec.i0_norm * (sm1 * sm1) / (s * s) * (x * x + x * x * x)
}

/// Bunching of harmonic `k` to leading order: `sin(k alpha)/(k alpha)`,
/// constant up to `O(t^3)`.
pub fn bunching_prediction(k: u32, spec: &WaterbagSpec) -> f64 {
    s_alpha(k as f64 * spec.alpha)
}

/// Raised when a spec sits outside the window the expansions were derived
/// for (`alpha <= pi/2`, `i0_norm <= 0.8`). Evaluation still proceeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValidityWarning {
    /// `alpha` exceeds the window bound.
    pub alpha_above: bool,
    /// `i0_norm` exceeds the window bound.
    pub i0_above: bool,
}

impl core::fmt::Display for ValidityWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "outside expansion validity window:")?;
        if self.alpha_above {
            write!(f, " alpha > pi/2")?;
        }
        if self.i0_above {
            write!(f, " i0_norm > 0.8")?;
        }
        Ok(())
    }
}

/// Checks the spec against the expansion validity window.
pub fn validity(spec: &WaterbagSpec) -> Option<ValidityWarning> {
    let tol = 1.0 + 1e-12;
    let w = ValidityWarning {
        alpha_above: spec.alpha > VALIDITY_ALPHA_MAX * tol,
        i0_above: spec.i0_norm > VALIDITY_I0_MAX * tol,
    };
    (w.alpha_above || w.i0_above).then_some(w)
}

/// One predicted sample; same layout as the simulated observables.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSample {
    /// Sample time.
    pub t: f64,
    /// Real field component.
    pub a_x: f64,
    /// Imaginary field component.
    pub a_y: f64,
    /// Closed-form intensity (differs from `a_x^2 + a_y^2` by the
    /// truncation error).
    pub intensity: f64,
    /// Bunching `(magnitude, phase)` for `k = 1..=k_max`.
    pub b: Vec<(f64, f64)>,
    /// Momentum variance.
    pub dispersion: f64,
    /// Conserved energy per particle, `delta_p^2/24`.
    pub energy: f64,
    /// Conserved momentum per particle, `i0_norm`.
    pub momentum: f64,
}

/// Closed-form counterpart of a simulation series.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSeries {
    /// Samples at the integrator's observation times.
    pub samples: Vec<PredictionSample>,
    /// Set when the spec is outside the expansion validity window.
    pub warning: Option<ValidityWarning>,
    /// Spec and config echo.
    pub metadata: RunMetadata,
}

/// Evaluates every closed form on the observation grid of `config`, so the
/// result aligns sample-for-sample with [`crate::nbody::run`] on the same
/// config.
pub fn prediction_series(
    spec: &WaterbagSpec,
    config: &IntegratorConfig,
    d_branch_threshold: f64,
) -> PredictionSeries {
    let ax = field_x_expansion(spec);
    let ay = field_y_expansion(spec);
    let int = intensity_expansion(spec);
    let energy = spec.delta_p * spec.delta_p / 24.0;
    let b: Vec<(f64, f64)> = (1..=config.k_max)
        .map(|k| {
            let v = bunching_prediction(k, spec);
            (
                fmath::abs(v),
                if v < 0.0 { core::f64::consts::PI } else { 0.0 },
            )
        })
        .collect();
    let samples = config
        .sample_times()
        .into_iter()
        .map(|t| PredictionSample {
            t,
            a_x: ax.eval(t),
            a_y: ay.eval(t),
            intensity: int.eval(t),
            b: b.clone(),
            dispersion: energy_dispersion_with_threshold(t, spec, d_branch_threshold),
            energy,
            momentum: spec.i0_norm,
        })
        .collect();
    PredictionSeries {
        samples,
        warning: validity(spec),
        metadata: RunMetadata {
            spec: *spec,
            config: *config,
        },
    }
}

/// Residual of the momentum bookkeeping identity evaluated with the module's
/// own expansions: seed momentum minus field momentum minus the waterbag
/// integral of `p`. `None` for a cold beam. Vanishes at `t = 0` and decays
/// with the stated truncation orders.
pub fn momentum_balance_residual(t: f64, spec: &WaterbagSpec) -> Option<f64> {
    let f0 = spec.density()?;
    let ax = field_x(t, spec);
    let ay = field_y(t, spec);
    let u = u_coeff(t, spec);
    let vp = v_pm(t, spec, Side::Plus);
    let vm = v_pm(t, spec, Side::Minus);
    let tp = theta_boundary(t, spec, Side::Plus);
    let tm = theta_boundary(t, spec, Side::Minus);
    let dv = vp - vm;
    let vbar = vp + vm;
    let beam = f0 * ((powu(tp, 3) - powu(tm, 3)) * u * dv / 3.0 + (tp - tm) * vbar * dv / 2.0);
    Some(spec.i0_norm - (ax * ax + ay * ay + beam))
}

/// Residual of the energy bookkeeping identity: initial energy minus the
/// waterbag kinetic integral minus the wave term `2(A_y A_x' - A_x A_y')`.
/// `None` for a cold beam.
pub fn energy_balance_residual(t: f64, spec: &WaterbagSpec) -> Option<f64> {
    let f0 = spec.density()?;
    let ax = field_x(t, spec);
    let ay = field_y(t, spec);
    let dax = field_x_expansion(spec).derivative().eval(t);
    let day = field_y_expansion(spec).derivative().eval(t);
    let u = u_coeff(t, spec);
    let vp = v_pm(t, spec, Side::Plus);
    let vm = v_pm(t, spec, Side::Minus);
    let tp = theta_boundary(t, spec, Side::Plus);
    let tm = theta_boundary(t, spec, Side::Minus);
    let dv = vp - vm;
    let vbar = vp + vm;
    let kinetic = f0 * dv / 6.0
        * (0.6 * u * u * (powu(tp, 5) - powu(tm, 5))
            + u * vbar * (powu(tp, 3) - powu(tm, 3))
            + (tp - tm) * (3.0 * vbar * vbar + dv * dv) / 4.0);
    let wave = 2.0 * (ay * dax - ax * day);
    Some(spec.delta_p * spec.delta_p / 24.0 - (kinetic + wave))
}
