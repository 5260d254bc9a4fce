//! Self-consistent integration of the coupled particle + wave equations:
//! `dtheta_j/dt = p_j`, `dp_j/dt = -2(a_x cos theta_j - a_y sin theta_j)`,
//! `da_x/dt = <cos theta>`, `da_y/dt = -<sin theta>`, with conservation
//! monitoring of the per-particle energy and momentum.

use alloc::vec;
use alloc::vec::Vec;

use crate::diag;
use crate::math::{chunked_sum2, fmath, Neumaier, CHUNK};
use crate::sample::sample_waterbag;
use crate::types::{ObservableSample, SpecErrors, StateError, SystemState, WaterbagSpec};

/// Fixed-step integration and observation parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    /// Timestep, `> 0`.
    pub dt: f64,
    /// Final time, `>= 0`.
    pub t_end: f64,
    /// Observables are sampled every this many steps, `>= 1`.
    pub observer_stride: usize,
    /// Maximum allowed relative drift of the energy and momentum invariants.
    pub drift_tolerance: f64,
    /// Highest bunching harmonic recorded per sample, `>= 1`.
    pub k_max: u32,
    /// Test hook: freeze the field and drop the force so particles
    /// free-stream. Not part of the public contract.
    #[doc(hidden)]
    pub disable_coupling: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 2.0,
            observer_stride: 10,
            drift_tolerance: 1e-6,
            k_max: 3,
            disable_coupling: false,
        }
    }
}

/// A violated bound of [`IntegratorConfig`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    /// `dt <= 0` or not finite.
    #[error("dt must be positive and finite")]
    DtNotPositive,
    /// `t_end < 0` or not finite.
    #[error("t_end must be non-negative and finite")]
    TEndNegative,
    /// `observer_stride == 0`.
    #[error("observer_stride must be at least 1")]
    StrideZero,
    /// `drift_tolerance <= 0`.
    #[error("drift_tolerance must be positive")]
    ToleranceNotPositive,
    /// `k_max == 0`.
    #[error("k_max must be at least 1")]
    KMaxZero,
    /// `t_end/dt` exceeds the supported step count.
    #[error("t_end/dt exceeds 1e9 steps")]
    TooManySteps,
}

impl IntegratorConfig {
    /// Checks every invariant.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(ConfigError::DtNotPositive);
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(ConfigError::TEndNegative);
        }
        if self.observer_stride == 0 {
            return Err(ConfigError::StrideZero);
        }
        if !(self.drift_tolerance > 0.0) {
            return Err(ConfigError::ToleranceNotPositive);
        }
        if self.k_max == 0 {
            return Err(ConfigError::KMaxZero);
        }
        if self.t_end / self.dt > 1e9 {
            return Err(ConfigError::TooManySteps);
        }
        Ok(())
    }

    fn n_steps(&self) -> u64 {
        fmath::round(self.t_end / self.dt) as u64
    }

    /// Times at which a run with this config records samples: `t = 0`, every
    /// `observer_stride`-th step, and the final step.
    pub fn sample_times(&self) -> Vec<f64> {
        let n = self.n_steps();
        let mut ts = vec![0.0];
        for i in 0..n {
            if (i + 1) % self.observer_stride as u64 == 0 || i + 1 == n {
                ts.push((i + 1) as f64 * self.dt);
            }
        }
        ts
    }
}

/// Spec and config echo attached to every run result.
#[derive(Clone, Debug, PartialEq)]
pub struct RunMetadata {
    /// Initial-condition parameters of the run.
    pub spec: WaterbagSpec,
    /// Integration parameters of the run.
    pub config: IntegratorConfig,
}

/// Time-ordered observables of one run. `flip_time` stays `None` here and is
/// filled by the boundary tracker when markers are co-advected.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSeries {
    /// Samples at strictly increasing times.
    pub samples: Vec<ObservableSample>,
    /// Earliest lateral-edge ordering inversion, when tracked.
    pub flip_time: Option<f64>,
    /// Spec and config echo.
    pub metadata: RunMetadata,
}

/// Field values at the four internal stage evaluations of every step, enough
/// to re-integrate passive particles with bit-identical arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldHistory {
    /// Time of the first recorded step.
    pub t0: f64,
    /// Step size.
    pub dt: f64,
    /// Per step: `[ax1, ay1, ax2, ay2, ax3, ay3, ax4, ay4]`.
    pub stages: Vec<[f64; 8]>,
}

impl FieldHistory {
    /// Number of recorded steps.
    pub fn n_steps(&self) -> usize {
        self.stages.len()
    }

    /// Last time covered by the record.
    pub fn t_end(&self) -> f64 {
        self.t0 + self.stages.len() as f64 * self.dt
    }

    pub(crate) fn stage_fields(&self, step: usize) -> [(f64, f64); 4] {
        let s = &self.stages[step];
        [(s[0], s[1]), (s[2], s[3]), (s[4], s[5]), (s[6], s[7])]
    }
}

/// Why a run stopped early or never started.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RunError {
    /// The waterbag spec violated its bounds.
    #[error("invalid spec: {0}")]
    Spec(#[from] SpecErrors),
    /// The integrator config violated its bounds.
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    /// An invariant drifted beyond `drift_tolerance`.
    #[error(
        "conservation violated at t={t}: relative {quantity} drift {drift:e} exceeds {tolerance:e}"
    )]
    ConservationViolation {
        /// `"energy"` or `"momentum"`.
        quantity: &'static str,
        /// Measured relative drift.
        drift: f64,
        /// Configured limit.
        tolerance: f64,
        /// Sample time of the violation.
        t: f64,
    },
    /// The state left the finite range.
    #[error("non-finite state at t={t}")]
    NonFinite {
        /// Sample time of the first non-finite value.
        t: f64,
    },
}

/// Instantaneous rates of change of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateRates {
    /// `dtheta/dt`, one per particle.
    pub dtheta: Vec<f64>,
    /// `dp/dt`, one per particle.
    pub dp: Vec<f64>,
    /// `da_x/dt`.
    pub da_x: f64,
    /// `da_y/dt`.
    pub da_y: f64,
}

fn force_chunk(theta: &[f64], a_x: f64, a_y: f64, dp: &mut [f64]) -> (f64, f64) {
    let mut sum_cos = Neumaier::default();
    let mut sum_sin = Neumaier::default();
    for (th, f) in theta.iter().zip(dp.iter_mut()) {
        let (s, c) = fmath::sin_cos(*th);
        *f = -2.0 * (a_x * c - a_y * s);
        sum_cos.add(c);
        sum_sin.add(s);
    }
    (sum_cos.value(), sum_sin.value())
}

#[cfg(not(feature = "parallel"))]
fn force_pass(theta: &[f64], a_x: f64, a_y: f64, dp: &mut [f64]) -> (f64, f64) {
    let mut oc = Neumaier::default();
    let mut os = Neumaier::default();
    for (tc, fc) in theta.chunks(CHUNK).zip(dp.chunks_mut(CHUNK)) {
        let (c, s) = force_chunk(tc, a_x, a_y, fc);
        oc.add(c);
        os.add(s);
    }
    (oc.value(), os.value())
}

#[cfg(feature = "parallel")]
fn force_pass(theta: &[f64], a_x: f64, a_y: f64, dp: &mut [f64]) -> (f64, f64) {
    use rayon::prelude::*;
    let parts: Vec<(f64, f64)> = theta
        .par_chunks(CHUNK)
        .zip(dp.par_chunks_mut(CHUNK))
        .map(|(tc, fc)| force_chunk(tc, a_x, a_y, fc))
        .collect();
    let mut oc = Neumaier::default();
    let mut os = Neumaier::default();
    for (c, s) in parts {
        oc.add(c);
        os.add(s);
    }
    (oc.value(), os.value())
}

/// Evaluates the force on passive particles plus the two field rates at a
/// given field; returns `(da_x, da_y)`.
fn stage_rates(theta: &[f64], a_x: f64, a_y: f64, coupled: bool, dp: &mut [f64]) -> (f64, f64) {
    if coupled {
        let (sum_cos, sum_sin) = force_pass(theta, a_x, a_y, dp);
        let n = theta.len() as f64;
        (sum_cos / n, -(sum_sin / n))
    } else {
        dp.fill(0.0);
        (0.0, 0.0)
    }
}

/// Rates of change of the full state; errors on non-finite input.
pub fn derivatives(state: &SystemState) -> Result<StateRates, StateError> {
    state.validate()?;
    let mut dp = vec![0.0; state.len()];
    let (da_x, da_y) = stage_rates(&state.theta, state.a_x, state.a_y, true, &mut dp);
    Ok(StateRates {
        dtheta: state.p.clone(),
        dp,
        da_x,
        da_y,
    })
}

struct StepBuffers {
    th: Vec<f64>,
    pt: Vec<f64>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
}

impl StepBuffers {
    fn new(n: usize) -> Self {
        Self {
            th: vec![0.0; n],
            pt: vec![0.0; n],
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
        }
    }
}

/// One classical fourth-order step; does not touch `state.t`. Returns the
/// field values used at the four stage evaluations.
fn step_impl(
    state: &mut SystemState,
    dt: f64,
    coupled: bool,
    buf: &mut StepBuffers,
) -> [(f64, f64); 4] {
    let n = state.len();
    let h2 = 0.5 * dt;

    let a1 = (state.a_x, state.a_y);
    let (kax1, kay1) = stage_rates(&state.theta, a1.0, a1.1, coupled, &mut buf.k1);

    for i in 0..n {
        buf.th[i] = state.theta[i] + h2 * state.p[i];
        buf.pt[i] = state.p[i] + h2 * buf.k1[i];
    }
    let a2 = (state.a_x + h2 * kax1, state.a_y + h2 * kay1);
    let (kax2, kay2) = stage_rates(&buf.th, a2.0, a2.1, coupled, &mut buf.k2);

    for i in 0..n {
        buf.th[i] = state.theta[i] + h2 * buf.pt[i];
        buf.pt[i] = state.p[i] + h2 * buf.k2[i];
    }
    let a3 = (state.a_x + h2 * kax2, state.a_y + h2 * kay2);
    let (kax3, kay3) = stage_rates(&buf.th, a3.0, a3.1, coupled, &mut buf.k3);

    for i in 0..n {
        buf.th[i] = state.theta[i] + dt * buf.pt[i];
    }
    let a4 = (state.a_x + dt * kax3, state.a_y + dt * kay3);
    let (kax4, kay4) = stage_rates(&buf.th, a4.0, a4.1, coupled, &mut buf.k4);

    let w = dt / 6.0;
    let ws = dt * dt / 6.0;
    for i in 0..n {
        state.theta[i] += dt * state.p[i] + ws * (buf.k1[i] + buf.k2[i] + buf.k3[i]);
        state.p[i] += w * (buf.k1[i] + 2.0 * buf.k2[i] + 2.0 * buf.k3[i] + buf.k4[i]);
    }
    state.a_x += w * (kax1 + 2.0 * (kax2 + kax3) + kax4);
    state.a_y += w * (kay1 + 2.0 * (kay2 + kay3) + kay4);

    [a1, a2, a3, a4]
}

/// Advances the state by one step of size `dt` and bumps `state.t`.
pub fn step(state: &mut SystemState, dt: f64) -> Result<(), RunError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(RunError::Config(ConfigError::DtNotPositive));
    }
    let mut buf = StepBuffers::new(state.len());
    step_impl(state, dt, true, &mut buf);
    state.t += dt;
    if state.validate() == Err(StateError::NonFinite) {
        return Err(RunError::NonFinite { t: state.t });
    }
    Ok(())
}

/// Per-particle energy and momentum `(H/N, P/N)`, evaluated with compensated
/// chunked reductions.
pub fn invariants(state: &SystemState) -> (f64, f64) {
    let n = state.len() as f64;
    let p = &state.p;
    let (sp, sp2) = chunked_sum2(state.len(), |i| (p[i], p[i] * p[i]));
    let theta = &state.theta;
    let (sc, ss) = chunked_sum2(state.len(), |i| {
        let (s, c) = fmath::sin_cos(theta[i]);
        (c, s)
    });
    let energy = 0.5 * (sp2 / n) + 2.0 * (state.a_x * (ss / n) + state.a_y * (sc / n));
    let momentum = sp / n + state.intensity();
    (energy, momentum)
}

/// Magnitude scales of the two invariants, used to normalize drift when the
/// initial values are incidentally close to zero.
fn invariant_scales(state: &SystemState) -> (f64, f64) {
    let n = state.len() as f64;
    let p = &state.p;
    let (sp, sp2) = chunked_sum2(state.len(), |i| (p[i], p[i] * p[i]));
    let intensity = state.intensity();
    let scale_h = 0.5 * (sp2 / n) + 2.0 * fmath::sqrt(intensity);
    let scale_p = fmath::abs(sp / n) + intensity;
    (scale_h, scale_p)
}

/// Time-reversal involution of the dynamics: `theta -> -theta` and
/// `a_x -> -a_x` with momenta and `a_y` unchanged. Integrating the image
/// forward for a time `t` and applying the map again undoes an integration
/// of length `t`.
pub fn time_reversal(state: &SystemState) -> SystemState {
    SystemState {
        t: state.t,
        theta: state.theta.iter().map(|x| -x).collect(),
        p: state.p.clone(),
        a_x: -state.a_x,
        a_y: state.a_y,
    }
}

fn observe(state: &SystemState, k_max: u32) -> ObservableSample {
    let (energy, momentum) = invariants(state);
    let b = (1..=k_max).map(|k| diag::bunching_of(state, k)).collect();
    ObservableSample {
        t: state.t,
        a_x: state.a_x,
        a_y: state.a_y,
        intensity: state.intensity(),
        b,
        dispersion: diag::dispersion_of(state),
        energy,
        momentum,
    }
}

fn drift_check(
    state: &SystemState,
    h0: f64,
    p0: f64,
    tolerance: f64,
) -> Result<(f64, f64), RunError> {
    let (h, p) = invariants(state);
    let (scale_h, scale_p) = invariant_scales(state);
    let eps = 1e-12;
    let drift_h = fmath::abs(h - h0) / fmath::abs(h0).max(scale_h).max(eps);
    if drift_h > tolerance {
        return Err(RunError::ConservationViolation {
            quantity: "energy",
            drift: drift_h,
            tolerance,
            t: state.t,
        });
    }
    let drift_p = fmath::abs(p - p0) / fmath::abs(p0).max(scale_p).max(eps);
    if drift_p > tolerance {
        return Err(RunError::ConservationViolation {
            quantity: "momentum",
            drift: drift_p,
            tolerance,
            t: state.t,
        });
    }
    Ok((h, p))
}

fn run_impl(
    spec: &WaterbagSpec,
    config: &IntegratorConfig,
    record: bool,
) -> Result<(SimulationSeries, Option<FieldHistory>), RunError> {
    config.validate()?;
    let mut state = sample_waterbag(spec)?;
    let n_steps = config.n_steps();
    let coupled = !config.disable_coupling;
    let mut buf = StepBuffers::new(state.len());
    let mut history = record.then(|| FieldHistory {
        t0: 0.0,
        dt: config.dt,
        stages: Vec::with_capacity(n_steps as usize),
    });

    let (h0, p0) = invariants(&state);
    let mut samples = Vec::with_capacity(n_steps as usize / config.observer_stride + 2);
    samples.push(observe(&state, config.k_max));

    for i in 0..n_steps {
        let stage_fields = step_impl(&mut state, config.dt, coupled, &mut buf);
        state.t = (i + 1) as f64 * config.dt;
        if let Some(h) = history.as_mut() {
            let [(x1, y1), (x2, y2), (x3, y3), (x4, y4)] = stage_fields;
            h.stages.push([x1, y1, x2, y2, x3, y3, x4, y4]);
        }
        let done = i + 1 == n_steps;
        if (i + 1) % config.observer_stride as u64 == 0 || done {
            if state.validate() == Err(StateError::NonFinite) {
                return Err(RunError::NonFinite { t: state.t });
            }
            drift_check(&state, h0, p0, config.drift_tolerance)?;
            samples.push(observe(&state, config.k_max));
        }
    }

    let series = SimulationSeries {
        samples,
        flip_time: None,
        metadata: RunMetadata {
            spec: *spec,
            config: *config,
        },
    };
    Ok((series, history))
}

/// Samples a waterbag and integrates it to `t_end`, recording observables
/// every `observer_stride` steps (plus the initial and final instants).
/// Aborts with [`RunError::ConservationViolation`] when an invariant drifts
/// beyond `drift_tolerance` relative to `max(|Q(0)|, scale_Q(t), 1e-12)`.
pub fn run(spec: &WaterbagSpec, config: &IntegratorConfig) -> Result<SimulationSeries, RunError> {
    run_impl(spec, config, false).map(|(series, _)| series)
}

/// Same as [`run`] but also records the per-stage field values of every step
/// so passive markers can later be advected through the identical field.
pub fn run_with_history(
    spec: &WaterbagSpec,
    config: &IntegratorConfig,
) -> Result<(SimulationSeries, FieldHistory), RunError> {
    run_impl(spec, config, true).map(|(series, history)| (series, history.unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Sampling;
    use core::f64::consts::PI;

    fn small_spec() -> WaterbagSpec {
        WaterbagSpec::quiet(PI / 3.0, 0.1, 0.3, 512)
    }

    #[test]
    fn derivatives_of_aligned_cold_particles() {
        let st = SystemState {
            t: 0.0,
            theta: vec![0.0; 8],
            p: vec![0.0; 8],
            a_x: 0.0,
            a_y: 0.0,
        };
        let r = derivatives(&st).unwrap();
        assert!(r.dp.iter().all(|&x| x == 0.0));
        assert_eq!(r.da_x, 1.0);
        assert_eq!(r.da_y, 0.0);
    }

    #[test]
    fn derivatives_vanish_on_full_circle_lattice() {
        let spec = WaterbagSpec::quiet(PI, 0.0, 0.0, 4096);
        let st = sample_waterbag(&spec).unwrap();
        let r = derivatives(&st).unwrap();
        assert!(r.da_x.abs() < 1e-12);
        assert!(r.da_y.abs() < 1e-12);
    }

    #[test]
    fn derivatives_of_single_quadrature_particle() {
        let st = SystemState {
            t: 0.0,
            theta: vec![PI / 2.0],
            p: vec![0.0],
            a_x: 1.0,
            a_y: 0.0,
        };
        let r = derivatives(&st).unwrap();
        assert!(r.dp[0].abs() < 1e-15);
        assert!((r.da_y + 1.0).abs() < 1e-15);
        assert_eq!(r.dtheta[0], 0.0);
    }

    #[test]
    fn derivatives_reject_non_finite_input() {
        let st = SystemState {
            t: 0.0,
            theta: vec![f64::INFINITY],
            p: vec![0.0],
            a_x: 0.0,
            a_y: 0.0,
        };
        assert_eq!(derivatives(&st), Err(StateError::NonFinite));
    }

    #[test]
    fn free_streaming_is_exact_with_coupling_disabled() {
        let spec = small_spec();
        let config = IntegratorConfig {
            t_end: 1.0,
            disable_coupling: true,
            drift_tolerance: 1e12,
            ..IntegratorConfig::default()
        };
        let start = sample_waterbag(&spec).unwrap();
        let (series, _) = run_impl(&spec, &config, false).unwrap();
        let last = series.samples.last().unwrap();
        assert!((last.t - 1.0).abs() < 1e-15);

        let mut state = start.clone();
        let mut buf = StepBuffers::new(state.len());
        for _ in 0..1000 {
            step_impl(&mut state, 1e-3, false, &mut buf);
        }
        for i in 0..state.len() {
            let exact = start.theta[i] + start.p[i] * 1.0;
            assert!(
                (state.theta[i] - exact).abs() < 1e-12,
                "particle {i}: {} vs {exact}",
                state.theta[i]
            );
        }
        assert_eq!(state.a_x, start.a_x);
        assert_eq!(state.a_y, start.a_y);
    }

    #[test]
    fn step_order_is_four() {
        let spec = small_spec();
        let run_to = |dt: f64| {
            let config = IntegratorConfig {
                dt,
                t_end: 0.5,
                observer_stride: usize::MAX,
                ..IntegratorConfig::default()
            };
            let (s, _) = run_impl(&spec, &config, false).unwrap();
            let last = s.samples.last().unwrap();
            (last.a_x, last.a_y, last.intensity)
        };
        let fine = run_to(1.25e-4);
        let coarse = run_to(2e-3);
        let half = run_to(1e-3);
        let err_coarse = (coarse.0 - fine.0).abs() + (coarse.1 - fine.1).abs();
        let err_half = (half.0 - fine.0).abs() + (half.1 - fine.1).abs();
        let ratio = err_coarse / err_half;
        assert!(
            (10.0..26.0).contains(&ratio),
            "convergence ratio {ratio}, errors {err_coarse:e}/{err_half:e}"
        );
    }

    #[test]
    fn invariants_of_initial_waterbag() {
        let spec = WaterbagSpec::quiet(PI / 3.0, 0.1, 0.0, 10_000);
        let st = sample_waterbag(&spec).unwrap();
        let (h, p) = invariants(&st);
        let h_exact = 0.1 * 0.1 / 24.0;
        assert!((h - h_exact).abs() / h_exact < 1e-12, "H/N = {h}");
        assert!(p.abs() < 1e-15);

        let seeded = WaterbagSpec::quiet(PI / 3.0, 0.1, 0.8, 10_000);
        let st = sample_waterbag(&seeded).unwrap();
        let (_, p) = invariants(&st);
        assert!((p - 0.8).abs() < 1e-15);
    }

    #[test]
    fn energy_and_momentum_drift_stay_small() {
        let spec = WaterbagSpec::quiet(PI / 3.0, 0.1, 0.0, 1000);
        let config = IntegratorConfig {
            t_end: 1.0,
            drift_tolerance: 1e-8,
            ..IntegratorConfig::default()
        };
        let series = run(&spec, &config).unwrap();
        let h0 = series.samples[0].energy;
        for s in &series.samples {
            assert!((s.energy - h0).abs() / h0.abs() < 1e-8);
        }
    }

    #[test]
    fn conservation_violation_aborts_with_diagnostics() {
        let spec = WaterbagSpec::quiet(PI / 3.0, 0.1, 0.5, 256);
        let config = IntegratorConfig {
            t_end: 1.0,
            drift_tolerance: 1e-18,
            ..IntegratorConfig::default()
        };
        match run(&spec, &config) {
            Err(RunError::ConservationViolation {
                drift, tolerance, ..
            }) => {
                assert!(drift > tolerance);
            }
            other => panic!("expected conservation abort, got {other:?}"),
        }
    }

    #[test]
    fn samples_report_exact_intensity_identity() {
        let spec = small_spec();
        let config = IntegratorConfig {
            t_end: 0.2,
            ..IntegratorConfig::default()
        };
        let series = run(&spec, &config).unwrap();
        assert!(series.samples.len() > 3);
        for s in &series.samples {
            assert_eq!(s.intensity, s.a_x * s.a_x + s.a_y * s.a_y);
        }
        for w in series.samples.windows(2) {
            assert!(w[1].t > w[0].t);
        }
    }

    #[test]
    fn time_reversal_returns_to_the_initial_state() {
        let spec = small_spec();
        let start = sample_waterbag(&spec).unwrap();
        let mut state = start.clone();
        let mut buf = StepBuffers::new(state.len());
        for _ in 0..500 {
            step_impl(&mut state, 1e-3, true, &mut buf);
        }
        let mut back = time_reversal(&state);
        for _ in 0..500 {
            step_impl(&mut back, 1e-3, true, &mut buf);
        }
        let again = time_reversal(&back);
        for i in 0..start.len() {
            assert!(
                (again.theta[i] - start.theta[i]).abs() < 1e-6,
                "theta[{i}] {} vs {}",
                again.theta[i],
                start.theta[i]
            );
            assert!((again.p[i] - start.p[i]).abs() < 1e-6);
        }
        assert!((again.a_x - start.a_x).abs() < 1e-6);
        assert!((again.a_y - start.a_y).abs() < 1e-6);
    }

    #[test]
    fn run_rejects_bad_inputs_with_full_error_lists() {
        let bad_spec = WaterbagSpec::quiet(0.0, -1.0, 0.0, 1);
        match run(&bad_spec, &IntegratorConfig::default()) {
            Err(RunError::Spec(errs)) => assert_eq!(errs.0.len(), 3),
            other => panic!("expected spec errors, got {other:?}"),
        }
        let bad_config = IntegratorConfig {
            dt: 0.0,
            ..IntegratorConfig::default()
        };
        assert!(matches!(
            run(&small_spec(), &bad_config),
            Err(RunError::Config(ConfigError::DtNotPositive))
        ));
    }

    #[test]
    fn pseudo_random_runs_are_reproducible() {
        let spec = WaterbagSpec {
            sampling: Sampling::PseudoRandom { seed: 4 },
            ..small_spec()
        };
        let config = IntegratorConfig {
            t_end: 0.3,
            ..IntegratorConfig::default()
        };
        let a = run(&spec, &config).unwrap();
        let b = run(&spec, &config).unwrap();
        assert_eq!(a.samples, b.samples);
    }

    #[test]
    fn history_records_every_step() {
        let spec = small_spec();
        let config = IntegratorConfig {
            t_end: 0.05,
            ..IntegratorConfig::default()
        };
        let (series, history) = run_with_history(&spec, &config).unwrap();
        assert_eq!(history.n_steps(), 50);
        assert!((history.t_end() - 0.05).abs() < 1e-15);
        assert_eq!(history.stages[0][0], series.samples[0].a_x);
        assert_eq!(history.stages[0][1], series.samples[0].a_y);
    }
}
