//! Phase-space boundary tracking: passive markers seeded on the waterbag
//! rectangle, advected through the recorded field of an ensemble run, fitted
//! against the parabolic boundary model `p = v +/- u theta^2`, and watched
//! for the first orientation flip of the lateral edges.

use alloc::vec::Vec;

use crate::math::fmath;
use crate::nbody::FieldHistory;
use crate::types::{SpecErrors, WaterbagSpec};

/// Minimum markers per edge accepted by [`seed_markers`].
pub const MIN_PER_EDGE: usize = 8;

/// One side of the seeded rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    /// `p = +delta_p/2`.
    Top,
    /// `p = -delta_p/2`.
    Bottom,
    /// `theta = -alpha`.
    Left,
    /// `theta = +alpha`.
    Right,
}

/// Marker positions plus index lists describing which markers form each edge.
/// Corner markers are shared between the adjacent lists, never duplicated.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryMarkers {
    /// Marker phases.
    pub theta: Vec<f64>,
    /// Marker momenta.
    pub p: Vec<f64>,
    /// Top edge, ordered by seed phase.
    pub top: Vec<usize>,
    /// Bottom edge, ordered by seed phase.
    pub bottom: Vec<usize>,
    /// Left edge, ordered by seed momentum.
    pub left: Vec<usize>,
    /// Right edge, ordered by seed momentum.
    pub right: Vec<usize>,
}

impl BoundaryMarkers {
    /// Number of markers.
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    /// True when no markers are present.
    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Index list of one edge, in seed order.
    pub fn edge_indices(&self, edge: Edge) -> &[usize] {
        match edge {
            Edge::Top => &self.top,
            Edge::Bottom => &self.bottom,
            Edge::Left => &self.left,
            Edge::Right => &self.right,
        }
    }
}

/// Why seeding, advection, or fitting failed.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ContourError {
    /// Fewer than [`MIN_PER_EDGE`] markers per edge requested, or an edge
    /// list passed to the fit has fewer than 3 usable points.
    #[error("need at least {min} markers per edge, got {got}")]
    TooFewMarkers {
        /// Requested or available count.
        got: usize,
        /// Minimum accepted.
        min: usize,
    },
    /// The waterbag spec violated its bounds.
    #[error("invalid spec: {0}")]
    Spec(#[from] SpecErrors),
    /// Advection was asked to pass the end of the recorded field.
    #[error("requested time {requested} exceeds recorded horizon {horizon}")]
    HorizonExceeded {
        /// Time asked for.
        requested: f64,
        /// Last recorded time.
        horizon: f64,
    },
    /// The phase spread of the markers cannot pin down the curvature.
    #[error("parabola fit is degenerate")]
    DegenerateFit,
}

/// Seeds `4 * n_per_edge - 4` markers on the rectangle boundary of `spec`:
/// `n_per_edge` evenly spaced markers on each edge with the four corners
/// shared between adjacent edges.
pub fn seed_markers(
    spec: &WaterbagSpec,
    n_per_edge: usize,
) -> Result<BoundaryMarkers, ContourError> {
    if n_per_edge < MIN_PER_EDGE {
        return Err(ContourError::TooFewMarkers {
            got: n_per_edge,
            min: MIN_PER_EDGE,
        });
    }
    spec.validate()?;
    let n = n_per_edge;
    let alpha = spec.alpha;
    let half = 0.5 * spec.delta_p;
    let frac = |j: usize| j as f64 / (n - 1) as f64;
    let total = 4 * n - 4;
    let mut theta = Vec::with_capacity(total);
    let mut p = Vec::with_capacity(total);

    let bottom: Vec<usize> = (0..n).collect();
    for j in 0..n {
        theta.push(-alpha + 2.0 * alpha * frac(j));
        p.push(-half);
    }
    let top: Vec<usize> = (n..2 * n).collect();
    for j in 0..n {
        theta.push(-alpha + 2.0 * alpha * frac(j));
        p.push(half);
    }

    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    left.push(bottom[0]);
    right.push(bottom[n - 1]);
    for j in 1..n - 1 {
        left.push(theta.len());
        theta.push(-alpha);
        p.push(-half + spec.delta_p * frac(j));
    }
    for j in 1..n - 1 {
        right.push(theta.len());
        theta.push(alpha);
        p.push(-half + spec.delta_p * frac(j));
    }
    left.push(top[0]);
    right.push(top[n - 1]);

    Ok(BoundaryMarkers {
        theta,
        p,
        top,
        bottom,
        left,
        right,
    })
}

/// Marker positions at every recorded step, `positions[step][marker]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkerTrajectories {
    /// Recorded times, starting at the history origin.
    pub times: Vec<f64>,
    /// Phases per time per marker.
    pub theta: Vec<Vec<f64>>,
    /// Momenta per time per marker.
    pub p: Vec<Vec<f64>>,
}

impl MarkerTrajectories {
    /// Number of recorded instants.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    /// True when nothing was recorded.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Advects the markers as passive tracers from the history origin to `t_end`
/// using the recorded per-stage field values; the per-marker arithmetic is
/// the one the ensemble integrator applies to its particles, so a marker
/// seeded on a particle reproduces that particle exactly.
pub fn advect_markers(
    markers: &BoundaryMarkers,
    history: &FieldHistory,
    t_end: f64,
) -> Result<MarkerTrajectories, ContourError> {
    let horizon = history.t_end();
    if !(t_end >= history.t0) || t_end > horizon + 0.5 * history.dt {
        return Err(ContourError::HorizonExceeded {
            requested: t_end,
            horizon,
        });
    }
    let n_steps = (fmath::round((t_end - history.t0) / history.dt) as usize).min(history.n_steps());
    let dt = history.dt;
    let h2 = 0.5 * dt;
    let w = dt / 6.0;
    let ws = dt * dt / 6.0;
    let n = markers.len();

    let mut theta = markers.theta.clone();
    let mut p = markers.p.clone();
    let mut out = MarkerTrajectories {
        times: Vec::with_capacity(n_steps + 1),
        theta: Vec::with_capacity(n_steps + 1),
        p: Vec::with_capacity(n_steps + 1),
    };
    out.times.push(history.t0);
    out.theta.push(theta.clone());
    out.p.push(p.clone());

    for step in 0..n_steps {
        let [(ax1, ay1), (ax2, ay2), (ax3, ay3), (ax4, ay4)] = history.stage_fields(step);
        for i in 0..n {
            let th = theta[i];
            let pm = p[i];
            let (s, c) = fmath::sin_cos(th);
            let k1 = -2.0 * (ax1 * c - ay1 * s);
            let th2 = th + h2 * pm;
            let pt2 = pm + h2 * k1;
            let (s, c) = fmath::sin_cos(th2);
            let k2 = -2.0 * (ax2 * c - ay2 * s);
            let th3 = th + h2 * pt2;
            let pt3 = pm + h2 * k2;
            let (s, c) = fmath::sin_cos(th3);
            let k3 = -2.0 * (ax3 * c - ay3 * s);
            let th4 = th + dt * pt3;
            let (s, c) = fmath::sin_cos(th4);
            let k4 = -2.0 * (ax4 * c - ay4 * s);
            theta[i] += dt * pm + ws * (k1 + k2 + k3);
            p[i] += w * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        out.times.push(history.t0 + (step + 1) as f64 * dt);
        out.theta.push(theta.clone());
        out.p.push(p.clone());
    }
    Ok(out)
}

/// Least-squares boundary model at one instant: `p = v_plus + u theta^2` on
/// the top edge and `p = v_minus + u theta^2` on the bottom edge, sharing the
/// curvature `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryFit {
    /// Shared curvature.
    pub u: f64,
    /// Top-edge vertex momentum.
    pub v_plus: f64,
    /// Bottom-edge vertex momentum.
    pub v_minus: f64,
    /// Root-mean-square residual over all fitted markers.
    pub rms_residual: f64,
}

/// Fits the shared-curvature parabola pair to the top and bottom edge
/// markers of one instant, eliminating the vertex offsets analytically.
pub fn fit_parabola(
    theta: &[f64],
    p: &[f64],
    markers: &BoundaryMarkers,
) -> Result<BoundaryFit, ContourError> {
    let n_t = markers.top.len();
    let n_b = markers.bottom.len();
    if n_t < 3 || n_b < 3 {
        return Err(ContourError::TooFewMarkers {
            got: n_t.min(n_b),
            min: 3,
        });
    }
    let edge_sums = |list: &[usize]| -> (f64, f64, f64, f64, f64) {
        let (mut s2, mut s4, mut sp, mut sp2) = (0.0, 0.0, 0.0, 0.0);
        for &i in list {
            let t2 = theta[i] * theta[i];
            s2 += t2;
            s4 += t2 * t2;
            sp += p[i];
            sp2 += p[i] * t2;
        }
        (s2, s4, sp, sp2, list.len() as f64)
    };
    let (s2t, s4t, spt, sp2t, nt) = edge_sums(&markers.top);
    let (s2b, s4b, spb, sp2b, nb) = edge_sums(&markers.bottom);
    let s4 = s4t + s4b;
    let den = s4 - s2t * s2t / nt - s2b * s2b / nb;
    let num = sp2t + sp2b - s2t * spt / nt - s2b * spb / nb;
    if !(den > 1e-13 * s4.max(1e-300)) {
        return Err(ContourError::DegenerateFit);
    }
    let u = num / den;
    let v_plus = (spt - u * s2t) / nt;
    let v_minus = (spb - u * s2b) / nb;
    let mut ss = 0.0;
    for &i in &markers.top {
        let r = p[i] - v_plus - u * theta[i] * theta[i];
        ss += r * r;
    }
    for &i in &markers.bottom {
        let r = p[i] - v_minus - u * theta[i] * theta[i];
        ss += r * r;
    }
    let fit = BoundaryFit {
        u,
        v_plus,
        v_minus,
        rms_residual: fmath::sqrt(ss / (nt + nb)),
    };
    if !(fit.u.is_finite() && fit.v_plus.is_finite() && fit.v_minus.is_finite()) {
        return Err(ContourError::DegenerateFit);
    }
    Ok(fit)
}

/// Earliest recorded time at which either lateral edge loses its momentum
/// ordering in phase: a strict `theta` inversion between adjacent markers of
/// the seed-momentum-ordered left or right list.
pub fn detect_flip(traj: &MarkerTrajectories, markers: &BoundaryMarkers) -> Option<f64> {
    let inverted = |theta: &[f64], list: &[usize]| -> bool {
        list.windows(2).any(|w| theta[w[1]] < theta[w[0]])
    };
    for (it, theta) in traj.theta.iter().enumerate() {
        if inverted(theta, &markers.left) || inverted(theta, &markers.right) {
            return Some(traj.times[it]);
        }
    }
    None
}

/// Boundary model coefficients over time plus the first flip, if any.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySeries {
    /// Fit instants.
    pub times: Vec<f64>,
    /// One fit per instant.
    pub fits: Vec<BoundaryFit>,
    /// Earliest lateral-edge inversion over the full advection record.
    pub flip_time: Option<f64>,
}

/// Advects `markers` through the whole recorded history, fits the boundary
/// model every `stride` steps (always including the first and last instant),
/// and scans every step for the first flip.
pub fn track_boundary(
    markers: &BoundaryMarkers,
    history: &FieldHistory,
    stride: usize,
) -> Result<(BoundarySeries, MarkerTrajectories), ContourError> {
    let stride = stride.max(1);
    let traj = advect_markers(markers, history, history.t_end())?;
    let last = traj.len() - 1;
    let mut times = Vec::new();
    let mut fits = Vec::new();
    for it in 0..traj.len() {
        if it % stride == 0 || it == last {
            fits.push(fit_parabola(&traj.theta[it], &traj.p[it], markers)?);
            times.push(traj.times[it]);
        }
    }
    let flip_time = detect_flip(&traj, markers);
    Ok((
        BoundarySeries {
            times,
            fits,
            flip_time,
        },
        traj,
    ))
}
