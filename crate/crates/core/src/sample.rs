//! Reproducible placement of particles inside the waterbag.

use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math::{fmath, sum};
use crate::types::{Sampling, SpecErrors, SystemState, WaterbagSpec};

/// Momentum rungs of the quiet-start ladder; tiled boustrophedon over the
/// phase lattice so phase and momentum stay uncorrelated.
const LADDER: usize = 16;

/// Seed field from the spec: particles and wave in phase at `t = 0`, so the
/// field starts real and positive: `(sqrt(i0_norm), 0)`.
pub fn initial_field(spec: &WaterbagSpec) -> (f64, f64) {
    (fmath::sqrt(spec.i0_norm), 0.0)
}

/// Places `n_particles` in `[-alpha, alpha] x [-delta_p/2, delta_p/2]` and
/// initializes the field via [`initial_field`].
///
/// Quiet-lattice mode: phases on a mirrored midpoint lattice (sum of phases
/// and of any odd phase function is exactly zero); momenta on a 16-rung
/// midpoint ladder tiled boustrophedon along the phase lattice, with any
/// remainder placed on its own balanced midpoint ladder so the tile stays
/// mean-free for every particle count.
///
/// Pseudo-random mode: i.i.d. uniform phases from a seeded ChaCha stream and
/// a random permutation of an n-rung stratified momentum ladder.
///
/// In both modes the momenta are recentred to exact zero mean and rescaled so
/// the sample variance equals `delta_p^2/12` exactly; the correction factors
/// are O(1/n) and keep every momentum strictly inside the waterbag. Sampling
/// is a pure function of `(spec, seed)`.
pub fn sample_waterbag(spec: &WaterbagSpec) -> Result<SystemState, SpecErrors> {
    spec.validate()?;
    let n = spec.n_particles;
    let mut theta = vec![0.0f64; n];
    let mut p = vec![0.0f64; n];

    match spec.sampling {
        Sampling::QuietLattice => {
            let h = 2.0 * spec.alpha / n as f64;
            for i in 0..n / 2 {
                let x = -spec.alpha + (i as f64 + 0.5) * h;
                theta[i] = x;
                theta[n - 1 - i] = -x;
            }
            let full = n - n % LADDER;
            for (i, slot) in p.iter_mut().enumerate().take(full) {
                let block = i / LADDER;
                let j = i % LADDER;
                let rung = if block.is_multiple_of(2) {
                    j
                } else {
                    LADDER - 1 - j
                };
                *slot = ladder_value(rung, LADDER, spec.delta_p);
            }
            let rem = n - full;
            for j in 0..rem {
                let rung = if (full / LADDER).is_multiple_of(2) {
                    j
                } else {
                    rem - 1 - j
                };
                p[full + j] = ladder_value(rung, rem, spec.delta_p);
            }
        }
        Sampling::PseudoRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for slot in theta.iter_mut() {
                *slot = -spec.alpha + 2.0 * spec.alpha * unit_f64(rng.next_u64());
            }
            for (i, slot) in p.iter_mut().enumerate() {
                *slot = ladder_value(i, n, spec.delta_p);
            }
            for i in (1..n).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                p.swap(i, j);
            }
        }
    }

    if spec.delta_p > 0.0 {
        let mean = sum(&p) / n as f64;
        for slot in p.iter_mut() {
            *slot -= mean;
        }
        let ss: f64 = sum(&p.iter().map(|x| x * x).collect::<Vec<_>>());
        if ss > 0.0 {
            let scale = spec.delta_p * fmath::sqrt(n as f64 / (12.0 * ss));
            for slot in p.iter_mut() {
                *slot *= scale;
            }
        }
    }

    let (a_x, a_y) = initial_field(spec);
    Ok(SystemState {
        t: 0.0,
        theta,
        p,
        a_x,
        a_y,
    })
}

/// Midpoint of rung `i` out of `rungs` spanning `[-delta_p/2, delta_p/2]`.
#[inline]
fn ladder_value(i: usize, rungs: usize, delta_p: f64) -> f64 {
    -0.5 * delta_p + (i as f64 + 0.5) * delta_p / rungs as f64
}

/// Maps a `u64` to `[0, 1)` keeping the top 53 bits.
#[inline]
fn unit_f64(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::{bunching_of, dispersion_of};
    use core::f64::consts::PI;

    fn quiet(alpha: f64, n: usize) -> SystemState {
        sample_waterbag(&WaterbagSpec::quiet(alpha, 0.1, 0.0, n)).unwrap()
    }

    #[test]
    fn quiet_moments_vanish_to_rounding() {
        let st = quiet(PI / 3.0, 10_000);
        assert!((sum(&st.theta) / 1e4).abs() < 1e-10);
        assert!((sum(&st.p) / 1e4).abs() < 1e-10);
    }

    #[test]
    fn quiet_bunching_matches_closed_form() {
        let st = quiet(PI / 3.0, 10_000);
        let exact = |k: f64| (k * PI / 3.0).sin() / (k * PI / 3.0);
        for k in 1..=5u32 {
            let (mag, _) = bunching_of(&st, k);
            assert!(
                (mag - exact(k as f64).abs()).abs() < 1e-4,
                "k={k}: {mag} vs {}",
                exact(k as f64)
            );
        }
        let (b1, _) = bunching_of(&st, 1);
        assert!((b1 - exact(1.0)).abs() < 1e-6);
    }

    #[test]
    fn full_circle_bunching_vanishes() {
        let st = quiet(PI, 10_000);
        let (b1, _) = bunching_of(&st, 1);
        assert!(b1 < 1e-6);
    }

    #[test]
    fn dispersion_is_exact_in_both_modes() {
        let target = 0.01 / 12.0;
        let st = quiet(PI / 3.0, 10_000);
        assert!((dispersion_of(&st) - target).abs() / target < 1e-8);

        let spec = WaterbagSpec {
            sampling: Sampling::PseudoRandom { seed: 42 },
            ..WaterbagSpec::quiet(PI / 3.0, 0.1, 0.0, 10_000)
        };
        let st = sample_waterbag(&spec).unwrap();
        assert!((dispersion_of(&st) - target).abs() / target < 1e-3);
        assert!((dispersion_of(&st) - target).abs() / target < 1e-8);
    }

    #[test]
    fn samples_stay_inside_the_waterbag() {
        for seed in [0u64, 7, 123] {
            let spec = WaterbagSpec {
                sampling: Sampling::PseudoRandom { seed },
                ..WaterbagSpec::quiet(PI / 2.0, 0.3, 0.0, 4096)
            };
            let st = sample_waterbag(&spec).unwrap();
            assert!(st.theta.iter().all(|&x| (-PI / 2.0..PI / 2.0).contains(&x)));
            assert!(st.p.iter().all(|&x| x.abs() < 0.15));
        }
        let st = quiet(PI, 4096);
        assert!(st.theta.iter().all(|&x| x.abs() < PI));
        assert!(st.p.iter().all(|&x| x.abs() < 0.05));
    }

    #[test]
    fn pseudo_random_is_reproducible() {
        let spec = WaterbagSpec {
            sampling: Sampling::PseudoRandom { seed: 9 },
            ..WaterbagSpec::quiet(1.0, 0.2, 0.5, 513)
        };
        let a = sample_waterbag(&spec).unwrap();
        let b = sample_waterbag(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cold_beam_momenta_are_zero() {
        let st = sample_waterbag(&WaterbagSpec::quiet(1.0, 0.0, 0.0, 64)).unwrap();
        assert!(st.p.iter().all(|&x| x == 0.0));
        assert_eq!(dispersion_of(&st), 0.0);
    }

    #[test]
    fn initial_field_is_real_and_positive() {
        assert_eq!(
            initial_field(&WaterbagSpec::quiet(1.0, 0.1, 0.0, 2)),
            (0.0, 0.0)
        );
        let (ax, ay) = initial_field(&WaterbagSpec::quiet(1.0, 0.1, 0.8, 2));
        assert!((ax - 0.8944271909999159).abs() < 1e-15);
        assert_eq!(ay, 0.0);
        assert_eq!(
            initial_field(&WaterbagSpec::quiet(1.0, 0.1, 1.0, 2)),
            (1.0, 0.0)
        );
    }

    #[test]
    fn odd_particle_count_keeps_symmetry() {
        let st = quiet(PI / 2.0, 1001);
        assert_eq!(st.theta[500], 0.0);
        assert!((sum(&st.theta) / 1001.0).abs() < 1e-10);
    }
}
