//! Compensated summation, deterministic chunked reductions, and the float
//! math shim used throughout the crate.

/// Scalar math that works both with `std` and with `libm` under `no_std`.
pub mod fmath {
    /// Absolute value (bit mask, exact).
    #[inline(always)]
    pub fn abs(x: f64) -> f64 {
        f64::from_bits(x.to_bits() & 0x7fff_ffff_ffff_ffff)
    }

    macro_rules! shim {
        ($(#[$doc:meta] $name:ident($($arg:ident),+) -> $ret:ty => $std:expr, $lm:expr;)*) => {
            $(
                #[$doc]
                #[inline(always)]
                #[cfg(feature = "std")]
                pub fn $name($($arg: f64),+) -> $ret { $std }
                #[$doc]
                #[inline(always)]
                #[cfg(all(not(feature = "std"), feature = "libm"))]
                pub fn $name($($arg: f64),+) -> $ret { $lm }
            )*
        };
    }

    shim! {
        /// Sine and cosine in one call.
        sin_cos(x) -> (f64, f64) => x.sin_cos(), libm::sincos(x);
        /// Sine.
        sin(x) -> f64 => x.sin(), libm::sin(x);
        /// Cosine.
        cos(x) -> f64 => x.cos(), libm::cos(x);
        /// Square root.
        sqrt(x) -> f64 => x.sqrt(), libm::sqrt(x);
        /// Cube root.
        cbrt(x) -> f64 => x.cbrt(), libm::cbrt(x);
        /// Arc cosine.
        acos(x) -> f64 => x.acos(), libm::acos(x);
        /// Natural logarithm.
        ln(x) -> f64 => x.ln(), libm::log(x);
        /// Exponential.
        exp(x) -> f64 => x.exp(), libm::exp(x);
        /// Four-quadrant arc tangent.
        atan2(y, x) -> f64 => y.atan2(x), libm::atan2(y, x);
        /// Euclidean norm of (x, y) without overflow.
        hypot(x, y) -> f64 => x.hypot(y), libm::hypot(x, y);
        /// Round half away from zero.
        round(x) -> f64 => x.round(), libm::round(x);
    }
}

/// Neumaier-compensated accumulator: error-free for well-scaled inputs and
/// immune to the `|next| > |sum|` failure mode of plain Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    /// Adds one term.
    #[inline(always)]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if fmath::abs(self.sum) >= fmath::abs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// Current compensated total.
    #[inline(always)]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn sum(xs: &[f64]) -> f64 {
    let mut acc = Neumaier::default();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Chunk width for the deterministic reduction tree. Partial sums are formed
/// per chunk and then combined serially in chunk order, so the result does
/// not depend on how chunks are scheduled across workers.
pub const CHUNK: usize = 1024;

#[inline]
fn partial_pair(lo: usize, hi: usize, f: &(impl Fn(usize) -> (f64, f64) + Sync)) -> (f64, f64) {
    let mut a = Neumaier::default();
    let mut b = Neumaier::default();
    for i in lo..hi {
        let (x, y) = f(i);
        a.add(x);
        b.add(y);
    }
    (a.value(), b.value())
}

fn combine_pairs(parts: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let mut a = Neumaier::default();
    let mut b = Neumaier::default();
    for (x, y) in parts {
        a.add(x);
        b.add(y);
    }
    (a.value(), b.value())
}

/// Sums `f(i)` componentwise over `0..n` with the fixed chunked reduction.
#[cfg(not(feature = "parallel"))]
pub fn chunked_sum2(n: usize, f: impl Fn(usize) -> (f64, f64) + Sync) -> (f64, f64) {
    combine_pairs((0..n.div_ceil(CHUNK)).map(|c| {
        let lo = c * CHUNK;
        partial_pair(lo, (lo + CHUNK).min(n), &f)
    }))
}

/// Sums `f(i)` componentwise over `0..n` with the fixed chunked reduction.
/// Chunk partials are computed in parallel and combined in chunk order, so
/// the result is bit-identical to the serial build for any worker count.
#[cfg(feature = "parallel")]
pub fn chunked_sum2(n: usize, f: impl Fn(usize) -> (f64, f64) + Sync) -> (f64, f64) {
    use rayon::prelude::*;
    let parts: alloc::vec::Vec<(f64, f64)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            partial_pair(lo, (lo + CHUNK).min(n), &f)
        })
        .collect();
    combine_pairs(parts.into_iter())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_tail() {
        let mut acc = Neumaier::default();
        for &x in &[1e100, 1.0, -1e100] {
            acc.add(x);
        }
        assert_eq!(acc.value(), 1.0);
    }

    #[test]
    fn chunked_sum_matches_sequential_on_smooth_data() {
        let n = 10_000;
        let f = |i: usize| {
            let x = (i as f64) * 1e-3;
            (x, x * x)
        };
        let (a, b) = chunked_sum2(n, f);
        let mut ra = 0.0f64;
        let mut rb = 0.0f64;
        for i in 0..n {
            let (x, y) = f(i);
            ra += x;
            rb += y;
        }
        assert!((a - ra).abs() / ra < 1e-12);
        assert!((b - rb).abs() / rb < 1e-12);
    }

    #[test]
    fn chunked_sum_handles_partial_tail_chunk() {
        let n = CHUNK + 7;
        let (a, _) = chunked_sum2(n, |_| (1.0, 0.0));
        assert_eq!(a, n as f64);
    }

    #[test]
    fn slice_sum_is_exact_on_mirrored_values() {
        let xs = [0.1, -0.3, 7.5, 0.3, -7.5, -0.1];
        assert_eq!(sum(&xs), 0.0);
    }
}
