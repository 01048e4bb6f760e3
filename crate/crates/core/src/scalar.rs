//! Floating point scalar used by the closed-form and spectral-sum routines.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar: `f32` or `f64`.
///
/// The thermodynamic sums, the closed-form model results and the root
/// finders are written against this trait. The dense eigensolver works in
/// `f64` only; spectra are converted with [`Real::of`] when a narrower type
/// is requested.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real")
    }

    /// Lossy conversion from a count.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count is representable in every Real")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn half() -> Self {
        Self::of(0.5)
    }

    fn two() -> Self {
        Self::of(2.0)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `log(2 cosh x)` without overflow for large `|x|`.
pub fn log_two_cosh<T: Real>(x: T) -> T {
    let a = x.abs();
    a + (-(a + a)).exp().ln_1p()
}

/// `log Σ exp(x_i)` shifted by the maximum.
///
/// Returns `-inf` for an empty slice.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    let sum = pairwise_sum_by(xs, |x| (x - max).exp());
    max + sum.ln()
}

/// Pairwise (tree) summation of `f(x_i)` in index order.
///
/// The association pattern depends only on the slice length, so the result
/// is a pure function of the input values.
pub fn pairwise_sum_by<T: Real, U: Copy, F: Fn(U) -> T + Copy>(xs: &[U], f: F) -> T {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().fold(T::zero(), |acc, &x| acc + f(x));
    }
    let mid = xs.len() / 2;
    pairwise_sum_by(&xs[..mid], f) + pairwise_sum_by(&xs[mid..], f)
}

pub fn pairwise_sum<T: Real>(xs: &[T]) -> T {
    pairwise_sum_by(xs, |x| x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_two_cosh_matches_direct_form() {
        for &x in &[-3.0f64, -0.2, 0.0, 0.7, 5.0] {
            let direct = (2.0 * x.cosh()).ln();
            assert!((log_two_cosh(x) - direct).abs() < 1e-14);
        }
        // no overflow where cosh itself overflows
        assert!((log_two_cosh(1000.0f64) - 1000.0).abs() < 1e-12);
        assert!((log_two_cosh(1.0f32) - (2.0f32 * 1.0f32.cosh()).ln()).abs() < 1e-6);
    }

    #[test]
    fn log_sum_exp_is_shift_stable() {
        let xs = [1.0e4, 1.0e4 - 1.0];
        let expect = 1.0e4 + (1.0 + (-1.0f64).exp()).ln();
        assert!((log_sum_exp(&xs) - expect).abs() < 1e-9);
        assert_eq!(log_sum_exp::<f64>(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn pairwise_sum_exact_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }
}
