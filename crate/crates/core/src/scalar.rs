//! Scalar abstraction for the floating-point kernels.
//!
//! All geometry and Monte Carlo code is generic over [`Scalar`] so the same
//! kernels run in f32 or f64. The concrete aliases at the crate root pin f64,
//! which is what the CLI uses.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point scalar with the numeric traits the kernels need plus
/// hooks into the RNG (so callers never spell out distribution bounds).
pub trait Scalar:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Draw a standard normal variate.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw a uniform variate in [0, 1).
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossless-enough conversion from f64 (used for model constants).
    fn from_f64_c(v: f64) -> Self {
        Self::from_f64(v).expect("constant out of range for scalar type")
    }

    fn to_f64_c(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

macro_rules! impl_scalar {
    ($f:ty) => {
        impl Scalar for $f {
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$f>()
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn both_widths_sample() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let a: f32 = Scalar::standard_normal(&mut rng);
        let b: f64 = Scalar::standard_normal(&mut rng);
        assert!(a.is_finite() && b.is_finite());
        let u: f64 = Scalar::unit_uniform(&mut rng);
        assert!((0.0..1.0).contains(&u));
    }
}
