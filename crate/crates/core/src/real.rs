//! Scalar abstraction shared by the model and forward simulation layers.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// Floating point scalar usable by the generic parts of the crate.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, rounding when `Self` is narrower.
    fn of(x: f64) -> Self;

    /// Widens to `f64`.
    fn f64(self) -> f64;

    /// Draws a standard normal variate.
    fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws a unit-rate exponential variate.
    fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draws from the open interval (0, 1).
    fn uniform01<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                <StandardNormal as Distribution<$t>>::sample(&StandardNormal, rng)
            }

            #[inline]
            fn std_exp<R: Rng + ?Sized>(rng: &mut R) -> Self {
                <Exp1 as Distribution<$t>>::sample(&Exp1, rng)
            }

            #[inline]
            fn uniform01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                loop {
                    let u: $t = rng.random();
                    if u > 0.0 {
                        return u;
                    }
                }
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);
