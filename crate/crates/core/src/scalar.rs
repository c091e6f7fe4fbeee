//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::{ComplexField, RealField};
use num_complex::Complex;
use num_traits::ToPrimitive;

/// Real field the core is generic over: `f32` or `f64`.
pub trait Real: RealField + Copy + ToPrimitive + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_subset(&x)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Unit roundoff of the type.
    fn eps() -> Self {
        Self::default_epsilon()
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn creal<T: Real>(re: T) -> C<T> {
    Complex::new(re, T::zero())
}

#[inline]
pub fn c64<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub fn abs<T: Real>(z: C<T>) -> T {
    ComplexField::modulus(z)
}

#[inline]
pub fn conj<T: Real>(z: C<T>) -> C<T> {
    Complex::new(z.re, -z.im)
}

/// `e^{i t}`.
#[inline]
pub fn cis<T: Real>(t: T) -> C<T> {
    Complex::new(t.cos(), t.sin())
}

#[inline]
pub fn cpowi<T: Real>(z: C<T>, n: usize) -> C<T> {
    let mut acc = C::new(T::one(), T::zero());
    let mut base = z;
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            acc *= base;
        }
        base *= base;
        k >>= 1;
    }
    acc
}

/// Principal square root with the negative real axis as branch cut.
#[inline]
pub fn csqrt<T: Real>(z: C<T>) -> C<T> {
    ComplexField::sqrt(z)
}

/// Principal branch `z^(p/q)`, argument in `(-pi, pi]`.
pub fn cpow_frac<T: Real>(z: C<T>, num: usize, den: usize) -> C<T> {
    let r = abs(z);
    if r == T::zero() {
        return C::new(T::zero(), T::zero());
    }
    let arg = z.im.atan2(z.re);
    let e = T::lit(num as f64) / T::lit(den as f64);
    let m = r.powf(e);
    let a = arg * e;
    C::new(m * a.cos(), m * a.sin())
}

pub(crate) fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::lit(k as f64))
}

pub(crate) fn binomial<T: Real>(n: usize, k: usize) -> T {
    if k > n {
        return T::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(T::one(), |acc, i| {
        acc * T::lit((n - i) as f64) / T::lit((i + 1) as f64)
    })
}
