use std::fmt::Debug;

use rug::{Complex, Float};

/// Field operations shared by real and complex working-precision values.
///
/// rug's operators produce lazy "incomplete" values, so generic code goes
/// through these methods instead of `std::ops`.
pub trait Scalar: Clone + Debug + Send + Sync + 'static {
    fn zero(prec: u32) -> Self;
    fn from_real(x: &Float) -> Self;
    fn prec(&self) -> u32;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn mul_real(&self, r: &Float) -> Self;
    fn neg(&self) -> Self;
    /// |x|, rounded at the value's own precision.
    fn magnitude(&self) -> Float;
    fn is_finite(&self) -> bool;
    /// Imaginary part is exactly zero.
    fn is_real(&self) -> bool;
    fn real_part(&self) -> Float;
    fn to_complex(&self) -> Complex;
    /// `None` for a complex value with nonzero imaginary part when `Self` is real.
    fn try_from_complex(z: &Complex) -> Option<Self>;
    fn exp(&self) -> Self;
}

impl Scalar for Float {
    fn zero(prec: u32) -> Self {
        Float::new(prec)
    }
    fn from_real(x: &Float) -> Self {
        x.clone()
    }
    fn prec(&self) -> u32 {
        Float::prec(self)
    }
    fn add(&self, o: &Self) -> Self {
        Float::with_val(self.prec(), self + o)
    }
    fn sub(&self, o: &Self) -> Self {
        Float::with_val(self.prec(), self - o)
    }
    fn mul(&self, o: &Self) -> Self {
        Float::with_val(self.prec(), self * o)
    }
    fn mul_real(&self, r: &Float) -> Self {
        Float::with_val(self.prec(), self * r)
    }
    fn neg(&self) -> Self {
        Float::with_val(self.prec(), -self)
    }
    fn magnitude(&self) -> Float {
        Float::with_val(self.prec(), self.abs_ref())
    }
    fn is_finite(&self) -> bool {
        Float::is_finite(self)
    }
    fn is_real(&self) -> bool {
        true
    }
    fn real_part(&self) -> Float {
        self.clone()
    }
    fn to_complex(&self) -> Complex {
        Complex::with_val(self.prec(), (self, 0))
    }
    fn try_from_complex(z: &Complex) -> Option<Self> {
        z.imag().is_zero().then(|| z.real().clone())
    }
    fn exp(&self) -> Self {
        Float::with_val(self.prec(), self.exp_ref())
    }
}

impl Scalar for Complex {
    fn zero(prec: u32) -> Self {
        Complex::new(prec)
    }
    fn from_real(x: &Float) -> Self {
        Complex::with_val(x.prec(), (x, 0))
    }
    fn prec(&self) -> u32 {
        self.real().prec()
    }
    fn add(&self, o: &Self) -> Self {
        Complex::with_val(Scalar::prec(self), self + o)
    }
    fn sub(&self, o: &Self) -> Self {
        Complex::with_val(Scalar::prec(self), self - o)
    }
    fn mul(&self, o: &Self) -> Self {
        Complex::with_val(Scalar::prec(self), self * o)
    }
    fn mul_real(&self, r: &Float) -> Self {
        Complex::with_val(Scalar::prec(self), self * r)
    }
    fn neg(&self) -> Self {
        Complex::with_val(Scalar::prec(self), -self)
    }
    fn magnitude(&self) -> Float {
        Float::with_val(Scalar::prec(self), self.abs_ref())
    }
    fn is_finite(&self) -> bool {
        self.real().is_finite() && self.imag().is_finite()
    }
    fn is_real(&self) -> bool {
        self.imag().is_zero()
    }
    fn real_part(&self) -> Float {
        self.real().clone()
    }
    fn to_complex(&self) -> Complex {
        self.clone()
    }
    fn try_from_complex(z: &Complex) -> Option<Self> {
        Some(z.clone())
    }
    fn exp(&self) -> Self {
        Complex::with_val(Scalar::prec(self), self.exp_ref())
    }
}

/// |z| of a complex number at its own precision.
pub fn cabs(z: &Complex) -> Float {
    z.magnitude()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_ops_match_float_ops_on_real_axis() {
        let a = Float::with_val(128, 3);
        let b = Float::with_val(128, -7);
        let ca = Complex::from_real(&a);
        let cb = Complex::from_real(&b);
        assert_eq!(ca.mul(&cb).real_part(), a.mul(&b));
        assert!(ca.mul(&cb).is_real());
        assert_eq!(cb.magnitude(), Float::with_val(128, 7));
    }
}
