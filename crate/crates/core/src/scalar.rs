//! Scalar abstraction over `f64` and `Complex64`.
//!
//! The solution propagators only ever need the two entire functions
//! `cos(√λ h)` and `sin(√λ h)/√λ`, so the scalar trait exposes exactly
//! those plus ordinary field arithmetic.

use num_complex::Complex64;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_real(x: f64) -> Self;
    fn zero() -> Self {
        Self::from_real(0.0)
    }
    fn one() -> Self {
        Self::from_real(1.0)
    }
    fn modulus(self) -> f64;
    fn is_finite(self) -> bool;
    /// `|Im √λ|` for the principal branch.
    fn imag_sqrt_abs(self) -> f64;
    /// Returns `(cos(√λ h), sin(√λ h)/√λ)`; both are entire in `λ`.
    fn cos_sinc(self, h: f64) -> (Self, Self);
}

impl Scalar for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn imag_sqrt_abs(self) -> f64 {
        if self < 0.0 {
            (-self).sqrt()
        } else {
            0.0
        }
    }
    fn cos_sinc(self, h: f64) -> (f64, f64) {
        let z2 = self * h * h;
        if z2.abs() < 1e-8 {
            // sin(z)/z and cos(z) to O(z^6)
            let c = 1.0 - z2 / 2.0 + z2 * z2 / 24.0;
            let s = h * (1.0 - z2 / 6.0 + z2 * z2 / 120.0);
            return (c, s);
        }
        if self > 0.0 {
            let rho = self.sqrt();
            ((rho * h).cos(), (rho * h).sin() / rho)
        } else {
            let k = (-self).sqrt();
            ((k * h).cosh(), (k * h).sinh() / k)
        }
    }
}

impl Scalar for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn imag_sqrt_abs(self) -> f64 {
        self.sqrt().im.abs()
    }
    fn cos_sinc(self, h: f64) -> (Complex64, Complex64) {
        let z2 = self * h * h;
        if z2.norm() < 1e-8 {
            let c = 1.0 - z2 / 2.0 + z2 * z2 / 24.0;
            let s = h * (1.0 - z2 / 6.0 + z2 * z2 / 120.0);
            return (c, s);
        }
        let rho = self.sqrt();
        ((rho * h).cos(), (rho * h).sin() / rho)
    }
}

/// Principal square root with `arg ρ ∈ [−π/2, π/2)`.
///
/// For a negative real `λ` this is `−i√|λ|`, the lower end of the branch
/// interval.
pub fn principal_rho(lambda: f64) -> Complex64 {
    if lambda >= 0.0 {
        Complex64::new(lambda.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, -(-lambda).sqrt())
    }
}

/// `sin(a x)/(2a)`, even and entire in `a`.
pub fn half_sinc(a: Complex64, x: f64) -> Complex64 {
    let z = a * x;
    if z.norm() < 1e-4 {
        let z2 = z * z;
        x / 2.0 * (1.0 - z2 / 6.0 + z2 * z2 / 120.0)
    } else {
        (z.sin()) / (2.0 * a)
    }
}
