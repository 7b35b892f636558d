//! Exact root-of-unity phase arithmetic.
//!
//! Cocycle identities have to be checked exactly, so every cocycle, slant
//! product and charge in this crate carries its phase as a reduced rational
//! exponent `k/n`, meaning `exp(2πi k/n)`. Conversion to `Complex64` happens
//! only when phases are attached to state amplitudes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::ops::{Div, Mul, MulAssign};

/// A root of unity `exp(2πi · numerator / denominator)` in canonical form:
/// `0 <= numerator < denominator` and `gcd(numerator, denominator) = 1`
/// (the unit phase is `0/1`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PhaseExponent {
    num: i64,
    den: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

pub fn lcm(a: i64, b: i64) -> i64 {
    a / gcd(a, b) * b
}

impl PhaseExponent {
    pub const ONE: PhaseExponent = PhaseExponent { num: 0, den: 1 };

    /// `exp(2πi num/den)`, reduced mod 1 and to lowest terms.
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let (mut num, mut den) = if den < 0 { (-num, -den) } else { (num, den) };
        num = num.rem_euclid(den);
        let g = gcd(num, den);
        if g > 1 {
            num /= g;
            den /= g;
        }
        if num == 0 {
            den = 1;
        }
        PhaseExponent { num, den }
    }

    pub fn minus_one() -> Self {
        PhaseExponent::new(1, 2)
    }

    pub fn is_one(&self) -> bool {
        self.num == 0
    }

    pub fn numerator(&self) -> i64 {
        self.num
    }

    pub fn denominator(&self) -> i64 {
        self.den
    }

    pub fn inv(&self) -> Self {
        PhaseExponent::new(-self.num, self.den)
    }

    pub fn pow(&self, k: i64) -> Self {
        PhaseExponent::new(
            self.num.checked_mul(k).expect("phase exponent overflow"),
            self.den,
        )
    }

    /// Exponent as a fraction of a full turn, in `[0, 1)`.
    pub fn turns(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn to_complex(&self) -> Complex64 {
        match (self.num, self.den) {
            (0, _) => Complex64::new(1.0, 0.0),
            (1, 2) => Complex64::new(-1.0, 0.0),
            (1, 4) => Complex64::new(0.0, 1.0),
            (3, 4) => Complex64::new(0.0, -1.0),
            _ => Complex64::from_polar(1.0, TAU * self.turns()),
        }
    }
}

impl Default for PhaseExponent {
    fn default() -> Self {
        PhaseExponent::ONE
    }
}

impl Mul for PhaseExponent {
    type Output = PhaseExponent;
    fn mul(self, rhs: PhaseExponent) -> PhaseExponent {
        let den = lcm(self.den, rhs.den);
        PhaseExponent::new(self.num * (den / self.den) + rhs.num * (den / rhs.den), den)
    }
}

impl MulAssign for PhaseExponent {
    fn mul_assign(&mut self, rhs: PhaseExponent) {
        *self = *self * rhs;
    }
}

impl Div for PhaseExponent {
    type Output = PhaseExponent;
    fn div(self, rhs: PhaseExponent) -> PhaseExponent {
        self * rhs.inv()
    }
}

impl fmt::Debug for PhaseExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e(2πi·{}/{})", self.num, self.den)
    }
}

impl fmt::Display for PhaseExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.num, self.den) {
            (0, _) => write!(f, "1"),
            (1, 2) => write!(f, "-1"),
            (1, 4) => write!(f, "i"),
            (3, 4) => write!(f, "-i"),
            (n, d) => write!(f, "exp(2πi·{n}/{d})"),
        }
    }
}

/// Product of an iterator of phases.
pub fn phase_product<I: IntoIterator<Item = PhaseExponent>>(iter: I) -> PhaseExponent {
    iter.into_iter().fold(PhaseExponent::ONE, |a, b| a * b)
}
