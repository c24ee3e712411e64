use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::Float;
use serde::{Deserialize, Serialize};

/// A value with a rigorous bound on its truncation error.
///
/// `tail` bounds `|true - value|` where the error comes from cutting an
/// infinite sum or product short. Rounding of `value` to `f64` is not part of
/// the bound. Arithmetic propagates tails with first-order bounds and never
/// shrinks them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailBounded {
    pub value: f64,
    pub tail: f64,
}

impl TailBounded {
    pub fn new(value: f64, tail: f64) -> Self {
        assert!(tail >= 0.0 && tail.is_finite(), "tail must be finite and nonnegative, got {tail}");
        Self { value, tail }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, tail: 0.0 }
    }

    pub fn lower(&self) -> f64 {
        self.value - self.tail
    }

    pub fn upper(&self) -> f64 {
        self.value + self.tail
    }

    pub fn contains(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tail
    }

    /// True when the two enclosures overlap, i.e. `|a - b| <= tail_a + tail_b`.
    pub fn agrees_with(&self, other: &TailBounded) -> bool {
        (self.value - other.value).abs() <= self.tail + other.tail
    }

    pub fn scale(self, c: f64) -> Self {
        Self::new(self.value * c, self.tail * c.abs())
    }

    /// Quotient, defined when the divisor's enclosure excludes zero.
    pub fn checked_div(self, rhs: Self) -> Option<Self> {
        let b = rhs.value.abs();
        if b <= rhs.tail {
            return None;
        }
        let tail = (self.value.abs() * rhs.tail + b * self.tail) / (b * (b - rhs.tail));
        Some(Self::new(self.value / rhs.value, tail))
    }
}

impl Add for TailBounded {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.value + rhs.value, self.tail + rhs.tail)
    }
}

impl Sub for TailBounded {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.value - rhs.value, self.tail + rhs.tail)
    }
}

impl Neg for TailBounded {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, self.tail)
    }
}

impl Mul for TailBounded {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let tail = self.value.abs() * rhs.tail + rhs.value.abs() * self.tail + self.tail * rhs.tail;
        Self::new(self.value * rhs.value, tail)
    }
}

impl fmt::Display for TailBounded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.17e} ± {:.3e}", self.value, self.tail)
    }
}

/// High-precision counterpart of [`TailBounded`], used while evaluating the
/// constants. The tail is kept as `f64`; only the value needs the extra bits.
#[derive(Debug, Clone, PartialEq)]
pub struct Precise {
    pub value: Float,
    pub tail: f64,
}

impl Precise {
    pub fn new(value: Float, tail: f64) -> Self {
        assert!(tail >= 0.0 && tail.is_finite(), "tail must be finite and nonnegative, got {tail}");
        Self { value, tail }
    }

    pub fn exact(value: Float) -> Self {
        Self { value, tail: 0.0 }
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn to_tail_bounded(&self) -> TailBounded {
        TailBounded::new(self.to_f64(), self.tail)
    }

    /// Decimal expansion with `digits` significant digits.
    pub fn digits(&self, digits: usize) -> String {
        self.value.to_string_radix(10, Some(digits))
    }

    pub fn mul(&self, rhs: &Precise) -> Precise {
        let a = self.to_f64().abs();
        let b = rhs.to_f64().abs();
        let tail = a * rhs.tail + b * self.tail + self.tail * rhs.tail;
        Precise::new(Float::with_val(self.value.prec(), &self.value * &rhs.value), tail)
    }

    /// Quotient; `None` when the divisor's enclosure touches zero.
    pub fn div(&self, rhs: &Precise) -> Option<Precise> {
        let a = self.to_f64().abs();
        let b = rhs.to_f64().abs();
        if b <= rhs.tail {
            return None;
        }
        let tail = (a * rhs.tail + b * self.tail) / (b * (b - rhs.tail));
        Some(Precise::new(Float::with_val(self.value.prec(), &self.value / &rhs.value), tail))
    }

    /// Multiply by an exactly known factor.
    pub fn scale(&self, c: &Float) -> Precise {
        let tail = self.tail * c.to_f64().abs();
        Precise::new(Float::with_val(self.value.prec(), &self.value * c), tail)
    }
}
