//! Double-double arithmetic for the jackknife integrals, whose leading digits
//! cancel when multiplied by the sample size.

use std::ops::{Add, Mul, Neg, Sub};

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn norm(hi: f64, lo: f64) -> Self {
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }

    /// `a - b` without rounding loss.
    pub fn diff(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, -b);
        Dd { hi, lo }
    }

    /// `num / den` to double-double accuracy.
    pub fn ratio(num: f64, den: f64) -> Self {
        let q = num / den;
        let rem = (-q).mul_add(den, num);
        Self::norm(q, rem / den)
    }

    /// `1 - num / den`, the product-limit factor.
    pub fn survival_factor(num: usize, den: usize) -> Self {
        Self::ONE - Self::ratio(num as f64, den as f64)
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::norm(s, e + f)
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + -o
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        Dd::norm(p, e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_lost_bits() {
        let tiny = 1e-20;
        let x = Dd::new(1.0) + Dd::new(tiny) - Dd::ONE;
        assert_eq!(x.value(), tiny);
        let third = Dd::ratio(1.0, 3.0);
        assert!(((third * Dd::new(3.0)) - Dd::ONE).value().abs() < 1e-31);
        assert_eq!(Dd::diff(1e16, 1.0).value(), 1e16 - 1.0);
        assert!((Dd::diff(1.0, 1e-17) - Dd::ONE).value() == -1e-17);
    }
}
