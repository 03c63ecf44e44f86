//! Outward-rounded interval arithmetic, just enough for the potential certificates.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

// libm `ln` is within one ulp; two steps keep the enclosure honest
const LN_ULPS: usize = 2;

fn down(x: f64, n: usize) -> f64 {
    (0..n).fold(x, |v, _| v.next_down())
}

fn up(x: f64, n: usize) -> f64 {
    (0..n).fold(x, |v, _| v.next_up())
}

impl Interval {
    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    /// Enclosure of `ln x` for `x > 0`.
    pub fn ln(self) -> Self {
        let lo = if self.lo > 0.0 { down(self.lo.ln(), LN_ULPS) } else { f64::NEG_INFINITY };
        Interval { lo, hi: up(self.hi.ln(), LN_ULPS) }
    }

    pub fn abs(self) -> Self {
        if self.lo >= 0.0 {
            self
        } else if self.hi <= 0.0 {
            -self
        } else {
            Interval { lo: 0.0, hi: self.hi.max(-self.lo) }
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, o: Interval) -> Interval {
        Interval { lo: (self.lo + o.lo).next_down(), hi: (self.hi + o.hi).next_up() }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, o: Interval) -> Interval {
        self + (-o)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, o: Interval) -> Interval {
        let p = [self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi];
        // 0·∞ only arises from a zero weight on a pole; the term is then absent
        let p = p.map(|v| if v.is_nan() { 0.0 } else { v });
        let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo: lo.next_down(), hi: hi.next_up() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn encloses_the_float_result(a in 1e-6f64..10.0, b in -10.0f64..10.0, c in 1e-6f64..10.0) {
            let (ia, ib, ic) = (Interval::point(a), Interval::point(b), Interval::point(c));
            prop_assert!((ia + ib).contains(a + b));
            prop_assert!((ia * ib).contains(a * b));
            prop_assert!((ia - ib).contains(a - b));
            prop_assert!(ic.ln().contains(c.ln()));
            prop_assert!((ia * ic.ln()).contains(a * c.ln()));
        }
    }

    #[test]
    fn ln_enclosure_is_tight() {
        let v = Interval::point((-2.0f64).exp()).ln();
        assert!((v.lo + 2.0).abs() < 1e-14 && (v.hi + 2.0).abs() < 1e-14 && v.lo < v.hi);
    }
}
