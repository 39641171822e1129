//! Closed intervals with outward rounding.
//!
//! Basic arithmetic rounds to the enclosing floats using error-free
//! transformations, so exact results stay degenerate. Transcendental
//! functions are widened by two ulps on each side.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

const LIBM_ULPS: u32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Enclosure {
    #[serde(with = "crate::float_repr")]
    pub lo: f64,
    #[serde(with = "crate::float_repr")]
    pub hi: f64,
}

fn widen_down(x: f64, k: u32) -> f64 {
    (0..k).fold(x, |v, _| v.next_down())
}

fn widen_up(x: f64, k: u32) -> f64 {
    (0..k).fold(x, |v, _| v.next_up())
}

fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

pub(crate) fn add_dn(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if !s.is_finite() {
        return s;
    }
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

// Products below this magnitude may lose the fma residual to underflow.
const TINY: f64 = 1e-290;

pub(crate) fn mul_dn(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    if p.abs() < TINY {
        return if p == 0.0 && (a == 0.0 || b == 0.0) { 0.0 } else { p.next_down() };
    }
    if a.mul_add(b, -p) < 0.0 {
        p.next_down()
    } else {
        p
    }
}

pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    if !p.is_finite() {
        return p;
    }
    if p.abs() < TINY {
        return if p == 0.0 && (a == 0.0 || b == 0.0) { 0.0 } else { p.next_up() };
    }
    if a.mul_add(b, -p) > 0.0 {
        p.next_up()
    } else {
        p
    }
}

fn div_residual_sign(a: f64, b: f64, q: f64) -> f64 {
    // a - q*b computed exactly; the true quotient is q + r/b.
    let r = (-q).mul_add(b, a);
    r * b.signum()
}

pub(crate) fn div_dn(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return q;
    }
    if q.abs() < TINY {
        return if a == 0.0 { 0.0 } else { q.next_down() };
    }
    if div_residual_sign(a, b, q) < 0.0 {
        q.next_down()
    } else {
        q
    }
}

pub(crate) fn div_up(a: f64, b: f64) -> f64 {
    let q = a / b;
    if !q.is_finite() {
        return q;
    }
    if q.abs() < TINY {
        return if a == 0.0 { 0.0 } else { q.next_up() };
    }
    if div_residual_sign(a, b, q) > 0.0 {
        q.next_up()
    } else {
        q
    }
}

impl Enclosure {
    pub const ZERO: Enclosure = Enclosure { lo: 0.0, hi: 0.0 };
    pub const ONE: Enclosure = Enclosure { lo: 1.0, hi: 1.0 };

    /// Panics if `lo > hi` or either end is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid enclosure [{lo}, {hi}]");
        Enclosure { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Enclosure { lo: x, hi: x }
    }

    /// Smallest enclosure of `x` given as a float that may carry one rounding error.
    pub fn around(x: f64) -> Self {
        Enclosure { lo: x.next_down(), hi: x.next_up() }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_finite() && self.hi.is_finite() {
            self.lo * 0.5 + self.hi * 0.5
        } else {
            f64::NAN
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_enclosure(&self, other: &Enclosure) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn intersects(&self, other: &Enclosure) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn hull(&self, other: &Enclosure) -> Enclosure {
        Enclosure { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn intersect(&self, other: &Enclosure) -> Option<Enclosure> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Enclosure { lo, hi })
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn scale(&self, k: f64) -> Enclosure {
        if k >= 0.0 {
            Enclosure { lo: mul_dn(self.lo, k), hi: mul_up(self.hi, k) }
        } else {
            Enclosure { lo: mul_dn(self.hi, k), hi: mul_up(self.lo, k) }
        }
    }

    pub fn recip(&self) -> Enclosure {
        assert!(self.lo > 0.0 || self.hi < 0.0, "reciprocal of an interval containing 0");
        Enclosure { lo: div_dn(1.0, self.hi), hi: div_up(1.0, self.lo) }
    }

    pub fn div(&self, other: &Enclosure) -> Enclosure {
        if other.lo > 0.0 && self.lo >= 0.0 {
            return Enclosure { lo: div_dn(self.lo, other.hi), hi: div_up(self.hi, other.lo) };
        }
        *self * other.recip()
    }

    pub fn exp(&self) -> Enclosure {
        let lo = if self.lo == 0.0 { 1.0 } else { widen_down(self.lo.exp(), LIBM_ULPS).max(0.0) };
        let hi = if self.hi == 0.0 { 1.0 } else { widen_up(self.hi.exp(), LIBM_ULPS) };
        Enclosure { lo, hi }
    }

    pub fn exp_m1(&self) -> Enclosure {
        let f = |x: f64, up: bool| {
            if x == 0.0 {
                0.0
            } else if up {
                widen_up(x.exp_m1(), LIBM_ULPS)
            } else {
                widen_down(x.exp_m1(), LIBM_ULPS).max(-1.0)
            }
        };
        Enclosure { lo: f(self.lo, false), hi: f(self.hi, true) }
    }

    /// Natural log; the lower end may be `-inf` when the interval touches 0.
    pub fn ln(&self) -> Enclosure {
        assert!(self.lo >= 0.0, "log of negative interval");
        let f = |x: f64, up: bool| {
            if x == 1.0 {
                0.0
            } else if x == 0.0 {
                f64::NEG_INFINITY
            } else if up {
                widen_up(x.ln(), LIBM_ULPS)
            } else {
                widen_down(x.ln(), LIBM_ULPS)
            }
        };
        Enclosure { lo: f(self.lo, false), hi: f(self.hi, true) }
    }

    pub fn ln_1p(&self) -> Enclosure {
        assert!(self.lo > -1.0, "ln_1p below -1");
        let f = |x: f64, up: bool| {
            if x == 0.0 {
                0.0
            } else if up {
                widen_up(x.ln_1p(), LIBM_ULPS)
            } else {
                widen_down(x.ln_1p(), LIBM_ULPS)
            }
        };
        Enclosure { lo: f(self.lo, false), hi: f(self.hi, true) }
    }

    /// `self^t` for a positive base, computed as `exp(t ln self)`.
    pub fn powf(&self, t: f64) -> Enclosure {
        if t == 0.0 {
            return Enclosure::ONE;
        }
        self.ln().scale(t).exp()
    }

    pub fn sqr(&self) -> Enclosure {
        if self.lo >= 0.0 {
            Enclosure { lo: mul_dn(self.lo, self.lo), hi: mul_up(self.hi, self.hi) }
        } else if self.hi <= 0.0 {
            Enclosure { lo: mul_dn(self.hi, self.hi), hi: mul_up(self.lo, self.lo) }
        } else {
            let m = self.lo.abs().max(self.hi.abs());
            Enclosure { lo: 0.0, hi: mul_up(m, m) }
        }
    }

    pub fn max_with(&self, other: &Enclosure) -> Enclosure {
        Enclosure { lo: self.lo.max(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn min_with(&self, other: &Enclosure) -> Enclosure {
        Enclosure { lo: self.lo.min(other.lo), hi: self.hi.min(other.hi) }
    }
}

impl Add for Enclosure {
    type Output = Enclosure;
    fn add(self, o: Enclosure) -> Enclosure {
        Enclosure { lo: add_dn(self.lo, o.lo), hi: add_up(self.hi, o.hi) }
    }
}

impl Sub for Enclosure {
    type Output = Enclosure;
    fn sub(self, o: Enclosure) -> Enclosure {
        self + (-o)
    }
}

impl Neg for Enclosure {
    type Output = Enclosure;
    fn neg(self) -> Enclosure {
        Enclosure { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Enclosure {
    type Output = Enclosure;
    fn mul(self, o: Enclosure) -> Enclosure {
        if self.lo >= 0.0 && o.lo >= 0.0 {
            return Enclosure { lo: mul_dn(self.lo, o.lo), hi: mul_up(self.hi, o.hi) };
        }
        let cands_lo = [
            mul_dn(self.lo, o.lo),
            mul_dn(self.lo, o.hi),
            mul_dn(self.hi, o.lo),
            mul_dn(self.hi, o.hi),
        ];
        let cands_hi = [
            mul_up(self.lo, o.lo),
            mul_up(self.lo, o.hi),
            mul_up(self.hi, o.lo),
            mul_up(self.hi, o.hi),
        ];
        Enclosure {
            lo: cands_lo.iter().copied().fold(f64::INFINITY, f64::min),
            hi: cands_hi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

/// Running sum of `exp(x)` terms kept as `exp(shift) * [lo, hi]`.
///
/// Terms arrive as log-enclosures; the shift is raised whenever a term would
/// overflow the scaled sums.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LogSum {
    shift: f64,
    lo: f64,
    hi: f64,
}

const RESCALE_AT: f64 = 600.0;

impl LogSum {
    pub fn new() -> Self {
        LogSum { shift: f64::NEG_INFINITY, lo: 0.0, hi: 0.0 }
    }

    fn rescale(&mut self, new_shift: f64) {
        if self.shift.is_finite() {
            let f = Enclosure::point(self.shift - new_shift);
            // shift difference is computed with rounding, so widen it.
            let f = Enclosure::new(f.lo.next_down(), f.hi.next_up()).exp();
            self.lo = mul_dn(self.lo, f.lo);
            self.hi = mul_up(self.hi, f.hi);
        }
        self.shift = new_shift;
    }

    pub fn add_log(&mut self, term: Enclosure) {
        if term.hi == f64::NEG_INFINITY {
            return;
        }
        if !self.shift.is_finite() || term.hi > self.shift + RESCALE_AT {
            self.rescale(term.hi.floor());
        }
        let rel = Enclosure::new(add_dn(term.lo, -self.shift), add_up(term.hi, -self.shift)).exp();
        self.lo = add_dn(self.lo, rel.lo);
        self.hi = add_up(self.hi, rel.hi);
    }

    pub fn is_empty(&self) -> bool {
        self.hi == 0.0
    }

    /// Log of the accumulated sum.
    pub fn log(&self) -> Enclosure {
        if self.hi == 0.0 {
            return Enclosure::point(f64::NEG_INFINITY);
        }
        let l = Enclosure::new(self.lo.max(0.0), self.hi).ln();
        Enclosure { lo: add_dn(l.lo, self.shift), hi: add_up(l.hi, self.shift) }
    }
}
