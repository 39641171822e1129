//! Single-symbol weight series `Σ_e r_e^t exp(β c_e)` with rigorous tails.
//!
//! Gauss uses the same machinery with `r_e = e^{-2}`; callers supply the
//! bounded correction factors from the Möbius prefix.

use crate::enclosure::{Enclosure, LogSum};
use crate::error::MfsError;
use crate::potential::Depth1Law;
use crate::system::{ln_ratio_of, Family};

/// Finite ranges up to this many symbols are summed term by term.
pub(crate) const DIRECT_MAX: u64 = 4096;
/// Hard cap on term-by-term work inside a single tail.
const DIRECT_BUDGET: u64 = 1 << 24;
const PANEL_BUDGET: usize = 4_000_000;
const REMAINDER_REL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Convergence {
    Converges,
    Diverges,
    Undecided,
}

pub(crate) struct Series<'a> {
    pub family: &'a Family,
    pub t: f64,
    pub beta: f64,
    pub psi: &'a Depth1Law,
    /// Largest symbol, `None` for the full infinite alphabet.
    pub limit: Option<u64>,
}

/// `ln r(x) = ln_k - s ln(x+shift) - q ln ln(x+shift) + F`, `F` bounded for large `x`.
struct RatioShape {
    ln_k: Enclosure,
    s: f64,
    q: f64,
    shift: f64,
}

fn ratio_shape(family: &Family) -> Option<RatioShape> {
    let ln = |x: f64| Enclosure::point(x).ln();
    Some(match family {
        Family::Gauss => RatioShape { ln_k: Enclosure::ZERO, s: 2.0, q: 0.0, shift: 0.0 },
        Family::Lueroth => RatioShape { ln_k: Enclosure::ZERO, s: 2.0, q: 0.0, shift: 0.0 },
        Family::GeneralizedLueroth => RatioShape { ln_k: ln(4.0), s: 3.0, q: 0.0, shift: 0.0 },
        Family::PowerLaw { a, p } => RatioShape { ln_k: ln(*a), s: *p, q: 0.0, shift: 0.0 },
        Family::LogPower { a } => RatioShape { ln_k: ln(*a), s: 1.0, q: 2.0, shift: 2.0 },
        Family::FiniteSelfSimilar { .. } => return None,
    })
}

/// Range of `F` for symbols `e >= e_min`.
fn ratio_factor(family: &Family, e_min: f64) -> Enclosure {
    let l1p = |x: f64| Enclosure::point(1.0).div(&Enclosure::point(x)).ln_1p();
    match family {
        Family::Lueroth => Enclosure::new(-l1p(e_min).hi, 0.0),
        Family::GeneralizedLueroth => {
            let two = Enclosure::point(2.0).div(&Enclosure::point(e_min)).ln_1p();
            Enclosure::new(-(l1p(e_min) + two).hi, 0.0)
        }
        _ => Enclosure::ZERO,
    }
}

/// Upper bound of `sup_{e > m} ln(r_e / r_{e+1})`.
fn ln_step_bound(family: &Family, m: u64) -> f64 {
    let e = (m + 1) as f64;
    let l1p = |k: f64, x: f64| Enclosure::point(k).div(&Enclosure::point(x)).ln_1p();
    let v = match family {
        Family::Gauss => l1p(1.0, e).scale(2.0),
        Family::Lueroth => l1p(2.0, e),
        Family::GeneralizedLueroth => l1p(3.0, e),
        Family::PowerLaw { p, .. } => l1p(1.0, e).scale(*p),
        Family::LogPower { .. } => {
            let u = e + 2.0;
            let a = l1p(1.0, u);
            let inner = a.div(&Enclosure::point(u).ln()).ln_1p();
            a + inner.scale(2.0)
        }
        Family::FiniteSelfSimilar { .. } => Enclosure::point(f64::INFINITY),
    };
    v.hi
}

fn neg_inf() -> Enclosure {
    Enclosure::point(f64::NEG_INFINITY)
}

impl Series<'_> {
    pub fn ln_term(&self, e: u64) -> Enclosure {
        let zeta = if self.t == 0.0 { Enclosure::ZERO } else { ln_ratio_of(self.family, e).scale(self.t) };
        let psi = if self.beta == 0.0 {
            Enclosure::ZERO
        } else {
            self.psi.value(e).expect("potential checked against alphabet").scale(self.beta)
        };
        zeta + psi
    }

    /// Adds terms `from..=to` into `acc`.
    pub fn accumulate(&self, acc: &mut LogSum, from: u64, to: u64) {
        for e in from..=to {
            acc.add_log(self.ln_term(e));
        }
    }

    fn direct(&self, from: u64, to: u64) -> Enclosure {
        let mut acc = LogSum::new();
        self.accumulate(&mut acc, from, to);
        acc.log()
    }

    fn weighted_s(&self, shape: &RatioShape) -> Enclosure {
        let base = Enclosure::point(shape.s).scale(self.t);
        match self.psi {
            Depth1Law::NegTwoLog => base + Enclosure::point(2.0 * self.beta),
            _ => base,
        }
    }

    /// Whether the infinite series converges; finite alphabets always do.
    pub fn convergence(&self) -> Convergence {
        if self.limit.is_some() {
            return Convergence::Converges;
        }
        if let Depth1Law::NegIdentity = self.psi {
            if self.beta > 0.0 {
                return Convergence::Converges;
            }
            if self.beta < 0.0 {
                return Convergence::Diverges;
            }
        }
        let Some(shape) = ratio_shape(self.family) else {
            return Convergence::Converges;
        };
        let s = self.weighted_s(&shape);
        let q = shape.q * self.t;
        if s.lo > 1.0 || (s.lo == 1.0 && s.hi == 1.0 && q > 1.0) {
            Convergence::Converges
        } else if s.hi < 1.0 || (s.hi <= 1.0 && q <= 1.0) {
            Convergence::Diverges
        } else {
            Convergence::Undecided
        }
    }

    /// Log of `Σ_{m < e <= limit}` of the terms; `-inf` when empty.
    pub fn ln_tail(&self, m: u64) -> Result<Enclosure, MfsError> {
        if let Some(n) = self.limit {
            if m >= n {
                return Ok(neg_inf());
            }
            if n - m <= DIRECT_MAX {
                return Ok(self.direct(m + 1, n));
            }
        }
        match self.convergence() {
            Convergence::Diverges => return Err(MfsError::TailDivergent),
            Convergence::Undecided => {
                return Err(MfsError::InvalidArgument("series convergence undecided at this exponent".into()))
            }
            Convergence::Converges => {}
        }
        if let Depth1Law::NegIdentity = self.psi {
            if self.beta != 0.0 {
                return self.geometric_tail(m);
            }
        }
        self.power_log_tail(m)
    }

    fn geometric_tail(&self, m: u64) -> Result<Enclosure, MfsError> {
        // NegIdentity with beta > 0 on an infinite law, or a long finite range.
        if self.beta < 0.0 {
            let n = self.limit.expect("divergent case handled earlier");
            if n - m > DIRECT_BUDGET {
                return Err(MfsError::Budget("growing geometric range too long".into()));
            }
            return Ok(self.direct(m + 1, n));
        }
        let ln_rho = |k: u64| -> f64 {
            if self.t >= 0.0 {
                -self.beta
            } else {
                Enclosure::point(ln_step_bound(self.family, k)).scale(-self.t).hi - self.beta
            }
        };
        let mut start = m;
        while ln_rho(start) > -0.5 * self.beta {
            start = (start.max(1)) * 2;
            if start - m > DIRECT_BUDGET {
                return Err(MfsError::Budget("geometric ratio bound not reached".into()));
            }
        }
        if let Some(n) = self.limit {
            if start >= n {
                return Ok(self.direct(m + 1, n));
            }
        }
        let mut acc = LogSum::new();
        if start > m {
            self.accumulate(&mut acc, m + 1, start);
        }
        let first = self.ln_term(start + 1);
        let lr = ln_rho(start);
        // tail <= first / (1 - rho)
        let one_minus = (-Enclosure::point(lr).exp_m1()).ln();
        let upper = first.hi - one_minus.lo;
        acc.add_log(Enclosure::new(first.lo, upper.next_up()));
        Ok(acc.log())
    }

    fn power_log_tail(&self, m: u64) -> Result<Enclosure, MfsError> {
        let shape = ratio_shape(self.family)
            .ok_or_else(|| MfsError::InvalidArgument("explicit ratio lists have no analytic tail".into()))?;
        let s = self.weighted_s(&shape);
        let q = shape.q * self.t;
        let s_mid = s.mid();
        let mut acc = LogSum::new();
        let mut m = m;
        // one-signed derivative of ln h beyond the turning point exp(-q/s)
        if s_mid * q < 0.0 {
            let turn = (-q / s_mid).exp() * (1.0 + 1e-9) + 2.0;
            let last_direct = (turn - shape.shift).ceil().max(0.0);
            if last_direct > m as f64 {
                let stop = match self.limit {
                    Some(n) => (last_direct as u64).min(n),
                    None => last_direct as u64,
                };
                if stop - m > DIRECT_BUDGET {
                    return Err(MfsError::Budget("turning point too far for direct summation".into()));
                }
                self.accumulate(&mut acc, m + 1, stop);
                m = stop;
                if self.limit.is_some_and(|n| m >= n) {
                    return Ok(acc.log());
                }
            }
        }
        let decreasing = s_mid > 0.0 || (s_mid == 0.0 && q >= 0.0);
        let x0 = m as f64 + shape.shift;
        let xl = self.limit.map(|n| n as f64 + shape.shift);
        let plus1 = |x: Option<f64>| x.map(|v| v + 1.0);
        let (lo_range, hi_range) = if decreasing {
            ((x0 + 1.0, plus1(xl)), (x0, xl))
        } else {
            ((x0, xl), (x0 + 1.0, plus1(xl)))
        };
        let lo = ln_power_log_integral(lo_range.0, lo_range.1, s.hi, q)?.lo;
        let hi = ln_power_log_integral(hi_range.0, hi_range.1, s.lo, q)?.hi;
        let mut ln_k = shape.ln_k.scale(self.t);
        if let Depth1Law::Constant { c } = self.psi {
            ln_k = ln_k + Enclosure::point(*c).scale(self.beta);
        }
        let e_min = (m + 1) as f64;
        let mut factor = ratio_factor(self.family, e_min).scale(self.t);
        if let (Depth1Law::NegTwoLog, true) = (self.psi, shape.shift != 0.0) {
            // ln e = ln u + ln(1 - shift/u)
            let u = e_min + shape.shift;
            let r = Enclosure::point(-shape.shift).div(&Enclosure::point(u)).ln_1p();
            factor = factor + Enclosure::new(r.lo, 0.0).scale(-2.0 * self.beta);
        }
        let body = Enclosure::new(lo, hi.max(lo));
        acc.add_log(body + ln_k + factor);
        Ok(acc.log())
    }
}

/// Log of `∫_a^b x^{-s} (ln x)^{-q} dx`; `b = None` means infinity.
pub(crate) fn ln_power_log_integral(a: f64, b: Option<f64>, s: f64, q: f64) -> Result<Enclosure, MfsError> {
    if let Some(bv) = b {
        if bv <= a {
            return Ok(neg_inf());
        }
    }
    if q == 0.0 {
        return Ok(ln_power_integral(a, b, s));
    }
    let la = Enclosure::point(a).ln();
    let lb = b.map(|v| Enclosure::point(v).ln());
    let lambda = s - 1.0;
    // widest range for the upper end, narrowest for the lower end
    let upper = ln_v_integral(la.lo, lb.map(|x| x.hi), lambda, q)?;
    let lower = ln_v_integral(la.hi, lb.map(|x| x.lo), lambda, q)?;
    Ok(Enclosure::new(lower.lo, upper.hi.max(lower.lo)))
}

fn ln_power_integral(a: f64, b: Option<f64>, s: f64) -> Enclosure {
    let la = Enclosure::point(a).ln();
    let one_minus_s = Enclosure::ONE - Enclosure::point(s);
    match b {
        None => {
            assert!(s > 1.0, "power tail needs s > 1");
            la * one_minus_s - (Enclosure::point(s) - Enclosure::ONE).ln()
        }
        Some(bv) => {
            let l = Enclosure::point(bv).ln() - la;
            if s == 1.0 {
                return l.ln();
            }
            let z = one_minus_s * l;
            let phi = |zp: f64| -> Enclosure {
                if zp == 0.0 {
                    Enclosure::ONE
                } else {
                    Enclosure::point(zp).exp_m1().div(&Enclosure::point(zp))
                }
            };
            // expm1(z)/z increases in z
            let ratio = Enclosure::new(phi(z.lo).lo, phi(z.hi).hi);
            la * one_minus_s + l.ln() + ratio.ln()
        }
    }
}

/// Log of `∫_a^b exp(-λv) v^{-q} dv` by bounded panel sums.
fn ln_v_integral(a: f64, b: Option<f64>, lambda: f64, q: f64) -> Result<Enclosure, MfsError> {
    if let Some(bv) = b {
        if bv <= a {
            return Ok(neg_inf());
        }
    }
    let phi = |v: f64| Enclosure::point(v).scale(-lambda) - Enclosure::point(v).ln().scale(q);
    let convex = q >= 0.0;
    let turn = if lambda != 0.0 && -q / lambda > a { Some(-q / lambda) } else { None };
    let mut reference = phi(a).hi;
    if let Some(v) = turn {
        if b.is_none_or(|bv| v < bv) {
            reference = reference.max(phi(v).hi);
        }
    }
    if let Some(bv) = b {
        reference = reference.max(phi(bv).hi);
    }
    let h = |v: f64| (phi(v) - Enclosure::point(reference)).exp();
    let rho = if convex { 0.01 } else { 1e-3 };
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    let mut v = a;
    let mut hv = h(v);
    let mut panels = 0usize;
    loop {
        let slope = (lambda + q / v).abs();
        let mut step = rho * if slope * v > 1.0 { 1.0 / slope } else { v };
        if let Some(t) = turn {
            if v < t && v + step > t {
                step = t - v;
            }
        }
        let mut vn = v + step;
        if let Some(bv) = b {
            vn = vn.min(bv);
        }
        if vn <= v {
            vn = v.next_up();
        }
        let width = Enclosure::point(vn) - Enclosure::point(v);
        let hn = h(vn);
        if convex {
            let hm = h(0.5 * (v + vn));
            // midpoint is exact only up to rounding of (v+vn)/2; both rules bracket
            // the integral of a convex function for any interior point on the lower side
            let mid_lo = hm.lo * width.lo;
            let trap = (hv + hn).scale(0.5) * width;
            lo = crate::enclosure::add_dn(lo, mid_lo.max(0.0) * (1.0 - 4.0 * f64::EPSILON));
            hi = crate::enclosure::add_up(hi, trap.hi);
        } else {
            lo = crate::enclosure::add_dn(lo, crate::enclosure::mul_dn(width.lo, hv.lo.min(hn.lo)));
            hi = crate::enclosure::add_up(hi, crate::enclosure::mul_up(width.hi, hv.hi.max(hn.hi)));
        }
        v = vn;
        hv = hn;
        panels += 1;
        if panels > PANEL_BUDGET {
            return Err(MfsError::Budget("tail integral panels".into()));
        }
        match b {
            Some(bv) if v >= bv => break,
            Some(_) => continue,
            None => {
                if let Some(r) = remainder_factor(v, lambda, q, turn) {
                    let rem = r * hv;
                    if rem.hi <= REMAINDER_REL * lo {
                        hi = crate::enclosure::add_up(hi, rem.hi);
                        break;
                    }
                }
            }
        }
    }
    let inner = Enclosure::new(lo.max(0.0), hi).ln();
    Ok(inner + Enclosure::point(reference))
}

/// `R` with `∫_V^∞ h <= R h(V)`, when such a bound is available at `V`.
fn remainder_factor(v: f64, lambda: f64, q: f64, turn: Option<f64>) -> Option<Enclosure> {
    if turn.is_some_and(|t| v <= t) {
        return None;
    }
    let ve = Enclosure::point(v);
    if q >= 0.0 {
        let by_lambda = (lambda > 0.0).then(|| Enclosure::point(lambda).recip());
        let by_q = (q > 1.0).then(|| ve.div(&Enclosure::point(q - 1.0)));
        match (by_lambda, by_q) {
            (Some(x), Some(y)) => Some(if x.hi < y.hi { x } else { y }),
            (x, y) => x.or(y),
        }
    } else if lambda > 0.0 && v >= 2.0 * (-q) / lambda {
        Some(Enclosure::point(2.0).div(&Enclosure::point(lambda)))
    } else {
        None
    }
}
