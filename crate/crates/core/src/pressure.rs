//! Partition functions and rigorous pressure enclosures.

use crate::enclosure::{add_dn, add_up, div_dn, div_up, Enclosure, LogSum};
use crate::error::MfsError;
use crate::potential::WeightedPotential;
use crate::series::{Convergence, Series};
use crate::system::Family;
use serde::{Deserialize, Serialize};

/// Outcome of a pressure evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PressureValue {
    Finite { enclosure: Enclosure },
    PlusInfinity,
    /// Only a lower bound could be certified.
    Indeterminate {
        #[serde(with = "crate::float_repr")]
        lower: f64,
    },
}

impl PressureValue {
    pub fn lower(&self) -> f64 {
        match self {
            PressureValue::Finite { enclosure } => enclosure.lo,
            PressureValue::PlusInfinity => f64::INFINITY,
            PressureValue::Indeterminate { lower } => *lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match self {
            PressureValue::Finite { enclosure } => enclosure.hi,
            _ => f64::INFINITY,
        }
    }

    pub fn enclosure(&self) -> Option<Enclosure> {
        match self {
            PressureValue::Finite { enclosure } => Some(*enclosure),
            _ => None,
        }
    }

    pub fn sign(&self) -> Sign {
        if self.upper() < 0.0 {
            Sign::Negative
        } else if self.lower() > 0.0 {
            Sign::Positive
        } else {
            Sign::ZeroStraddling
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Negative,
    Positive,
    ZeroStraddling,
}

/// Word-enumeration limits for pressure evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DepthPolicy {
    pub max_depth: usize,
    pub symbol_cap: u64,
    pub target_width: f64,
}

impl Default for DepthPolicy {
    fn default() -> Self {
        DepthPolicy { max_depth: 6, symbol_cap: 4096, target_width: 1e-3 }
    }
}

impl DepthPolicy {
    pub fn validate(&self) -> Result<(), MfsError> {
        if self.max_depth == 0 || self.symbol_cap == 0 {
            return Err(MfsError::InvalidArgument("depth and symbol cap must be positive".into()));
        }
        if !(self.target_width > 0.0) {
            return Err(MfsError::InvalidArgument("target width must be positive".into()));
        }
        Ok(())
    }
}

const WORD_BUDGET: u64 = 50_000_000;
/// Relative mass (times lumping error) below which subtrees and symbol tails are bounded instead of expanded.
const PRUNE_REL: f64 = 1e-5;
const SERIES_TERMS_MAX: u64 = 1 << 22;

fn series_of(wp: &WeightedPotential) -> Series<'_> {
    Series { family: wp.system.family(), t: wp.t, beta: wp.beta, psi: &wp.psi, limit: wp.system.card() }
}

/// `(1/n) log Z_n` with sup weights on the upper end and inf weights on the lower end.
///
/// Symbols above `cap` enter through the analytic tail of the family law.
pub fn partition_bounds(wp: &WeightedPotential, n: usize, cap: u64) -> Result<Enclosure, MfsError> {
    if n == 0 || cap == 0 {
        return Err(MfsError::InvalidArgument("depth and cap must be positive".into()));
    }
    let ln_z = if wp.system.is_gauss() {
        let mut engine = GaussEngine::new(wp, cap, 0.0)?;
        let mut out = None;
        for k in 1..=n {
            out = Some(engine.pass(k)?);
        }
        // the engine already normalises by the word length
        return Ok(out.expect("n >= 1"));
    } else if let Family::FiniteSelfSimilar { .. } = wp.system.family() {
        enumerate_finite_words(wp, n, cap)?
    } else {
        // affine weights are multiplicative, so Z_n is the n-th power of Z_1
        let s = series_of(wp);
        let top = match wp.system.card() {
            Some(c) => c.min(cap),
            None => cap,
        };
        let mut acc = LogSum::new();
        s.accumulate(&mut acc, 1, top);
        acc.add_log(s.ln_tail(top)?);
        acc.log().scale(n as f64)
    };
    Ok(div_enclosure(ln_z, n as f64))
}

fn div_enclosure(x: Enclosure, n: f64) -> Enclosure {
    Enclosure::new(div_dn(x.lo, n), div_up(x.hi, n))
}

fn enumerate_finite_words(wp: &WeightedPotential, n: usize, cap: u64) -> Result<Enclosure, MfsError> {
    let card = wp.system.card().expect("finite list").min(cap);
    let words = (card as f64).powi(n as i32);
    if words > WORD_BUDGET as f64 {
        return Err(MfsError::Budget(format!("{words} words at depth {n}")));
    }
    let terms: Vec<Enclosure> = (1..=card).map(|e| series_of(wp).ln_term(e)).collect();
    fn walk(terms: &[Enclosure], left: usize, acc_log: Enclosure, out: &mut LogSum) {
        if left == 0 {
            out.add_log(acc_log);
            return;
        }
        for t in terms {
            walk(terms, left - 1, acc_log + *t, out);
        }
    }
    let mut out = LogSum::new();
    walk(&terms, n, Enclosure::ZERO, &mut out);
    Ok(out.log())
}

/// `log Σ_e r_e^t e^{β c_e}` for self-similar systems, to width `eps`.
pub fn exact_series_pressure(wp: &WeightedPotential, eps: f64) -> PressureValue {
    series_pressure(wp, |enc| enc.width() <= eps)
}

fn series_pressure(wp: &WeightedPotential, done: impl Fn(&Enclosure) -> bool) -> PressureValue {
    assert!(wp.system.is_self_similar(), "series pressure needs a self-similar system");
    let s = series_of(wp);
    match s.convergence() {
        Convergence::Diverges => return PressureValue::PlusInfinity,
        Convergence::Undecided => {
            let mut acc = LogSum::new();
            s.accumulate(&mut acc, 1, 4096);
            return PressureValue::Indeterminate { lower: acc.log().lo };
        }
        Convergence::Converges => {}
    }
    let mut acc = LogSum::new();
    let mut summed = 0u64;
    let mut head = 64u64;
    let mut best: Option<Enclosure> = None;
    loop {
        let top = match s.limit {
            Some(c) => head.min(c),
            None => head,
        };
        s.accumulate(&mut acc, summed + 1, top);
        summed = top;
        match s.ln_tail(top) {
            Ok(tail) => {
                let mut total = acc;
                total.add_log(tail);
                let enc = total.log();
                let enc = match best {
                    Some(b) => b.intersect(&enc).unwrap_or(enc),
                    None => enc,
                };
                best = Some(enc);
                if done(&enc) || s.limit.is_some_and(|c| top >= c) {
                    return PressureValue::Finite { enclosure: enc };
                }
            }
            Err(_) if best.is_some() => {
                return PressureValue::Finite { enclosure: best.expect("checked") };
            }
            Err(_) => {}
        }
        if head >= SERIES_TERMS_MAX {
            return match best {
                Some(enc) => PressureValue::Finite { enclosure: enc },
                None => PressureValue::Indeterminate { lower: acc.log().lo },
            };
        }
        head *= 8;
    }
}

/// Pressure enclosure; the Gauss path keeps the best bounds over depths.
///
/// An enclosure wider than `target_width` is still returned as finite;
/// `Indeterminate` means the upper bound itself could not be certified.
pub fn pressure(wp: &WeightedPotential, pol: &DepthPolicy) -> PressureValue {
    if wp.system.is_self_similar() {
        return exact_series_pressure(wp, pol.target_width);
    }
    gauss_pressure(wp, pol, |enc| enc.width() <= pol.target_width)
}

/// Three-valued sign of the pressure, refined only until the sign is settled.
pub fn pressure_sign(wp: &WeightedPotential, pol: &DepthPolicy) -> Sign {
    pressure_for_sign(wp, pol).sign()
}

pub(crate) fn pressure_for_sign(wp: &WeightedPotential, pol: &DepthPolicy) -> PressureValue {
    let settled = |enc: &Enclosure| enc.hi < 0.0 || enc.lo > 0.0;
    if wp.system.is_self_similar() {
        return series_pressure(wp, |enc| settled(enc) || enc.width() <= 1e-14 * (1.0 + enc.lo.abs()));
    }
    gauss_pressure(wp, pol, settled)
}

/// Hull pieces used by [`operator_bounds`].
const OPERATOR_PIECES: usize = 32;
/// Fixed-point test functions tried by [`operator_bounds`].
const OPERATOR_CANDIDATES: usize = 4;

/// Bounds `inf Lh/h <= e^P <= sup Lh/h` for the transfer operator of a finite Gauss system.
///
/// Test functions are `h(x) = (x + c)^{-2t}` with `c = e + x_e`, `x_e` the fixed
/// point of branch `e`; `h` is an eigenfunction of that single branch, so the
/// bound is sharp when one branch dominates.
fn operator_bounds(wp: &WeightedPotential, cap: u64) -> Option<Enclosure> {
    let card = wp.system.card().filter(|&c| c <= cap)?;
    let hull = wp.system.limit_hull();
    let t = wp.t;
    let psi: Vec<Enclosure> = (1..=card).map(|e| wp.psi.value(e).map(|v| v.scale(wp.beta))).collect::<Result<_, _>>().ok()?;
    let fixed = |e: u64| {
        let ef = e as f64;
        2.0 / (ef + (ef * ef + 4.0).sqrt())
    };
    // single-branch eigenvalues pick the candidates
    let mut order: Vec<u64> = (1..=card).collect();
    let single = |e: u64| psi[e as usize - 1].mid() + 2.0 * t * fixed(e).ln();
    order.sort_by(|a, b| single(*b).total_cmp(&single(*a)));
    let width = hull.hi - hull.lo;
    let mut best: Option<Enclosure> = None;
    for &cand in order.iter().take(OPERATOR_CANDIDATES) {
        let c = Enclosure::point(cand as f64 + fixed(cand));
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..OPERATOR_PIECES {
            let a = if k == 0 { hull.lo } else { (hull.lo + width * k as f64 / OPERATOR_PIECES as f64).next_down() };
            let b = if k + 1 == OPERATOR_PIECES { hull.hi } else { (hull.lo + width * (k + 1) as f64 / OPERATOR_PIECES as f64).next_up() };
            let mut sum = LogSum::new();
            for e in 1..=card {
                // (1 + c(x+e)) / (x + c) is a Moebius map of x, monotone on the piece
                let at = |x: f64| {
                    let x = Enclosure::point(x);
                    (Enclosure::ONE + c * (x + Enclosure::point(e as f64))).div(&(x + c))
                };
                let g = at(a).hull(&at(b));
                sum.add_log(psi[e as usize - 1] + g.ln().scale(-2.0 * t));
            }
            let piece = sum.log();
            lo = lo.min(piece.lo);
            hi = hi.max(piece.hi);
        }
        if !(lo.is_finite() && hi.is_finite()) {
            continue;
        }
        let enc = Enclosure::new(lo, hi);
        best = Some(match best {
            Some(b) => b.intersect(&enc).unwrap_or(b),
            None => enc,
        });
    }
    best
}

fn gauss_pressure(wp: &WeightedPotential, pol: &DepthPolicy, done: impl Fn(&Enclosure) -> bool) -> PressureValue {
    let operator = operator_bounds(wp, pol.symbol_cap);
    if let Some(enc) = operator {
        if done(&enc) {
            return PressureValue::Finite { enclosure: enc };
        }
    }
    let mut engine = match GaussEngine::new(wp, pol.symbol_cap, PRUNE_REL) {
        Ok(e) => e,
        Err(MfsError::TailDivergent) => return PressureValue::PlusInfinity,
        Err(_) => return PressureValue::Indeterminate { lower: f64::NEG_INFINITY },
    };
    for k in 1..=pol.max_depth {
        if engine.pass(k).is_err() {
            break;
        }
        let best = engine.best();
        if done(&operator.and_then(|o| o.intersect(&best)).unwrap_or(best)) {
            break;
        }
    }
    let best = engine.best();
    let best = operator.and_then(|o| o.intersect(&best)).unwrap_or(best);
    if best.hi.is_finite() {
        PressureValue::Finite { enclosure: best }
    } else {
        PressureValue::Indeterminate { lower: best.lo }
    }
}

/// Depth-by-depth word enumeration for the Gauss family.
///
/// Subtrees of small weight are bounded by `W(u) Z_{rest}` using the bounds
/// of earlier passes; symbols beyond the expanded ones are bounded by the
/// single-symbol series times the prefix derivative range.
struct GaussEngine {
    t: f64,
    x_lo: Enclosure,
    x_hi: Enclosure,
    /// Largest explicitly expanded symbol.
    top: u64,
    /// `ln_term[e] = β c_e`.
    psi: Vec<Enclosure>,
    /// `tail[m] = log Σ_{e>m} e^{-2t} e^{β c_e}`.
    tail: Vec<Enclosure>,
    zsup: Vec<f64>,
    zinf: Vec<f64>,
    prune: f64,
    nodes: u64,
}

impl GaussEngine {
    fn new(wp: &WeightedPotential, cap: u64, prune: f64) -> Result<Self, MfsError> {
        let s = series_of(wp);
        if s.convergence() == Convergence::Diverges {
            return Err(MfsError::TailDivergent);
        }
        let top = match wp.system.card() {
            Some(c) => c.min(cap),
            None => cap,
        };
        let hull = wp.system.limit_hull();
        let mut tail = vec![Enclosure::ZERO; top as usize + 1];
        tail[top as usize] = s.ln_tail(top)?;
        for m in (0..top).rev() {
            let mut acc = LogSum::new();
            acc.add_log(tail[m as usize + 1]);
            acc.add_log(s.ln_term(m + 1));
            tail[m as usize] = acc.log();
        }
        let psi = (0..=top).map(|e| if e == 0 { Enclosure::ZERO } else { wp.psi_term(e).expect("checked") }).collect();
        Ok(GaussEngine {
            t: wp.t,
            x_lo: Enclosure::point(hull.lo),
            x_hi: Enclosure::point(hull.hi),
            top,
            psi,
            tail,
            zsup: vec![0.0],
            zinf: vec![0.0],
            prune,
            nodes: 0,
        })
    }

    /// `[max_k zinf_k / k, min_k zsup_k / k]` over finished passes.
    fn best(&self) -> Enclosure {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for k in 1..self.zsup.len() {
            lo = lo.max(div_dn(self.zinf[k], k as f64));
            hi = hi.min(div_up(self.zsup[k], k as f64));
        }
        Enclosure::new(lo.min(hi), hi)
    }

    /// `-2t log(c x + d)` over the hull.
    fn ln_derivative(&self, c: &Enclosure, d: &Enclosure) -> Enclosure {
        if self.t == 0.0 {
            return Enclosure::ZERO;
        }
        let a = (*c * self.x_lo + *d).ln();
        let b = (*c * self.x_hi + *d).ln();
        a.hull(&b).scale(-2.0 * self.t)
    }

    /// Range of the prefix and symbol factors for every symbol `e > m`.
    fn tail_factor(&self, c: &Enclosure, d: &Enclosure, m: u64) -> Enclosure {
        if self.t == 0.0 {
            return Enclosure::ZERO;
        }
        let inv = Enclosure::ONE.div(&Enclosure::point((m + 1) as f64));
        let near = d.ln();
        let far = (*c * inv + *d).ln() + inv.ln_1p();
        near.hull(&far).scale(-2.0 * self.t)
    }

    /// Runs depth `n` and returns the enclosure of `(1/n) log Z_n`.
    fn pass(&mut self, n: usize) -> Result<Enclosure, MfsError> {
        assert_eq!(self.zsup.len(), n, "passes run in order");
        let previous = self.best();
        let reference = if previous.lo.is_finite() && previous.hi.is_finite() {
            previous.mid() * n as f64
        } else {
            f64::NEG_INFINITY
        };
        let mut upper = LogSum::new();
        let mut lower = LogSum::new();
        let prune_log = if self.prune > 0.0 { self.prune.ln() } else { f64::NEG_INFINITY };
        self.expand(
            Enclosure::ZERO,
            Enclosure::ONE,
            Enclosure::ZERO,
            n,
            reference,
            prune_log,
            &mut upper,
            &mut lower,
        )?;
        let mut hi = upper.log().hi;
        let mut lo = lower.log().lo;
        for a in 1..n {
            hi = hi.min(add_up(self.zsup[a], self.zsup[n - a]));
            lo = lo.max(add_dn(self.zinf[a], self.zinf[n - a]));
        }
        self.zsup.push(hi);
        self.zinf.push(lo);
        Ok(div_enclosure(Enclosure::new(lo.min(hi), hi), n as f64))
    }

    #[allow(clippy::too_many_arguments)]
    fn expand(
        &mut self,
        c: Enclosure,
        d: Enclosure,
        psi_sum: Enclosure,
        left: usize,
        reference: f64,
        prune_log: f64,
        upper: &mut LogSum,
        lower: &mut LogSum,
    ) -> Result<(), MfsError> {
        let rest = left - 1;
        let (zs, zi) = (self.zsup[rest], self.zinf[rest]);
        let threshold = |running: &LogSum| {
            let run = if running.is_empty() { f64::NEG_INFINITY } else { running.log().hi };
            reference.max(run) + prune_log
        };
        let mut e = 1u64;
        loop {
            let m = e - 1;
            let infinite_rest = m >= self.top;
            let tail_ln = self.tail[m as usize];
            if tail_ln.hi == f64::NEG_INFINITY {
                break;
            }
            let factor = self.tail_factor(&c, &d, m);
            let agg = psi_sum + factor + tail_ln;
            // extra width from lumping the symbols together, relative to the total
            if infinite_rest || agg.hi + zs + factor.width().max(1e-300).ln() < threshold(upper) {
                upper.add_log(Enclosure::point(add_up(agg.hi, zs)));
                lower.add_log(Enclosure::point(add_dn(agg.lo, zi)));
                break;
            }
            self.nodes += 1;
            if self.nodes > WORD_BUDGET {
                return Err(MfsError::Budget("word enumeration".into()));
            }
            let ef = Enclosure::point(e as f64);
            let (c2, d2) = (d, c + ef * d);
            let child_psi = psi_sum + self.psi[e as usize];
            let w = self.ln_derivative(&c2, &d2) + child_psi;
            if rest == 0 {
                upper.add_log(w);
                lower.add_log(w);
            } else if w.hi + zs < threshold(upper) {
                upper.add_log(Enclosure::point(add_up(w.hi, zs)));
                lower.add_log(Enclosure::point(add_dn(w.lo, zi)));
            } else {
                self.expand(c2, d2, child_psi, rest, reference, prune_log, upper, lower)?;
            }
            e += 1;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Depth1Law, PotentialSpec};
    use crate::system::SystemSpec;

    fn wp(sys: &SystemSpec, law: Depth1Law, t: f64, beta: f64) -> WeightedPotential {
        WeightedPotential::new(sys, &PotentialSpec::Depth1(law), t, beta).unwrap()
    }

    #[test]
    fn halves_have_zero_pressure() {
        let sys = SystemSpec::finite(vec![0.5, 0.5], None).unwrap();
        let p = wp(&sys, Depth1Law::Constant { c: 0.0 }, 1.0, 0.0);
        let z = partition_bounds(&p, 3, 4096).unwrap();
        assert!(z.contains(0.0) && z.width() < 1e-14, "{z}");
        assert_eq!(pressure_sign(&p, &DepthPolicy::default()), Sign::ZeroStraddling);
    }

    #[test]
    fn lueroth_geometric_pressure_is_zero() {
        let p = wp(&SystemSpec::lueroth(), Depth1Law::Constant { c: 0.0 }, 1.0, 0.0);
        let enc = exact_series_pressure(&p, 1e-6).enclosure().unwrap();
        assert!(enc.contains(0.0) && enc.width() <= 1e-6, "{enc}");
        let z = partition_bounds(&p, 1, 10_000).unwrap();
        assert!(z.contains(0.0) && z.width() < 1e-3, "{z}");
    }

    #[test]
    fn lueroth_negid_negative_beta_is_infinite() {
        for t in [-2.0, 0.0, 1.0, 5.0] {
            let p = wp(&SystemSpec::lueroth(), Depth1Law::NegIdentity, t, -0.1);
            assert_eq!(exact_series_pressure(&p, 1e-6), PressureValue::PlusInfinity);
        }
    }

    #[test]
    fn lueroth_signs() {
        let pol = DepthPolicy::default();
        let p = wp(&SystemSpec::lueroth(), Depth1Law::Constant { c: 0.0 }, 1.5, 0.0);
        assert_eq!(pressure_sign(&p, &pol), Sign::Negative);
        assert_eq!(pressure_sign(&p.with_t(0.4), &pol), Sign::Positive);
    }

    #[test]
    fn gauss_truncated_partition_width() {
        let sys = SystemSpec::gauss().truncate(2).unwrap();
        let p = wp(&sys, Depth1Law::Constant { c: 0.0 }, 1.0, 0.0);
        let z = partition_bounds(&p, 4, 4096).unwrap();
        assert!(z.width() <= 0.25 * 4f64.ln(), "{z}");
    }

    #[test]
    fn gauss_bowen_pressure_contains_zero() {
        let p = wp(&SystemSpec::gauss(), Depth1Law::NegTwoLog, 1.0, 0.0);
        let v = pressure(&p, &DepthPolicy::default());
        let enc = v.enclosure().expect("finite");
        assert!(enc.contains(0.0), "{enc}");
    }

    #[test]
    fn gauss_slow_tail_is_infinite() {
        let p = wp(&SystemSpec::gauss(), Depth1Law::NegTwoLog, 0.2, 0.0);
        assert_eq!(pressure(&p, &DepthPolicy::default()), PressureValue::PlusInfinity);
    }
}
