//! Conformal iterated function systems on the unit interval.

use crate::enclosure::Enclosure;
use crate::error::MfsError;
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Index of a map in the alphabet, always at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol(u64);

impl Symbol {
    pub fn new(value: u64) -> Result<Self, MfsError> {
        if value == 0 {
            return Err(MfsError::InvalidWord("symbols start at 1".into()));
        }
        Ok(Symbol(value))
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

/// Non-empty finite word over the positive integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word(Vec<u64>);

impl Word {
    pub fn new(symbols: Vec<u64>) -> Result<Self, MfsError> {
        if symbols.is_empty() {
            return Err(MfsError::InvalidWord("empty word".into()));
        }
        if symbols.contains(&0) {
            return Err(MfsError::InvalidWord("symbols start at 1".into()));
        }
        Ok(Word(symbols))
    }

    pub fn symbols(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&self, e: u64) -> Word {
        let mut v = self.0.clone();
        v.push(e);
        Word(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n", rename_all = "snake_case")]
pub enum Alphabet {
    Full,
    Truncated(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// `x -> 1/(x+e)`
    Gauss,
    /// `x -> x/(e(e+1)) + 1/(e+1)`
    Lueroth,
    /// `x -> 4x/(e(e+1)(e+2)) + 2/((e+1)(e+2))`
    GeneralizedLueroth,
    /// Ratios `a e^{-p}`.
    PowerLaw { a: f64, p: f64 },
    /// Ratios `a / ((e+2) log^2(e+2))`.
    LogPower { a: f64 },
    /// Explicit ratios, optionally with left endpoints of the images.
    FiniteSelfSimilar { ratios: Vec<f64>, offsets: Option<Vec<f64>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSystem")]
pub struct SystemSpec {
    family: Family,
    alphabet: Alphabet,
}

#[derive(Deserialize)]
struct RawSystem {
    family: Family,
    alphabet: Alphabet,
}

impl TryFrom<RawSystem> for SystemSpec {
    type Error = MfsError;
    fn try_from(r: RawSystem) -> Result<Self, MfsError> {
        SystemSpec::new(r.family, r.alphabet)
    }
}

// Slack for decimal offsets such as 0.5 + 0.5 that round across 1.
const OSC_SLACK: f64 = 1e-12;

impl SystemSpec {
    pub fn new(family: Family, alphabet: Alphabet) -> Result<Self, MfsError> {
        match &family {
            Family::PowerLaw { a, p } => {
                if !(*p > 1.0 && p.is_finite()) {
                    return Err(MfsError::InvalidSystem(format!("power law needs p > 1, got {p}")));
                }
                if !(*a > 0.0 && *a < 1.0) {
                    return Err(MfsError::InvalidSystem(format!("power law needs 0 < a < 1, got {a}")));
                }
            }
            Family::LogPower { a } => {
                let r1 = a / (3.0 * 3f64.ln().powi(2));
                if !(*a > 0.0 && r1 < 1.0) {
                    return Err(MfsError::InvalidSystem(format!("log-power needs 0 < r_1 < 1, got a = {a}")));
                }
            }
            Family::FiniteSelfSimilar { ratios, offsets } => {
                if ratios.len() < 2 {
                    return Err(MfsError::InvalidSystem("need at least two ratios".into()));
                }
                if let Some(r) = ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
                    return Err(MfsError::InvalidSystem(format!("ratio {r} outside (0,1)")));
                }
                if let Some(off) = offsets {
                    check_open_set(ratios, off)?;
                }
            }
            _ => {}
        }
        let sys = SystemSpec { family, alphabet };
        if let Alphabet::Truncated(n) = alphabet {
            if n < 2 {
                return Err(MfsError::Truncation(format!("truncation to {n} leaves fewer than 2 symbols")));
            }
        }
        if sys.card().is_some_and(|c| c < 2) {
            return Err(MfsError::Truncation("alphabet has fewer than 2 symbols".into()));
        }
        Ok(sys)
    }

    pub fn gauss() -> Self {
        SystemSpec { family: Family::Gauss, alphabet: Alphabet::Full }
    }

    pub fn lueroth() -> Self {
        SystemSpec { family: Family::Lueroth, alphabet: Alphabet::Full }
    }

    pub fn generalized_lueroth() -> Self {
        SystemSpec { family: Family::GeneralizedLueroth, alphabet: Alphabet::Full }
    }

    pub fn power_law(a: f64, p: f64) -> Result<Self, MfsError> {
        SystemSpec::new(Family::PowerLaw { a, p }, Alphabet::Full)
    }

    pub fn log_power(a: f64) -> Result<Self, MfsError> {
        SystemSpec::new(Family::LogPower { a }, Alphabet::Full)
    }

    pub fn finite(ratios: Vec<f64>, offsets: Option<Vec<f64>>) -> Result<Self, MfsError> {
        SystemSpec::new(Family::FiniteSelfSimilar { ratios, offsets }, Alphabet::Full)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    /// Size of the untruncated index set, `None` when infinite.
    pub fn native_card(&self) -> Option<u64> {
        match &self.family {
            Family::FiniteSelfSimilar { ratios, .. } => Some(ratios.len() as u64),
            _ => None,
        }
    }

    /// Number of symbols, `None` when infinite.
    pub fn card(&self) -> Option<u64> {
        match (self.alphabet, self.native_card()) {
            (Alphabet::Full, c) => c,
            (Alphabet::Truncated(n), None) => Some(n),
            (Alphabet::Truncated(n), Some(c)) => Some(n.min(c)),
        }
    }

    pub fn contains_symbol(&self, e: u64) -> bool {
        e >= 1 && self.card().is_none_or(|c| e <= c)
    }

    pub fn check_word(&self, w: &Word) -> Result<(), MfsError> {
        match w.symbols().iter().find(|e| !self.contains_symbol(**e)) {
            Some(e) => Err(MfsError::SymbolOutside { symbol: *e, card: self.card() }),
            None => Ok(()),
        }
    }

    pub fn is_gauss(&self) -> bool {
        matches!(self.family, Family::Gauss)
    }

    /// Every family except Gauss consists of affine maps.
    pub fn is_self_similar(&self) -> bool {
        !self.is_gauss()
    }

    /// Keeps the symbols `1..=n` of the current alphabet.
    pub fn truncate(&self, n: u64) -> Result<SystemSpec, MfsError> {
        let n = match self.alphabet {
            Alphabet::Full => n,
            Alphabet::Truncated(m) => n.min(m),
        };
        SystemSpec::new(self.family.clone(), Alphabet::Truncated(n))
    }

    /// Exact log contraction ratio of an affine symbol.
    pub fn ln_ratio(&self, e: u64) -> Enclosure {
        debug_assert!(self.is_self_similar());
        ln_ratio_of(&self.family, e)
    }

    /// `[inf, sup]` of `|phi_w'|` over `[0,1]`.
    pub fn ratio_bounds(&self, w: &Word) -> Result<Enclosure, MfsError> {
        self.check_word(w)?;
        if self.is_gauss() {
            let m = MoebiusMatrix::of_word(w);
            let c = big_enclosure(&m.c);
            let d = big_enclosure(&m.d);
            // all entries are nonnegative, so |phi'| = (cx+d)^-2 decreases on [0,1]
            let lo = (c + d).sqr().recip();
            let hi = d.sqr().recip();
            return Ok(Enclosure::new(lo.lo, hi.hi));
        }
        let ln: Enclosure = w
            .symbols()
            .iter()
            .map(|&e| self.ln_ratio(e))
            .fold(Enclosure::ZERO, |acc, x| acc + x);
        if w.len() == 1 {
            if let Family::FiniteSelfSimilar { ratios, .. } = &self.family {
                return Ok(Enclosure::point(ratios[w.symbols()[0] as usize - 1]));
            }
        }
        Ok(ln.exp())
    }

    /// Supremum over the alphabet of the single-symbol contraction.
    pub fn s_phi(&self) -> SPhi {
        match &self.family {
            Family::Gauss => SPhi { value: 1.0, argmax: 1, degenerate: true },
            Family::FiniteSelfSimilar { ratios, .. } => {
                let n = self.card().unwrap() as usize;
                let (i, r) = ratios[..n]
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |b, (i, r)| if *r > b.1 { (i, *r) } else { b });
                SPhi { value: r, argmax: i as u64 + 1, degenerate: false }
            }
            // the remaining ratio laws decrease in e
            _ => SPhi { value: self.ln_ratio(1).exp().mid(), argmax: 1, degenerate: false },
        }
    }

    /// Image `phi_w([0,1])`.
    pub fn cylinder_interval(&self, w: &Word) -> Result<Enclosure, MfsError> {
        self.check_word(w)?;
        if self.is_gauss() {
            let m = MoebiusMatrix::of_word(w);
            let x0 = big_enclosure(&m.b).div(&big_enclosure(&m.d));
            let x1 = big_enclosure(&(&m.a + &m.b)).div(&big_enclosure(&(&m.c + &m.d)));
            return Ok(x0.hull(&x1));
        }
        let mut img = Enclosure::new(0.0, 1.0);
        for &e in w.symbols().iter().rev() {
            let (r, o) = self.affine_map(e)?;
            img = o + r * img;
        }
        Ok(img)
    }

    /// Ratio and offset of an affine symbol, when the family fixes them.
    pub fn affine_map(&self, e: u64) -> Result<(Enclosure, Enclosure), MfsError> {
        let ef = e as f64;
        match &self.family {
            Family::Lueroth => {
                let r = Enclosure::ONE.div(&(Enclosure::point(ef) * Enclosure::point(ef + 1.0)));
                let o = Enclosure::ONE.div(&Enclosure::point(ef + 1.0));
                Ok((r, o))
            }
            Family::GeneralizedLueroth => {
                let r = Enclosure::point(4.0)
                    .div(&(Enclosure::point(ef) * Enclosure::point(ef + 1.0) * Enclosure::point(ef + 2.0)));
                let o = Enclosure::point(2.0).div(&(Enclosure::point(ef + 1.0) * Enclosure::point(ef + 2.0)));
                Ok((r, o))
            }
            Family::FiniteSelfSimilar { ratios, offsets: Some(off) } => {
                let i = e as usize - 1;
                Ok((Enclosure::point(ratios[i]), Enclosure::point(off[i])))
            }
            _ => Err(MfsError::MissingOffsets),
        }
    }

    /// Uniform bound on `sup |phi_w'| / inf |phi_w'|` over `[0,1]`.
    pub fn distortion_constant(&self) -> f64 {
        if self.is_gauss() {
            4.0
        } else {
            1.0
        }
    }

    /// Interval containing the limit set, used for cylinder suprema.
    pub fn limit_hull(&self) -> Enclosure {
        match (&self.family, self.card()) {
            (Family::Gauss, Some(n)) => {
                // smallest point [0; n, 1, n, 1, ...] = 2/(n + sqrt(n^2+4n)), largest 1/(1+x0)
                let nf = n as f64;
                let disc = Enclosure::point(nf) * Enclosure::point(nf + 4.0);
                let root = Enclosure::new(disc.lo.sqrt().next_down(), disc.hi.sqrt().next_up());
                let x0 = Enclosure::point(2.0).div(&(Enclosure::point(nf) + root));
                let x1 = Enclosure::ONE.div(&(Enclosure::ONE + x0));
                Enclosure::new(x0.lo.max(0.0), x1.hi.min(1.0))
            }
            _ => Enclosure::new(0.0, 1.0),
        }
    }
}

fn check_open_set(ratios: &[f64], offsets: &[f64]) -> Result<(), MfsError> {
    if offsets.len() != ratios.len() {
        return Err(MfsError::InvalidSystem("offsets and ratios differ in length".into()));
    }
    let mut imgs: Vec<(f64, f64)> = offsets.iter().zip(ratios).map(|(o, r)| (*o, o + r)).collect();
    if let Some((a, b)) = imgs.iter().find(|(a, b)| *a < 0.0 || *b > 1.0 + OSC_SLACK) {
        return Err(MfsError::InvalidSystem(format!("image [{a}, {b}] leaves [0,1]")));
    }
    imgs.sort_by(|x, y| x.0.total_cmp(&y.0));
    for pair in imgs.windows(2) {
        if pair[0].1 > pair[1].0 + OSC_SLACK {
            return Err(MfsError::InvalidSystem(format!(
                "images [{}, {}] and [{}, {}] overlap",
                pair[0].0, pair[0].1, pair[1].0, pair[1].1
            )));
        }
    }
    Ok(())
}

pub(crate) fn ln_ratio_of(family: &Family, e: u64) -> Enclosure {
    let ef = e as f64;
    let ln = |x: f64| Enclosure::point(x).ln();
    match family {
        Family::Lueroth => -(ln(ef) + ln(ef + 1.0)),
        Family::GeneralizedLueroth => ln(4.0) - (ln(ef) + ln(ef + 1.0) + ln(ef + 2.0)),
        Family::PowerLaw { a, p } => ln(*a) - ln(ef).scale(*p),
        Family::LogPower { a } => {
            let u = ln(ef + 2.0);
            ln(*a) - ln(ef + 2.0) - u.ln().scale(2.0)
        }
        Family::FiniteSelfSimilar { ratios, .. } => ln(ratios[e as usize - 1]),
        Family::Gauss => -ln(ef).scale(2.0),
    }
}

/// Result of [`SystemSpec::s_phi`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SPhi {
    pub value: f64,
    pub argmax: u64,
    /// Set when the supremum equals 1 (Gauss at `e = 1`, `x = 0`).
    pub degenerate: bool,
}

/// Integer matrix `[[a, b], [c, d]]` acting as `x -> (ax+b)/(cx+d)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoebiusMatrix {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl MoebiusMatrix {
    pub fn identity() -> Self {
        MoebiusMatrix { a: BigInt::one(), b: BigInt::zero(), c: BigInt::zero(), d: BigInt::one() }
    }

    /// Matrix of `x -> 1/(x+e)`.
    pub fn symbol(e: u64) -> Self {
        MoebiusMatrix { a: BigInt::zero(), b: BigInt::one(), c: BigInt::one(), d: BigInt::from(e) }
    }

    pub fn of_word(w: &Word) -> Self {
        w.symbols().iter().fold(Self::identity(), |m, &e| m.compose(&Self::symbol(e)))
    }

    /// Matrix of `self ∘ other`.
    pub fn compose(&self, o: &MoebiusMatrix) -> MoebiusMatrix {
        MoebiusMatrix {
            a: &self.a * &o.a + &self.b * &o.c,
            b: &self.a * &o.b + &self.b * &o.d,
            c: &self.c * &o.a + &self.d * &o.c,
            d: &self.c * &o.b + &self.d * &o.d,
        }
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    /// `|phi'(x)| = 1/(cx+d)^2` for unimodular matrices.
    pub fn derivative(&self, x: f64) -> Enclosure {
        let den = big_enclosure(&self.c) * Enclosure::point(x) + big_enclosure(&self.d);
        den.sqr().recip()
    }

    pub fn apply(&self, x: f64) -> Enclosure {
        let xe = Enclosure::point(x);
        let num = big_enclosure(&self.a) * xe + big_enclosure(&self.b);
        let den = big_enclosure(&self.c) * xe + big_enclosure(&self.d);
        num.div(&den)
    }
}

pub(crate) fn big_enclosure(x: &BigInt) -> Enclosure {
    let f = x.to_f64().unwrap_or(f64::INFINITY);
    if x.abs() < BigInt::from(1u64 << 53) {
        Enclosure::point(f)
    } else {
        Enclosure::around(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moebius_square_of_two() {
        let m = MoebiusMatrix::of_word(&Word::new(vec![2, 2]).unwrap());
        assert_eq!(m.a, BigInt::from(1));
        assert_eq!(m.b, BigInt::from(2));
        assert_eq!(m.c, BigInt::from(2));
        assert_eq!(m.d, BigInt::from(5));
        assert_eq!(m.det().abs(), BigInt::one());
    }

    #[test]
    fn truncation_of_truncation_takes_prefix() {
        let s = SystemSpec::gauss().truncate(10).unwrap().truncate(5).unwrap();
        assert_eq!(s.alphabet(), Alphabet::Truncated(5));
        let l = SystemSpec::gauss().truncate(5).unwrap().truncate(10).unwrap();
        assert_eq!(l.card(), Some(5));
    }

    #[test]
    fn rejects_small_truncation() {
        assert!(SystemSpec::lueroth().truncate(1).is_err());
        let f = SystemSpec::finite(vec![0.3, 0.5, 0.1], None).unwrap();
        assert!(f.truncate(1).is_err());
        assert_eq!(f.truncate(2).unwrap().card(), Some(2));
    }

    #[test]
    fn overlapping_offsets_rejected() {
        assert!(SystemSpec::finite(vec![0.5, 0.5], Some(vec![0.0, 0.4])).is_err());
        assert!(SystemSpec::finite(vec![0.5, 0.5], Some(vec![0.0, 0.5])).is_ok());
    }

    #[test]
    fn gauss_hull_for_two_symbols() {
        let h = SystemSpec::gauss().truncate(2).unwrap().limit_hull();
        let x0 = (-2.0 + 12f64.sqrt()) / 4.0;
        assert!(h.lo <= x0 && (x0 - h.lo) < 1e-14);
        assert!(h.hi >= 1.0 / (1.0 + x0));
    }
}
