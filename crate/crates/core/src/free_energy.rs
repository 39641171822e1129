//! The free energy `t(β) = inf { t : P(tζ + βψ) <= 0 }` by sign bisection.

use crate::enclosure::Enclosure;
use crate::error::MfsError;
use crate::potential::{Depth1Law, PotentialSpec, WeightedPotential};
use crate::pressure::{pressure_for_sign, DepthPolicy, PressureValue, Sign};
use crate::system::SystemSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FreeEnergyValue {
    Finite { enclosure: Enclosure },
    PlusInfinity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyPoint {
    #[serde(with = "crate::float_repr")]
    pub beta: f64,
    pub value: FreeEnergyValue,
    /// A certified finite positive pressure sits just below a certified negative one.
    pub zero_exists: bool,
    pub warning: Option<String>,
}

impl FreeEnergyPoint {
    pub fn enclosure(&self) -> Option<Enclosure> {
        match self.value {
            FreeEnergyValue::Finite { enclosure } => Some(enclosure),
            FreeEnergyValue::PlusInfinity => None,
        }
    }

    /// Midpoint of a bracketed finite value.
    pub fn mid(&self) -> Option<f64> {
        self.enclosure().filter(|e| e.lo.is_finite() && e.hi.is_finite()).map(|e| e.mid())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyCurve {
    pub points: Vec<FreeEnergyPoint>,
    /// Smallest and largest grid `β` with a finite value.
    #[serde(with = "crate::float_repr::option")]
    pub dom_lo: Option<f64>,
    #[serde(with = "crate::float_repr::option")]
    pub dom_hi: Option<f64>,
    /// Largest violation of three-point convexity beyond the enclosure widths.
    #[serde(with = "crate::float_repr")]
    pub convexity_defect: f64,
}

impl FreeEnergyCurve {
    /// Builds a curve from precomputed points, filling the domain and defect fields.
    pub fn from_points(points: Vec<FreeEnergyPoint>) -> Self {
        let finite: Vec<&FreeEnergyPoint> = points.iter().filter(|p| p.mid().is_some()).collect();
        let dom_lo = finite.first().map(|p| p.beta);
        let dom_hi = finite.last().map(|p| p.beta);
        let mut defect = f64::NEG_INFINITY;
        for w in finite.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            let (ea, eb, ec) = (a.enclosure().unwrap(), b.enclosure().unwrap(), c.enclosure().unwrap());
            let lhs = eb.mid() * (c.beta - a.beta);
            let rhs = ea.mid() * (c.beta - b.beta) + ec.mid() * (b.beta - a.beta);
            let slack = ea.width() + eb.width() + ec.width();
            defect = defect.max(lhs - rhs - slack);
        }
        FreeEnergyCurve { points, dom_lo, dom_hi, convexity_defect: defect.max(0.0) }
    }

    /// `(β, midpoint)` for every bracketed finite point.
    pub fn finite_points(&self) -> Vec<(f64, f64)> {
        self.points.iter().filter_map(|p| p.mid().map(|m| (p.beta, m))).collect()
    }

    pub fn max_width(&self) -> f64 {
        self.points.iter().filter_map(|p| p.enclosure()).map(|e| e.width()).filter(|w| w.is_finite()).fold(0.0, f64::max)
    }
}

/// Bisection settings for the free energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergySolver {
    pub tol: f64,
    pub policy: DepthPolicy,
    /// Bracket growth stops at `|t| = t_cap`.
    pub t_cap: f64,
    /// Deepest word length tried when the final bracket still straddles zero.
    pub escalated_depth: usize,
}

impl FreeEnergySolver {
    pub fn new(tol: f64, policy: DepthPolicy) -> Self {
        FreeEnergySolver { tol, policy, t_cap: 64.0, escalated_depth: policy.max_depth }
    }

    pub fn with_t_cap(mut self, t_cap: f64) -> Self {
        self.t_cap = t_cap;
        self
    }

    pub fn with_escalation(mut self, depth: usize) -> Self {
        self.escalated_depth = depth.max(self.policy.max_depth);
        self
    }

    fn validate(&self) -> Result<(), MfsError> {
        if !(self.tol > 0.0) || !(self.t_cap > 1.0) {
            return Err(MfsError::InvalidArgument("tol must be positive and t_cap above 1".into()));
        }
        self.policy.validate()
    }

    pub fn at(&self, sys: &SystemSpec, psi: &PotentialSpec, beta: f64) -> Result<FreeEnergyPoint, MfsError> {
        self.validate()?;
        WeightedPotential::new(sys, psi, 0.0, beta)?;
        if infinite_for_every_t(sys, psi, beta) {
            return Ok(FreeEnergyPoint { beta, value: FreeEnergyValue::PlusInfinity, zero_exists: false, warning: None });
        }
        let mut pol = self.policy;
        let probe = |t: f64, pol: &DepthPolicy| -> PressureValue {
            let wp = WeightedPotential::new(sys, psi, t, beta).expect("validated above");
            pressure_for_sign(&wp, pol)
        };
        let mut warning = None;

        // bracket: `lo` is not Negative, `hi` is Negative
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut lo_value = probe(lo, &pol);
        if lo_value.sign() == Sign::Negative {
            hi = lo;
            lo = -1.0;
            loop {
                lo_value = probe(lo, &pol);
                if lo_value.sign() != Sign::Negative {
                    break;
                }
                hi = lo;
                if lo <= -self.t_cap {
                    let enclosure = Enclosure::new(f64::NEG_INFINITY, hi);
                    let warning = Some(format!("pressure still negative at t = {lo}"));
                    return Ok(FreeEnergyPoint { beta, value: FreeEnergyValue::Finite { enclosure }, zero_exists: false, warning });
                }
                lo *= 2.0;
            }
        } else {
            loop {
                let v = probe(hi, &pol);
                if v.sign() == Sign::Negative {
                    break;
                }
                if v.sign() == Sign::Positive {
                    lo = hi;
                    lo_value = v;
                }
                if hi >= self.t_cap {
                    let enclosure = Enclosure::new(lo, f64::INFINITY);
                    let warning = Some(format!("pressure not negative up to t = {hi}"));
                    return Ok(FreeEnergyPoint { beta, value: FreeEnergyValue::Finite { enclosure }, zero_exists: false, warning });
                }
                hi *= 2.0;
            }
        }

        // plain bisection while the signs are decisive
        while hi - lo > self.tol {
            let mid = 0.5 * (lo + hi);
            let v = probe(mid, &pol);
            match v.sign() {
                Sign::Negative => hi = mid,
                Sign::Positive => {
                    lo = mid;
                    lo_value = v;
                }
                Sign::ZeroStraddling => {
                    // the root lies in the straddling zone around `mid`; find both edges
                    let (l, lv) = self.left_edge(lo, lo_value, mid, &pol, &probe);
                    let r = self.right_edge(mid, hi, &pol, &probe);
                    lo = l;
                    lo_value = lv;
                    hi = r;
                    break;
                }
            }
        }

        while hi - lo > self.tol && pol.max_depth < self.escalated_depth && sys.is_gauss() {
            pol.max_depth = (pol.max_depth * 2).min(self.escalated_depth);
            let mut mid = 0.5 * (lo + hi);
            // tighter bounds may settle points inside the old zone
            loop {
                let v = probe(mid, &pol);
                match v.sign() {
                    Sign::Negative => hi = mid,
                    Sign::Positive => {
                        lo = mid;
                        lo_value = v;
                    }
                    Sign::ZeroStraddling => {
                        let (l, lv) = self.left_edge(lo, lo_value, mid, &pol, &probe);
                        lo = l;
                        lo_value = lv;
                        hi = self.right_edge(mid, hi, &pol, &probe);
                        break;
                    }
                }
                if hi - lo <= self.tol {
                    break;
                }
                mid = 0.5 * (lo + hi);
            }
        }

        if hi - lo > self.tol {
            warning = Some(format!("pressure bounds too wide: bracket width {:.3e} exceeds tol", hi - lo));
        }
        let zero_exists = matches!(lo_value, PressureValue::Finite { .. }) && lo_value.sign() == Sign::Positive;
        Ok(FreeEnergyPoint { beta, value: FreeEnergyValue::Finite { enclosure: Enclosure::new(lo, hi) }, zero_exists, warning })
    }

    /// Largest certified-positive point below the straddling point `mid`.
    fn left_edge(
        &self,
        mut lo: f64,
        mut lo_value: PressureValue,
        mut mid: f64,
        pol: &DepthPolicy,
        probe: &impl Fn(f64, &DepthPolicy) -> PressureValue,
    ) -> (f64, PressureValue) {
        while mid - lo > 0.5 * self.tol {
            let m = 0.5 * (lo + mid);
            let v = probe(m, pol);
            if v.sign() == Sign::Positive {
                lo = m;
                lo_value = v;
            } else {
                mid = m;
            }
        }
        (lo, lo_value)
    }

    /// Smallest certified-negative point above the straddling point `mid`.
    fn right_edge(&self, mut mid: f64, mut hi: f64, pol: &DepthPolicy, probe: &impl Fn(f64, &DepthPolicy) -> PressureValue) -> f64 {
        while hi - mid > 0.5 * self.tol {
            let m = 0.5 * (mid + hi);
            if probe(m, pol).sign() == Sign::Negative {
                hi = m;
            } else {
                mid = m;
            }
        }
        hi
    }

    /// Evaluates the free energy on an increasing grid, points in parallel.
    pub fn curve(&self, sys: &SystemSpec, psi: &PotentialSpec, grid: &[f64]) -> Result<FreeEnergyCurve, MfsError> {
        if grid.len() < 3 || grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(MfsError::InvalidArgument("β grid must be strictly increasing with at least 3 points".into()));
        }
        let points = grid.par_iter().map(|&b| self.at(sys, psi, b)).collect::<Result<Vec<_>, _>>()?;
        Ok(FreeEnergyCurve::from_points(points))
    }
}

/// Divergence for all `t`: growing `e^{-βc_e}` beats every power of the ratios.
fn infinite_for_every_t(sys: &SystemSpec, psi: &PotentialSpec, beta: f64) -> bool {
    sys.card().is_none() && beta < 0.0 && matches!(psi, PotentialSpec::Depth1(Depth1Law::NegIdentity))
}

pub fn free_energy_at(
    sys: &SystemSpec,
    psi: &PotentialSpec,
    beta: f64,
    tol: f64,
    pol: &DepthPolicy,
) -> Result<FreeEnergyPoint, MfsError> {
    FreeEnergySolver::new(tol, *pol).at(sys, psi, beta)
}

pub fn free_energy_curve(
    sys: &SystemSpec,
    psi: &PotentialSpec,
    grid: &[f64],
    tol: f64,
    pol: &DepthPolicy,
) -> Result<FreeEnergyCurve, MfsError> {
    FreeEnergySolver::new(tol, *pol).curve(sys, psi, grid)
}

/// One-sided difference quotients and the slope range of a sampled curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slopes {
    pub records: Vec<SlopeRecord>,
    #[serde(with = "crate::float_repr")]
    pub alpha_minus: f64,
    #[serde(with = "crate::float_repr")]
    pub alpha_plus: f64,
    /// Change of the secant slope next to the estimate, as a resolution error.
    #[serde(with = "crate::float_repr")]
    pub alpha_minus_error: f64,
    #[serde(with = "crate::float_repr")]
    pub alpha_plus_error: f64,
    /// The domain ends inside the grid on that side.
    pub alpha_minus_extrapolated: bool,
    pub alpha_plus_extrapolated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeRecord {
    #[serde(with = "crate::float_repr")]
    pub beta: f64,
    #[serde(with = "crate::float_repr::option")]
    pub left: Option<f64>,
    #[serde(with = "crate::float_repr::option")]
    pub right: Option<f64>,
}

pub fn slopes(curve: &FreeEnergyCurve) -> Result<Slopes, MfsError> {
    let pts = curve.finite_points();
    if pts.len() < 2 {
        return Err(MfsError::InvalidArgument("slopes need at least 2 finite points".into()));
    }
    let d: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let k = pts.len();
    let records = (0..k)
        .map(|i| SlopeRecord {
            beta: pts[i].0,
            left: (i > 0).then(|| d[i - 1]),
            right: (i + 1 < k).then(|| d[i]),
        })
        .collect();
    let (alpha_minus, alpha_plus, err_minus, err_plus) = if k == 2 {
        (-d[0], -d[0], f64::INFINITY, f64::INFINITY)
    } else {
        // left slopes at interior points are d[0..k-2], right slopes d[1..k-1]
        let am = d[..k - 2].iter().map(|x| -x).fold(f64::INFINITY, f64::min);
        let ap = d[1..].iter().map(|x| -x).fold(f64::NEG_INFINITY, f64::max);
        let em = if k >= 4 { (d[k - 3] - d[k - 4]).abs() } else { f64::INFINITY };
        let ep = if k >= 4 { (d[2] - d[1]).abs() } else { f64::INFINITY };
        (am, ap, em, ep)
    };
    let first_finite = curve.points.iter().position(|p| p.mid().is_some()).expect("k >= 2");
    let last_finite = curve.points.iter().rposition(|p| p.mid().is_some()).expect("k >= 2");
    Ok(Slopes {
        records,
        alpha_minus,
        alpha_plus,
        alpha_minus_error: err_minus,
        alpha_plus_error: err_plus,
        alpha_minus_extrapolated: last_finite + 1 < curve.points.len(),
        alpha_plus_extrapolated: first_finite > 0,
    })
}
