//! Truncation sequences `I_n = {1..n}`: convergence reports, the ρ metric and
//! the single-symbol derivative ratio check.

use crate::enclosure::Enclosure;
use crate::error::MfsError;
use crate::free_energy::{slopes, FreeEnergyCurve, FreeEnergyPoint, FreeEnergySolver};
use crate::legendre::{conjugate, spectrum, Region, SpectrumPoint};
use crate::potential::PotentialSpec;
use crate::pressure::DepthPolicy;
use crate::system::{Family, SystemSpec};
use serde::{Deserialize, Serialize};

/// Grid resolution for the sup norms in the ρ metric.
const RHO_GRID: usize = 1024;

#[derive(Clone, Copy)]
enum MapForm {
    /// `x -> 1/(x+e)`
    Gauss(f64),
    /// `x -> r x + o`
    Affine(Enclosure, Enclosure),
}

impl MapForm {
    fn of(sys: &SystemSpec, e: u64) -> MapForm {
        if sys.is_gauss() {
            return MapForm::Gauss(e as f64);
        }
        match sys.affine_map(e) {
            Ok((r, o)) => MapForm::Affine(r, o),
            // laws without offsets are placed at the origin
            Err(_) => MapForm::Affine(sys.ln_ratio(e).exp(), Enclosure::ZERO),
        }
    }

    fn value(&self, x: f64) -> Enclosure {
        match *self {
            MapForm::Gauss(e) => (Enclosure::point(x) + Enclosure::point(e)).recip(),
            MapForm::Affine(r, o) => r * Enclosure::point(x) + o,
        }
    }

    fn derivative(&self, x: f64) -> Enclosure {
        match *self {
            MapForm::Gauss(e) => -(Enclosure::point(x) + Enclosure::point(e)).sqr().recip(),
            MapForm::Affine(r, _) => r,
        }
    }

    /// `sup |phi'|` on `[0,1]`.
    fn lip(&self) -> f64 {
        match *self {
            MapForm::Gauss(e) => 1.0 / (e * e),
            MapForm::Affine(r, _) => r.hi,
        }
    }

    /// `sup |phi''|` on `[0,1]`.
    fn lip_derivative(&self) -> f64 {
        match *self {
            MapForm::Gauss(e) => 2.0 / (e * e * e),
            MapForm::Affine(..) => 0.0,
        }
    }
}

fn abs_range(x: Enclosure) -> (f64, f64) {
    let hi = x.lo.abs().max(x.hi.abs());
    let lo = if x.contains(0.0) { 0.0 } else { x.lo.abs().min(x.hi.abs()) };
    (lo, hi)
}

/// Sup-norm enclosure of `|f - g| + |f' - g'|` over `[0,1]`.
fn map_distance(a: MapForm, b: MapForm) -> Enclosure {
    let h = 1.0 / RHO_GRID as f64;
    let (mut v_lo, mut v_hi, mut d_lo, mut d_hi) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for j in 0..=RHO_GRID {
        let x = j as f64 * h;
        let (l, u) = abs_range(a.value(x) - b.value(x));
        v_lo = v_lo.max(l);
        v_hi = v_hi.max(u);
        let (l, u) = abs_range(a.derivative(x) - b.derivative(x));
        d_lo = d_lo.max(l);
        d_hi = d_hi.max(u);
    }
    // between grid points the difference moves by at most lip * h / 2
    let slack_v = (a.lip() + b.lip()) * h * 0.5;
    let slack_d = (a.lip_derivative() + b.lip_derivative()) * h * 0.5;
    let hi = ((v_hi + slack_v) + (d_hi + slack_d)) * (1.0 + 4.0 * f64::EPSILON);
    Enclosure::new(v_lo + d_lo, hi).hull(&Enclosure::new(v_lo.max(d_lo), hi))
}

/// The ρ metric truncated at symbol `depth`, with the remaining tail bounded.
pub fn rho_distance(a: &SystemSpec, b: &SystemSpec, depth: u32) -> Enclosure {
    let depth = depth.min(1000);
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for i in 1..=depth as u64 {
        let w = 0.5f64.powi(i as i32);
        match (a.contains_symbol(i), b.contains_symbol(i)) {
            (true, true) => {
                if a.family() == b.family() {
                    continue;
                }
                let d = map_distance(MapForm::of(a, i), MapForm::of(b, i));
                lo += w * d.lo;
                hi += w * d.hi;
            }
            (true, false) | (false, true) => {
                lo += w;
                hi += w;
            }
            (false, false) => {}
        }
    }
    let beyond = |s: &SystemSpec| s.card().is_none_or(|c| c > depth as u64);
    if beyond(a) || beyond(b) {
        // each remaining term is at most diam X + 2 = 3
        hi += 3.0 * 0.5f64.powi(depth as i32);
    }
    Enclosure::new(lo * (1.0 - 4.0 * f64::EPSILON), hi * (1.0 + 4.0 * f64::EPSILON))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaCheck {
    pub pass: bool,
    /// `max(q, 1/q)` over the checked symbols and the law limit.
    #[serde(with = "crate::float_repr")]
    pub worst_ratio: f64,
    /// `None` when the worst case is the limit `e -> ∞`.
    pub worst_symbol: Option<u64>,
    pub symbols_checked: u64,
}

fn sup_derivative(sys: &SystemSpec, e: u64) -> f64 {
    if sys.is_gauss() {
        1.0 / (e as f64 * e as f64)
    } else {
        sys.ln_ratio(e).exp().mid()
    }
}

/// `sup|phi_e'| ~ K e^{-s} (log e)^{-q}` for large `e`.
fn asymptotic_law(f: &Family) -> Option<(f64, f64, f64)> {
    match f {
        Family::Gauss | Family::Lueroth => Some((1.0, 2.0, 0.0)),
        Family::GeneralizedLueroth => Some((4.0, 3.0, 0.0)),
        Family::PowerLaw { a, p } => Some((*a, *p, 0.0)),
        Family::LogPower { a } => Some((*a, 1.0, 2.0)),
        Family::FiniteSelfSimilar { .. } => None,
    }
}

/// Ratio of single-symbol derivative norms between a system and its approximant.
pub fn lambda_ratio_check(sys_n: &SystemSpec, sys: &SystemSpec, r: f64, cap: u64) -> Result<LambdaCheck, MfsError> {
    if !(r > 1.0) {
        return Err(MfsError::InvalidArgument("R must exceed 1".into()));
    }
    let top = match (sys_n.card(), sys.card()) {
        (None, Some(_)) => return Err(MfsError::NotNested),
        (Some(n), Some(m)) if n > m => return Err(MfsError::NotNested),
        (Some(n), _) => n,
        (None, None) => cap,
    };
    let mut worst = 1.0f64;
    let mut worst_symbol = Some(1);
    for e in 1..=top {
        let q = sup_derivative(sys_n, e) / sup_derivative(sys, e);
        let w = q.max(1.0 / q);
        if w > worst {
            worst = w;
            worst_symbol = Some(e);
        }
    }
    if sys_n.card().is_none() {
        // both are infinite laws: compare the leading asymptotics
        let limit = match (asymptotic_law(sys_n.family()), asymptotic_law(sys.family())) {
            (Some((ka, sa, qa)), Some((kb, sb, qb))) if sa == sb && qa == qb => {
                let q = ka / kb;
                q.max(1.0 / q)
            }
            _ => f64::INFINITY,
        };
        if limit > worst {
            worst = limit;
            worst_symbol = None;
        }
    }
    Ok(LambdaCheck { pass: worst <= r, worst_ratio: worst, worst_symbol, symbols_checked: top })
}

/// Regular-convergence certificate for a truncation sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularCertificate {
    pub k: u32,
    #[serde(with = "crate::float_repr")]
    pub c: f64,
    /// Largest useful truncation, for finite alphabets.
    pub vacuous_beyond: Option<u64>,
    pub reason: String,
}

pub fn regular_certificate_exhausting(sys: &SystemSpec, _psi: &PotentialSpec) -> RegularCertificate {
    RegularCertificate {
        k: 1,
        c: 1.0,
        vacuous_beyond: sys.native_card(),
        reason: "truncated systems keep the same maps and potential on I_n, so every cylinder supremum \
                 over I_n^N is at most the supremum over I^N"
            .into(),
    }
}

/// Heuristic thresholds used by the report flags.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagThresholds {
    #[serde(with = "crate::float_repr")]
    pub boundary_max: f64,
    #[serde(with = "crate::float_repr")]
    pub interior_min: f64,
    #[serde(with = "crate::float_repr")]
    pub kink_ratio: f64,
}

impl Default for FlagThresholds {
    fn default() -> Self {
        FlagThresholds { boundary_max: 0.02, interior_min: 0.1, kink_ratio: 10.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationRecord {
    pub n: u64,
    pub t: Vec<FreeEnergyPoint>,
    pub f: Vec<SpectrumPoint>,
    #[serde(with = "crate::float_repr")]
    pub alpha_minus: f64,
    #[serde(with = "crate::float_repr")]
    pub alpha_plus: f64,
    /// Grid conjugate at `α = α_+^n`.
    #[serde(with = "crate::float_repr")]
    pub boundary_f: f64,
    #[serde(with = "crate::float_repr")]
    pub interior_f_max: f64,
    pub boundary_collapse: bool,
    pub kink: bool,
    pub rho_to_full: Enclosure,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullRecord {
    pub t: Vec<FreeEnergyPoint>,
    pub f: Vec<SpectrumPoint>,
    #[serde(with = "crate::float_repr")]
    pub alpha_minus: f64,
    #[serde(with = "crate::float_repr")]
    pub alpha_plus: f64,
    pub kink: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    /// `max_β |t_n - t_ref|` per truncation; the reference is the full system
    /// when computed, otherwise the last truncation.
    #[serde(with = "crate::float_repr::vec")]
    pub t_gap: Vec<f64>,
    /// `max_α |f_{n_{k+1}} - f_{n_k}|` over probes interior for both.
    #[serde(with = "crate::float_repr::vec")]
    pub spectrum_increments: Vec<f64>,
    /// (a) boundary value collapses to zero for every truncation.
    pub boundary_collapse: bool,
    /// (b) `α_+^n` keeps growing without flattening.
    pub escaping_boundary: bool,
    /// (c) some curve has a slope jump far above its typical variation.
    pub kink: bool,
    pub thresholds: FlagThresholds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub system: SystemSpec,
    pub psi: PotentialSpec,
    pub records: Vec<TruncationRecord>,
    pub full: Option<FullRecord>,
    pub certificate: RegularCertificate,
    pub summary: ReportSummary,
    pub policy: DepthPolicy,
    #[serde(with = "crate::float_repr")]
    pub tol: f64,
}

/// Settings for [`exhaust_run`] beyond the probe grids.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExhaustOptions {
    pub solver: FreeEnergySolver,
    /// Also evaluate the untruncated system.
    pub include_full: bool,
    pub thresholds: FlagThresholds,
}

impl ExhaustOptions {
    pub fn new(tol: f64, policy: DepthPolicy) -> Self {
        ExhaustOptions { solver: FreeEnergySolver::new(tol, policy), include_full: true, thresholds: FlagThresholds::default() }
    }
}

pub fn exhaust_run(
    sys: &SystemSpec,
    psi: &PotentialSpec,
    n_list: &[u64],
    beta_probes: &[f64],
    alpha_probes: &[f64],
    tol: f64,
    pol: &DepthPolicy,
) -> Result<ConvergenceReport, MfsError> {
    exhaust_run_with(sys, psi, n_list, beta_probes, alpha_probes, &ExhaustOptions::new(tol, *pol))
}

pub fn exhaust_run_with(
    sys: &SystemSpec,
    psi: &PotentialSpec,
    n_list: &[u64],
    beta_probes: &[f64],
    alpha_probes: &[f64],
    opts: &ExhaustOptions,
) -> Result<ConvergenceReport, MfsError> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MfsError::InvalidArgument("n list must be nonempty and strictly increasing".into()));
    }
    if alpha_probes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(MfsError::InvalidArgument("α probes must be strictly increasing".into()));
    }
    let th = opts.thresholds;
    let mut records = Vec::with_capacity(n_list.len());
    let mut curves = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let sub = sys.truncate(n)?;
        let curve = opts.solver.curve(&sub, psi, beta_probes)?;
        let sl = slopes(&curve)?;
        let spec = spectrum(&curve, alpha_probes)?;
        let boundary_f = conjugate(&curve, sl.alpha_plus)?.grid_min;
        let interior_f_max = interior_max(&spec.points);
        let warnings = curve.points.iter().filter_map(|p| p.warning.clone()).collect();
        records.push(TruncationRecord {
            n,
            t: curve.points.clone(),
            f: spec.points,
            alpha_minus: sl.alpha_minus,
            alpha_plus: sl.alpha_plus,
            boundary_f,
            interior_f_max,
            boundary_collapse: boundary_f <= th.boundary_max && interior_f_max >= th.interior_min,
            kink: has_kink(&curve, th.kink_ratio, opts.solver.tol),
            rho_to_full: rho_distance(sys, &sub, (n as u32).saturating_add(24).min(1000)),
            warnings,
        });
        curves.push(curve);
    }

    let full = if opts.include_full {
        let curve = opts.solver.curve(sys, psi, beta_probes)?;
        let sl = slopes(&curve)?;
        let spec = spectrum(&curve, alpha_probes)?;
        let kink = has_kink(&curve, th.kink_ratio, opts.solver.tol);
        let rec = FullRecord { t: curve.points.clone(), f: spec.points, alpha_minus: sl.alpha_minus, alpha_plus: sl.alpha_plus, kink };
        curves.push(curve);
        Some(rec)
    } else {
        None
    };

    let reference = curves.last().expect("at least one curve");
    let t_gap = curves[..n_list.len()].iter().map(|c| max_gap(c, reference)).collect();
    let spectrum_increments = records
        .windows(2)
        .map(|w| {
            w[0].f
                .iter()
                .zip(&w[1].f)
                .filter(|(a, b)| a.region == Region::Interior && b.region == Region::Interior)
                .map(|(a, b)| (a.value - b.value).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let alphas: Vec<(f64, f64)> = records.iter().map(|r| (r.n as f64, r.alpha_plus)).collect();
    let summary = ReportSummary {
        t_gap,
        spectrum_increments,
        boundary_collapse: records.iter().all(|r| r.boundary_collapse),
        escaping_boundary: escaping(&alphas),
        kink: records.iter().any(|r| r.kink) || full.as_ref().is_some_and(|f| f.kink),
        thresholds: th,
    };
    Ok(ConvergenceReport {
        system: sys.clone(),
        psi: psi.clone(),
        records,
        full,
        certificate: regular_certificate_exhausting(sys, psi),
        summary,
        policy: opts.solver.policy,
        tol: opts.solver.tol,
    })
}

fn interior_max(points: &[SpectrumPoint]) -> f64 {
    points
        .iter()
        .filter(|p| p.region == Region::Interior && !p.sentinel)
        .map(|p| p.value)
        .fold(f64::NEG_INFINITY, f64::max)
}

fn max_gap(a: &FreeEnergyCurve, b: &FreeEnergyCurve) -> f64 {
    a.points
        .iter()
        .zip(&b.points)
        .filter_map(|(p, q)| Some((p.mid()? - q.mid()?).abs()))
        .fold(0.0, f64::max)
}

/// Slope jump above `ratio` times the median jump and above the noise floor.
pub(crate) fn has_kink(curve: &FreeEnergyCurve, ratio: f64, tol: f64) -> bool {
    let pts = curve.finite_points();
    if pts.len() < 4 {
        return false;
    }
    let d: Vec<f64> = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let mut jumps: Vec<f64> = d.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let min_step = pts.windows(2).map(|w| w[1].0 - w[0].0).fold(f64::INFINITY, f64::min);
    let floor = 4.0 * (curve.max_width() + tol) / min_step;
    let max = jumps.iter().cloned().fold(0.0, f64::max);
    jumps.sort_by(f64::total_cmp);
    let median = jumps[jumps.len() / 2];
    max > ratio * median && max > floor
}

/// Increasing `α_+^n` whose growth per unit `log n` does not die out.
fn escaping(alphas: &[(f64, f64)]) -> bool {
    if alphas.len() < 2 || alphas.windows(2).any(|w| w[1].1 <= w[0].1) {
        return false;
    }
    let rates: Vec<f64> = alphas.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0.ln() - w[0].0.ln())).collect();
    rates.windows(2).all(|w| w[1] >= 0.5 * w[0])
}
