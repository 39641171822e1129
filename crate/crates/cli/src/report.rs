//! Running a [`RunConfig`] and rendering the result as CSV or JSON.

use crate::config::{CommandKind, Format, RunConfig};
use mfs_core::exhaust::{exhaust_run_with, ExhaustOptions};
use mfs_core::free_energy::slopes;
use mfs_core::legendre::{biconjugate_gap, spectrum};
use mfs_core::pressure::pressure;
use mfs_core::{
    ConvergenceReport, DepthPolicy, Enclosure, FreeEnergyCurve, FreeEnergySolver, FreeEnergyValue, LambdaCheck, MfsError,
    PotentialSpec, PressureValue, Region, Sign, Slopes, SpectrumCurve, SystemSpec, WeightedPotential,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressurePoint {
    #[serde(with = "mfs_core::float_repr")]
    pub t: f64,
    #[serde(with = "mfs_core::float_repr")]
    pub beta: f64,
    pub value: PressureValue,
    pub sign: Sign,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureReport {
    pub system: SystemSpec,
    pub psi: PotentialSpec,
    pub policy: DepthPolicy,
    pub points: Vec<PressurePoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreeEnergyReport {
    pub system: SystemSpec,
    pub psi: PotentialSpec,
    pub solver: FreeEnergySolver,
    pub curve: FreeEnergyCurve,
    /// Absent for grids with fewer than 3 finite points.
    pub slopes: Option<Slopes>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub system: SystemSpec,
    pub psi: PotentialSpec,
    pub solver: FreeEnergySolver,
    pub curve: FreeEnergyCurve,
    pub slopes: Slopes,
    pub spectrum: SpectrumCurve,
    #[serde(with = "mfs_core::float_repr")]
    pub biconjugate_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhoReport {
    pub system_a: SystemSpec,
    pub system_b: SystemSpec,
    pub depth: u32,
    pub rho: Enclosure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaReport {
    pub approximant: SystemSpec,
    pub target: SystemSpec,
    #[serde(with = "mfs_core::float_repr")]
    pub ratio: f64,
    pub symbol_cap: u64,
    pub check: LambdaCheck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Report {
    Pressure(PressureReport),
    FreeEnergy(FreeEnergyReport),
    Spectrum(SpectrumReport),
    Exhaust(Box<ConvergenceReport>),
    Rho(RhoReport),
    LambdaCheck(LambdaReport),
}

impl Report {
    /// Some pressure could not be bounded above.
    pub fn has_indeterminate(&self) -> bool {
        match self {
            Report::Pressure(r) => r.points.iter().any(|p| matches!(p.value, PressureValue::Indeterminate { .. })),
            _ => false,
        }
    }
}

fn solver(cfg: &RunConfig) -> FreeEnergySolver {
    let s = FreeEnergySolver::new(cfg.tol, cfg.policy).with_t_cap(cfg.t_cap);
    match cfg.escalate {
        Some(d) => s.with_escalation(d),
        None => s,
    }
}

fn free_energy_points(s: &FreeEnergySolver, sys: &SystemSpec, psi: &PotentialSpec, grid: &[f64]) -> Result<FreeEnergyCurve, MfsError> {
    if grid.len() >= 3 {
        return s.curve(sys, psi, grid);
    }
    let points = grid.iter().map(|&b| s.at(sys, psi, b)).collect::<Result<Vec<_>, _>>()?;
    Ok(FreeEnergyCurve::from_points(points))
}

pub fn run(cfg: &RunConfig) -> Result<Report, MfsError> {
    let system = || cfg.system.clone().expect("checked by parse_config");
    let psi = || cfg.psi.clone().expect("checked by parse_config");
    Ok(match cfg.command {
        CommandKind::Pressure => {
            let (sys, psi) = (system(), psi());
            let pairs: Vec<(f64, f64)> = cfg.beta.iter().flat_map(|&b| cfg.t.iter().map(move |&t| (t, b))).collect();
            let points = pairs
                .par_iter()
                .map(|&(t, beta)| {
                    let value = pressure(&WeightedPotential::new(&sys, &psi, t, beta)?, &cfg.policy);
                    Ok(PressurePoint { t, beta, sign: value.sign(), value })
                })
                .collect::<Result<Vec<_>, MfsError>>()?;
            Report::Pressure(PressureReport { system: sys, psi, policy: cfg.policy, points })
        }
        CommandKind::FreeEnergy => {
            let (sys, psi, s) = (system(), psi(), solver(cfg));
            let curve = free_energy_points(&s, &sys, &psi, &cfg.beta)?;
            let slopes = if curve.finite_points().len() >= 3 { slopes(&curve).ok() } else { None };
            Report::FreeEnergy(FreeEnergyReport { system: sys, psi, solver: s, curve, slopes })
        }
        CommandKind::Spectrum => {
            let (sys, psi, s) = (system(), psi(), solver(cfg));
            let curve = s.curve(&sys, &psi, &cfg.beta)?;
            let slopes = slopes(&curve)?;
            let spectrum = spectrum(&curve, &cfg.alpha)?;
            let biconjugate_gap = biconjugate_gap(&curve)?;
            Report::Spectrum(SpectrumReport { system: sys, psi, solver: s, curve, slopes, spectrum, biconjugate_gap })
        }
        CommandKind::Exhaust => {
            let opts = ExhaustOptions { solver: solver(cfg), include_full: cfg.include_full, ..ExhaustOptions::new(cfg.tol, cfg.policy) };
            let report = exhaust_run_with(&system(), &psi(), &cfg.n_list, &cfg.beta, &cfg.alpha, &opts)?;
            Report::Exhaust(Box::new(report))
        }
        CommandKind::Rho => {
            let (a, b) = (cfg.system_a.clone().expect("checked"), cfg.system_b.clone().expect("checked"));
            let rho = mfs_core::rho_distance(&a, &b, cfg.depth);
            Report::Rho(RhoReport { system_a: a, system_b: b, depth: cfg.depth, rho })
        }
        CommandKind::LambdaCheck => {
            let (a, b) = (cfg.system_a.clone().expect("checked"), cfg.system_b.clone().expect("checked"));
            let check = mfs_core::lambda_ratio_check(&a, &b, cfg.ratio, cfg.lambda_cap)?;
            Report::LambdaCheck(LambdaReport { approximant: a, target: b, ratio: cfg.ratio, symbol_cap: cfg.lambda_cap, check })
        }
    })
}

/// 17 significant digits, so every value parses back to the same `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn sign_name(s: Sign) -> &'static str {
    match s {
        Sign::Negative => "negative",
        Sign::Positive => "positive",
        Sign::ZeroStraddling => "zero_straddling",
    }
}

fn csv_rows(report: &Report) -> (Vec<&'static str>, Vec<Vec<String>>) {
    let b = |v: bool| v.to_string();
    match report {
        Report::Pressure(r) => (
            vec!["t", "beta", "kind", "p_lo", "p_hi", "sign"],
            r.points
                .iter()
                .map(|p| {
                    let kind = match p.value {
                        PressureValue::Finite { .. } => "finite",
                        PressureValue::PlusInfinity => "plus_infinity",
                        PressureValue::Indeterminate { .. } => "indeterminate",
                    };
                    vec![
                        fmt_float(p.t),
                        fmt_float(p.beta),
                        kind.into(),
                        fmt_float(p.value.lower()),
                        fmt_float(p.value.upper()),
                        sign_name(p.sign).into(),
                    ]
                })
                .collect(),
        ),
        Report::FreeEnergy(r) => (
            vec!["beta", "t_lo", "t_hi", "infinite", "zero_exists"],
            r.curve
                .points
                .iter()
                .map(|p| {
                    let (lo, hi, inf) = match p.value {
                        FreeEnergyValue::Finite { enclosure } => (enclosure.lo, enclosure.hi, false),
                        FreeEnergyValue::PlusInfinity => (f64::INFINITY, f64::INFINITY, true),
                    };
                    vec![fmt_float(p.beta), fmt_float(lo), fmt_float(hi), b(inf), b(p.zero_exists)]
                })
                .collect(),
        ),
        Report::Spectrum(r) => (
            vec!["alpha", "f", "region", "clamped"],
            r.spectrum
                .points
                .iter()
                .map(|p| {
                    let region = match p.region {
                        Region::Interior => "interior",
                        Region::BoundaryOrExterior => "boundary_or_exterior",
                    };
                    vec![fmt_float(p.alpha), fmt_float(p.value), region.into(), b(p.clamped)]
                })
                .collect(),
        ),
        Report::Exhaust(r) => (
            vec!["n", "alpha_minus", "alpha_plus", "boundary_f", "boundary_collapse", "rho_lo", "rho_hi", "t_gap"],
            r.records
                .iter()
                .zip(&r.summary.t_gap)
                .map(|(rec, gap)| {
                    vec![
                        rec.n.to_string(),
                        fmt_float(rec.alpha_minus),
                        fmt_float(rec.alpha_plus),
                        fmt_float(rec.boundary_f),
                        b(rec.boundary_collapse),
                        fmt_float(rec.rho_to_full.lo),
                        fmt_float(rec.rho_to_full.hi),
                        fmt_float(*gap),
                    ]
                })
                .collect(),
        ),
        Report::Rho(r) => (
            vec!["depth", "rho_lo", "rho_hi"],
            vec![vec![r.depth.to_string(), fmt_float(r.rho.lo), fmt_float(r.rho.hi)]],
        ),
        Report::LambdaCheck(r) => (
            vec!["pass", "worst_ratio", "worst_symbol", "symbols_checked"],
            vec![vec![
                b(r.check.pass),
                fmt_float(r.check.worst_ratio),
                r.check.worst_symbol.map_or_else(|| "limit".into(), |e| e.to_string()),
                r.check.symbols_checked.to_string(),
            ]],
        ),
    }
}

pub fn render(report: &Report, format: Format) -> Result<Vec<u8>, String> {
    match format {
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(report).map_err(|e| e.to_string())?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let (header, rows) = csv_rows(report);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).map_err(|e| e.to_string())?;
            for row in rows {
                w.write_record(&row).map_err(|e| e.to_string())?;
            }
            w.into_inner().map_err(|e| e.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, f64::MIN_POSITIVE, 0.0] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(f64::INFINITY), "inf");
    }
}
