//! Invariant checks shared by the property suite and the acceptance run.
#![allow(dead_code)]

use mfs_core::free_energy::{slopes, FreeEnergySolver};
use mfs_core::legendre::{biconjugate_gap, conjugate, spectrum, Region};
use mfs_core::pressure::{exact_series_pressure, partition_bounds, pressure};
use mfs_core::{Depth1Law, DepthPolicy, PotentialSpec, SystemSpec, WeightedPotential};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub type Check = Result<(), TestCaseError>;

/// Random finite self-similar system with an explicit depth-1 potential.
pub fn finite_system() -> impl Strategy<Value = (SystemSpec, PotentialSpec)> {
    (2usize..=5)
        .prop_flat_map(|k| (prop::collection::vec(0.05f64..0.6, k), prop::collection::vec(-2.0f64..2.0, k)))
        .prop_map(|(ratios, values)| {
            (SystemSpec::finite(ratios, None).unwrap(), PotentialSpec::Depth1(Depth1Law::ExplicitList { values }))
        })
}

pub fn lueroth_negid() -> (SystemSpec, PotentialSpec) {
    (SystemSpec::lueroth(), PotentialSpec::Depth1(Depth1Law::NegIdentity))
}

fn wp(sys: &SystemSpec, psi: &PotentialSpec, t: f64, beta: f64) -> WeightedPotential {
    WeightedPotential::new(sys, psi, t, beta).unwrap()
}

/// `t1 < t2` never yields a pressure at `t2` certifiably above the one at `t1`.
pub fn pressure_antimonotone(sys: &SystemSpec, psi: &PotentialSpec, t1: f64, t2: f64, beta: f64, pol: &DepthPolicy) -> Check {
    let (lo_t, hi_t) = (t1.min(t2), t1.max(t2));
    let p1 = pressure(&wp(sys, psi, lo_t, beta), pol);
    let p2 = pressure(&wp(sys, psi, hi_t, beta), pol);
    prop_assert!(p2.lower() <= p1.upper(), "P({hi_t}) = {:?} above P({lo_t}) = {:?}", p2, p1);
    Ok(())
}

/// Deeper word enumeration stays consistent with the shallower enclosure and is no wider.
pub fn depth_refinement(sys: &SystemSpec, psi: &PotentialSpec, t: f64, beta: f64, depth: usize) -> Check {
    let w = wp(sys, psi, t, beta);
    let shallow = partition_bounds(&w, depth, 64).unwrap();
    let deep = partition_bounds(&w, depth + 1, 64).unwrap();
    prop_assert!(deep.intersects(&shallow), "depth {depth}: {shallow} vs {deep}");
    prop_assert!(deep.width() <= shallow.width() * (1.0 + 1e-9) + 1e-12, "depth {depth}: {shallow} vs {deep}");
    Ok(())
}

/// Word enumeration agrees with the closed-form series on finite self-similar systems.
pub fn oracle_equivalence(sys: &SystemSpec, psi: &PotentialSpec, t: f64, beta: f64) -> Check {
    let w = wp(sys, psi, t, beta);
    let words = partition_bounds(&w, 3, 64).unwrap();
    let series = exact_series_pressure(&w, 1e-12).enclosure().unwrap();
    prop_assert!(words.intersects(&series), "{words} vs {series}");
    prop_assert!((words.mid() - series.mid()).abs() < 1e-9);
    Ok(())
}

pub fn beta_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Convexity defect, biconjugate gap and concavity of the conjugate on one curve.
pub fn curve_shape(sys: &SystemSpec, psi: &PotentialSpec, grid: &[f64], tol: f64) -> Check {
    let curve = FreeEnergySolver::new(tol, DepthPolicy::default()).curve(sys, psi, grid).unwrap();
    let widths = curve.max_width();
    prop_assert!(curve.convexity_defect <= widths, "defect {} widths {}", curve.convexity_defect, widths);
    if curve.finite_points().len() >= 3 {
        let gap = biconjugate_gap(&curve).unwrap();
        prop_assert!(gap <= 2.0 * widths + 1e-12, "gap {gap} widths {widths}");
        let s = slopes(&curve).unwrap();
        let span = (s.alpha_plus - s.alpha_minus).max(1e-3);
        let alphas: Vec<f64> = (0..=20).map(|i| s.alpha_minus + span * i as f64 / 20.0).collect();
        let f: Vec<f64> = alphas.iter().map(|&a| conjugate(&curve, a).unwrap().grid_min).collect();
        for i in 1..f.len() - 1 {
            // a minimum of affine functions of α is concave
            let chord = 0.5 * (f[i - 1] + f[i + 1]);
            prop_assert!(f[i] >= chord - 1e-9 * (1.0 + chord.abs()), "concavity at α = {}", alphas[i]);
        }
    }
    Ok(())
}

/// `t_n(β) <= t_m(β)` for `n < m` up to the enclosure widths.
pub fn truncation_monotone(sys: &SystemSpec, psi: &PotentialSpec, n: u64, m: u64, beta: f64, tol: f64) -> Check {
    let solver = FreeEnergySolver::new(tol, DepthPolicy::default()).with_t_cap(512.0);
    let a = solver.at(&sys.truncate(n).unwrap(), psi, beta).unwrap();
    let b = solver.at(&sys.truncate(m).unwrap(), psi, beta).unwrap();
    match (a.enclosure(), b.enclosure()) {
        (Some(x), Some(y)) => prop_assert!(x.lo <= y.hi, "t_{n} = {x} above t_{m} = {y} at β = {beta}"),
        (None, Some(_)) => prop_assert!(false, "t_{n} infinite but t_{m} finite"),
        _ => {}
    }
    Ok(())
}

/// `f_n(α) <= f(α) + tol` at α interior to both spectra.
pub fn spectrum_sandwich(sys: &SystemSpec, psi: &PotentialSpec, n: u64, grid: &[f64], alphas: &[f64], tol: f64) -> Check {
    let solver = FreeEnergySolver::new(tol, DepthPolicy::default()).with_t_cap(512.0);
    let full = spectrum(&solver.curve(sys, psi, grid).unwrap(), alphas).unwrap();
    let part = spectrum(&solver.curve(&sys.truncate(n).unwrap(), psi, grid).unwrap(), alphas).unwrap();
    let mut checked = 0;
    for (p, q) in part.points.iter().zip(&full.points) {
        if p.region == Region::Interior && q.region == Region::Interior && !p.sentinel && !q.sentinel {
            prop_assert!(p.value <= q.value + tol, "f_{n}({}) = {} above f = {}", p.alpha, p.value, q.value);
            checked += 1;
        }
    }
    prop_assert!(checked > 0, "no α probe interior to both spectra");
    Ok(())
}
