//! Grid Legendre conjugation `f(α) = inf_β (t(β) + βα)` and convexity diagnostics.

use crate::error::MfsError;
use crate::free_energy::{slopes, FreeEnergyCurve};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conjugate {
    /// Infimum over the grid, or `-inf` when flagged as divergent.
    #[serde(with = "crate::float_repr")]
    pub value: f64,
    /// Smallest value actually seen on the grid.
    #[serde(with = "crate::float_repr")]
    pub grid_min: f64,
    #[serde(with = "crate::float_repr")]
    pub argmin_beta: f64,
    /// Minimum sits on an open grid edge with a decreasing trend.
    pub sentinel: bool,
}

/// `inf` over finite grid points of `t(β) + βα`, using enclosure midpoints.
pub fn conjugate(curve: &FreeEnergyCurve, alpha: f64) -> Result<Conjugate, MfsError> {
    let pts = curve.finite_points();
    if pts.is_empty() {
        return Err(MfsError::InvalidArgument("no finite free-energy points".into()));
    }
    let g: Vec<f64> = pts.iter().map(|(b, t)| t + b * alpha).collect();
    let (imin, &gmin) = g.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
    let last = g.len() - 1;
    // an edge is open when the grid itself ends there, not the domain
    let left_open = curve.points.first().is_some_and(|p| p.mid().is_some());
    let right_open = curve.points.last().is_some_and(|p| p.mid().is_some());
    let falling = |a: usize, b: usize, c: usize| g[a] < g[b] && g[b] < g[c];
    let sentinel = g.len() >= 3
        && ((imin == 0 && left_open && falling(0, 1, 2)) || (imin == last && right_open && falling(last, last - 1, last - 2)));
    Ok(Conjugate {
        value: if sentinel { f64::NEG_INFINITY } else { gmin },
        grid_min: gmin,
        argmin_beta: pts[imin].0,
        sentinel,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Interior,
    BoundaryOrExterior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    #[serde(with = "crate::float_repr")]
    pub alpha: f64,
    /// Clamped at zero; `-inf` for sentinel points.
    #[serde(with = "crate::float_repr")]
    pub value: f64,
    #[serde(with = "crate::float_repr")]
    pub unclamped: f64,
    pub region: Region,
    pub clamped: bool,
    pub sentinel: bool,
    /// An interior value had to be clamped.
    pub anomaly: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCurve {
    pub points: Vec<SpectrumPoint>,
    #[serde(with = "crate::float_repr")]
    pub alpha_minus: f64,
    #[serde(with = "crate::float_repr")]
    pub alpha_plus: f64,
}

/// Relative width under which `α_- = α_+` is treated as a single point.
const DEGENERATE_SPREAD: f64 = 1e-6;

pub fn spectrum(curve: &FreeEnergyCurve, alpha_grid: &[f64]) -> Result<SpectrumCurve, MfsError> {
    let s = slopes(curve)?;
    let (am, ap) = (s.alpha_minus, s.alpha_plus);
    let degenerate = (ap - am).abs() <= DEGENERATE_SPREAD * (1.0 + am.abs());
    let mut points = Vec::with_capacity(alpha_grid.len());
    for (i, &alpha) in alpha_grid.iter().enumerate() {
        let cell = cell_width(alpha_grid, i);
        let interior = if degenerate {
            (alpha - am).abs() <= DEGENERATE_SPREAD * (1.0 + am.abs())
        } else {
            alpha > am + cell && alpha < ap - cell
        };
        let c = conjugate(curve, alpha)?;
        let clamped = !c.sentinel && c.value < 0.0;
        points.push(SpectrumPoint {
            alpha,
            value: if clamped { 0.0 } else { c.value },
            unclamped: c.value,
            region: if interior { Region::Interior } else { Region::BoundaryOrExterior },
            clamped,
            sentinel: c.sentinel,
            anomaly: interior && clamped,
        });
    }
    Ok(SpectrumCurve { points, alpha_minus: am, alpha_plus: ap })
}

fn cell_width(grid: &[f64], i: usize) -> f64 {
    let left = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
    let right = if i + 1 < grid.len() { grid[i + 1] - grid[i] } else { 0.0 };
    left.max(right)
}

/// Lower convex hull of the points, evaluated back at each `β`.
pub(crate) fn convex_minorant(pts: &[(f64, f64)]) -> Vec<f64> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or above the chord a -> p
            if (b.1 - a.1) * (p.0 - a.0) >= (p.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut j = 0;
    pts.iter()
        .map(|&(x, _)| {
            while j + 1 < hull.len() && hull[j + 1].0 < x {
                j += 1;
            }
            if j + 1 >= hull.len() || hull[j].0 == x {
                hull[j].1
            } else {
                let (a, b) = (hull[j], hull[j + 1]);
                a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
            }
        })
        .collect()
}

/// `max (t - t**)` over finite grid points.
pub fn biconjugate_gap(curve: &FreeEnergyCurve) -> Result<f64, MfsError> {
    let pts = curve.finite_points();
    if pts.len() < 3 {
        return Err(MfsError::InvalidArgument("biconjugate gap needs at least 3 finite points".into()));
    }
    let hull = convex_minorant(&pts);
    Ok(pts.iter().zip(&hull).map(|((_, t), h)| t - h).fold(0.0, f64::max))
}
