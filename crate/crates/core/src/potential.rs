//! Locally constant potentials and Birkhoff-sum enclosures.

use crate::enclosure::Enclosure;
use crate::error::MfsError;
use crate::system::{SystemSpec, Word};
use serde::{Deserialize, Serialize};

/// Per-symbol value law `c_e` of a potential depending on the first symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum Depth1Law {
    /// `c_e = -e`
    NegIdentity,
    /// `c_e = -2 log e`
    NegTwoLog,
    Constant { c: f64 },
    ExplicitList { values: Vec<f64> },
}

impl Depth1Law {
    pub fn value(&self, e: u64) -> Result<Enclosure, MfsError> {
        Ok(match self {
            Depth1Law::NegIdentity => Enclosure::point(-(e as f64)),
            Depth1Law::NegTwoLog => -Enclosure::point(e as f64).ln().scale(2.0),
            Depth1Law::Constant { c } => Enclosure::point(*c),
            Depth1Law::ExplicitList { values } => match values.get(e as usize - 1) {
                Some(v) => Enclosure::point(*v),
                None => return Err(MfsError::SymbolOutside { symbol: e, card: Some(values.len() as u64) }),
            },
        })
    }

    fn check_against(&self, sys: &SystemSpec) -> Result<(), MfsError> {
        if let Depth1Law::ExplicitList { values } = self {
            match sys.card() {
                Some(c) if c <= values.len() as u64 => {}
                _ => {
                    return Err(MfsError::InvalidPotential(format!(
                        "explicit list of {} values does not cover the alphabet",
                        values.len()
                    )))
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Depth1(Depth1Law),
    /// The log-derivative cocycle of the system itself.
    Geometric,
}

/// `t ζ + β ψ` for a depth-1 `ψ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedPotential {
    pub t: f64,
    pub beta: f64,
    pub system: SystemSpec,
    pub psi: Depth1Law,
}

impl WeightedPotential {
    /// A geometric `ψ` is folded into the `ζ` coefficient: `tζ + βζ = (t+β)ζ`.
    pub fn new(system: &SystemSpec, psi: &PotentialSpec, t: f64, beta: f64) -> Result<Self, MfsError> {
        match psi {
            PotentialSpec::Depth1(law) => {
                law.check_against(system)?;
                Ok(WeightedPotential { t, beta, system: system.clone(), psi: law.clone() })
            }
            PotentialSpec::Geometric => Ok(WeightedPotential {
                t: t + beta,
                beta: 0.0,
                system: system.clone(),
                psi: Depth1Law::Constant { c: 0.0 },
            }),
        }
    }

    pub fn with_t(&self, t: f64) -> Self {
        WeightedPotential { t, ..self.clone() }
    }

    /// `β c_e`
    pub fn psi_term(&self, e: u64) -> Result<Enclosure, MfsError> {
        if self.beta == 0.0 {
            return Ok(Enclosure::ZERO);
        }
        Ok(self.psi.value(e)?.scale(self.beta))
    }

    /// `[inf, sup]` of `S_{|w|}(tζ + βψ)` over the cylinder of `w`.
    pub fn birkhoff_bounds(&self, w: &Word) -> Result<Enclosure, MfsError> {
        let ratio = self.system.ratio_bounds(w)?;
        let mut psi = Enclosure::ZERO;
        for &e in w.symbols() {
            psi = psi + self.psi_term(e)?;
        }
        let zeta = if self.t == 0.0 { Enclosure::ZERO } else { ratio.ln().scale(self.t) };
        Ok(zeta + psi)
    }

    /// `K_Φ^{|t|}`: depth-1 `ψ` adds no oscillation.
    pub fn distortion_bound(&self) -> f64 {
        self.system.distortion_constant().powf(self.t.abs())
    }
}
