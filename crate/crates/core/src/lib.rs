//! Thermodynamic formalism for conformal iterated function systems on `[0,1]`.
//!
//! Pressure enclosures, the free energy `t(β)`, Legendre-conjugate spectra and
//! truncation (exhaustion) diagnostics.

pub mod enclosure;
pub mod error;
pub mod float_repr;
pub mod free_energy;
pub mod legendre;
pub mod potential;
pub mod pressure;
mod series;
pub mod system;

pub use enclosure::Enclosure;
pub use error::MfsError;
pub use potential::{Depth1Law, PotentialSpec, WeightedPotential};
pub use system::{Alphabet, Family, MoebiusMatrix, SystemSpec, Symbol, Word};
pub use pressure::{DepthPolicy, PressureValue, Sign};
pub use free_energy::{FreeEnergyCurve, FreeEnergyPoint, FreeEnergySolver, FreeEnergyValue, Slopes};
pub use legendre::{Conjugate, Region, SpectrumCurve, SpectrumPoint};
pub mod exhaust;
pub use exhaust::{
    exhaust_run, lambda_ratio_check, regular_certificate_exhausting, rho_distance, ConvergenceReport, ExhaustOptions, LambdaCheck,
    RegularCertificate,
};
