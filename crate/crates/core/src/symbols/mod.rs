//! Negative definite functions, time-dependent symbols and numerical class checks.

mod checks;
mod faa;
pub mod fd;
mod levy;
mod psi;
mod symbol;

pub use checks::{
    check_assumptions, estimate_seminorm, linspace, random_sample_pairs, verify_ndf_properties, AssumptionReport,
    CheckResult, NdfOptions, NdfReport, SampleBox, SamplePlan, SeminormEstimate, Witness,
};
pub use faa::{exp_estimate_bound, faa_di_bruno_derivative, DerivativeTable};
pub use levy::{eval_levy_khintchine, Atom, LevyMeasure, LevyTriplet};
pub use psi::{bracket, CutoffRho, Psi};
pub use symbol::{Jet1d, Modulation, SymbolFn, SymbolKind, SymbolSpec, TimeDependentSymbol, TimeFactor};
