//! Pseudo-differential operators on a periodic grid in Kohn–Nirenberg quantization.

pub mod fourier;
mod grid;
mod ops;
mod symbol;

pub use grid::{GridFunction, TorusGrid};
pub use ops::{
    apply_pdo, compose_kn, compose_kn_checked, frozen_exp_symbol, psi_sobolev_norm, slice_exponent, CompositionReport,
};
pub use symbol::{DiscreteSymbol, SymbolData};
pub(crate) use ops::EXP_GUARD;

#[cfg(test)]
mod tests;
