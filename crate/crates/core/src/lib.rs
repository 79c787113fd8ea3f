//! Numerical realization of the time-sliced fundamental solution of
//!
//! ```text
//! ∂_t u + a(t; x, D_x) u = 0,   u(s) = u₀
//! ```
//!
//! for pseudo-differential operators whose symbols are built from continuous
//! negative definite functions, together with the Markov transition kernels
//! generated by that fundamental solution.
//!
//! Layout:
//!
//! - [`symbols`]: Lévy–Khintchine exponents, time-dependent symbols, structural
//!   checks (Peetre ratio, growth, symbol-class seminorms, Faà di Bruno).
//! - [`pdo`]: periodic grids, Kohn–Nirenberg operator application, frozen
//!   exponential symbols, symbol composition, ψ-Sobolev norms.
//! - [`timeslice`]: partitions, the sliced product, refinement and extrapolation.
//! - [`decomposition`]: the principal/correction/remainder split of sliced
//!   products and the skip-sequence assembly of the remainder.
//! - [`parametrix`]: Levi–Mizohata expansion used as an independent oracle.
//! - [`markov`]: transition kernels, evolution-family checks, path sampling.
//! - [`io`]: CSV/JSON artifact formats.

pub mod decomposition;
pub mod error;
pub mod io;
pub mod markov;
pub mod par;
pub mod parametrix;
pub mod pdo;
pub mod quadrature;
pub mod symbols;
pub mod timeslice;

pub use error::{Error, Result};
pub use num_complex::Complex64;
