//! Numerical laboratory for metaplectic group operators on truncated Fock spaces.
//!
//! The crate assembles, for a finite subgroup `G ⊂ U(n)`:
//!
//! * the group data itself (closure, conjugacy classes, fixed-point
//!   subspaces, group-algebra projections) — [`group`];
//! * the metaplectic representation `R` of `U(n)` on a truncated
//!   `n`-mode occupation basis and its form-valued extension `ρ` — [`fock`];
//! * the Euler operator, its zero-order normalization, projection twists
//!   and the analytic (Fredholm) index by spectral truncation — [`euler`];
//! * crossed-product-valued elliptic symbols, the difference construction,
//!   exterior products and the rotation homotopy — [`symbol`];
//! * Chern forms, twisted traces and the conjugacy-class-localized
//!   topological index — [`forms`], [`trace`].
//!
//! Everything is dense linear algebra over `Complex64`; matrix claims are
//! always made on the *reliable block* of the truncation, where per-mode
//! cutoff effects provably do not reach.

pub mod error;
pub mod linalg;
pub mod exterior;
pub mod group;
pub mod fock;
pub mod euler;
pub mod symbol;
pub mod forms;
pub mod quad;
pub mod trace;
pub mod synth;

pub use error::{Error, Result};
