//! Cartan geometries, Cartan bundles and transitive Pfaffian groupoids over
//! matrix Lie groups, with every structural identity available as a sampled
//! numeric check.
//!
//! Bundles are chart-trivialized: a principal `H`-bundle is `U × H` for an open
//! box `U ⊂ ℝ^m`, and a vector-valued 1-form `θ` is stored along the section
//! `h = e` and extended to the whole bundle by equivariance. The gauge groupoid
//! `(P × P)/H` is presented by normalized arrows `(x, h, y)`.
//!
//! Tangent vectors of `H` are always written in right-trivialized form: a
//! tangent `ξ ∈ T_hH` is stored as the Lie algebra element `X = ξ·h⁻¹`.

pub mod cartan;
pub mod catalog;
pub mod error;
pub mod frames;
pub mod groupoid;
pub mod klein;
pub mod liegroups;
pub mod numkit;
pub mod verify;

pub use error::{Error, Result};
