//! Rotation theory toolkit for torus homeomorphisms homotopic to the identity.
//!
//! The crate works on lifts `F: R^2 -> R^2` that commute with integer
//! translations. It estimates global rotation sets and local rotation subsets
//! over small disks, classifies points as elliptic or chaotic, searches for
//! periodic orbits, and applies `SL(2,Z)` coordinate changes. The
//! Misiurewicz–Ziemian family
//!
//! ```text
//! F(x, y) = (x + b sin(2π(y + a sin(2πx))), y + a sin(2πx))
//! ```
//!
//! is built in; other lifts can be written in a small expression language
//! (see [`dsl`]).

// `!(x > 0.0)` and friends deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod io;
pub mod lattice;
pub mod lift;
pub mod rotation;
pub mod sampling;

pub use error::{Error, Result};
pub use lift::{DirectionalFrame, Disk, LiftMap, PlanePoint, RotationVector, Vec2};

/// Default seed for every seeded operation ("ROTA").
pub const DEFAULT_SEED: u64 = 0x524F_5441;
