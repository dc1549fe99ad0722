//! Intermittent interval maps with several indifferent fixed points, their
//! occupation-time processes, and the skew Bessel limit objects.
//!
//! The crate is `no_std` (it needs `alloc`). Randomness is always supplied by
//! the caller through [`rand::Rng`].

#![no_std]
// `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bessel;
pub mod cadlag;
pub mod limits;
pub mod map;
pub mod occupation;
pub mod return_map;
pub mod special;
pub mod stats;

pub use map::{
    boole_eval, invariant_density_boole, make_thaler_family, IntermittentMap, MapError, MapFamily,
    Orbit, OrbitConfig, Point, StallPolicy,
};
