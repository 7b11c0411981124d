//! Reachability exploration of surface-constrained robot motions.
#![no_std]

extern crate alloc;

pub mod atlas;
pub mod clock;
pub mod collision;
pub mod constraint;
pub mod coverage;
mod error;
pub mod explore;
pub mod kdtree;
pub mod kinematics;
pub mod scenario;
pub mod surface;

pub use error::{Error, Result};
pub use nalgebra;
