//! Polytope projection by progressive vertex enumeration, with
//! Fourier-Motzkin elimination as an exact baseline and coordinated
//! power-system dispatch built on top of the projected regions.

pub mod cost;
pub mod error;
pub mod fme;
pub mod generate;
pub mod geometry;
pub mod io;
pub mod lp;
pub mod macod;
pub mod pve;
pub mod tdcod;

pub use error::{Error, Result};
