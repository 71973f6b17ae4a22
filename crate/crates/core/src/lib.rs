//! Low-thrust multiple-gravity-assist trajectory design.
//!
//! The inner loop shapes each leg of a fixed planetary sequence with
//! hodographic velocity functions and optimizes the departure date, times of
//! flight, free shape coefficients and flyby geometry with an island-model
//! genetic algorithm followed by Nelder-Mead refinement. The outer loop
//! ([`rtba`]) searches over sequences by recursively committing to the most
//! promising next flyby body.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail these guards

pub mod ephemeris;
pub mod error;
pub mod evolve;
pub mod export;
pub mod flyby;
pub mod frames;
pub mod ltto;
pub mod quadrature;
pub mod rng;
pub mod rtba;
pub mod shaping;

pub use ephemeris::{Body, HelioState, Planet, PlanetSet, AU, DAY, SUN_MU};
pub use error::{Error, Result};
pub use ltto::{DecisionVector, LttoProblem, LttoSettings, Sequence, TrajectorySolution};
