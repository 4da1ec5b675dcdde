//! Tree-approximated Ehrenfeucht–Fraïssé games over GF(2) group models.
//!
//! The crate builds the four structure-parameter presets, referees games
//! between ISO and AIS, plays ISO's strategies, and checks the finite
//! claims with exhaustive oracles.

pub mod bitmat;
pub mod constructions;
pub mod error;
pub mod exec;
pub mod game;
pub mod gf2_models;
pub mod ordinals;
pub mod posets;
pub mod strategies;
pub mod trees;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Mode;
pub use ordinals::{CardinalProfile, Ordinal, PartialFn};
