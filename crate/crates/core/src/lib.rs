//! Simulation and analysis toolkit for the utility-privacy tradeoff of
//! smart-meter sampling policies.
//!
//! Two halves share one configuration surface:
//!
//! - A closed-loop simulator of direct load control (DLC) over a population of
//!   thermostatically controlled loads (TCLs), measuring how power-tracking
//!   error grows as the controller receives state measurements less often
//!   ([`sim`], [`tcl`], [`population`], [`controller`]).
//! - Inferential-privacy bounds: lower bounds on any adversary's error when
//!   inferring a private consumer attribute from the metered samples
//!   ([`privacy`]), via the exact MAP error, Monte Carlo, Le Cam's method
//!   (Pinsker or exact total variation) and Fano's inequality.
//!
//! The `dlcsim` binary exposes both as subcommands emitting CSV series and
//! JSON result envelopes; see [`commands`].

pub mod commands;
pub mod config;
pub mod controller;
pub mod error;
pub mod math;
pub mod output;
pub mod population;
pub mod privacy;
pub mod rng;
pub mod signal;
pub mod sim;
pub mod stats;
pub mod tcl;

pub use error::{Error, Result};
