//! Exact solver for dynamic revelation games under asymmetric awareness.
//!
//! A decision maker chooses a state-contingent plan of action but may be
//! unaware of distinctions an expert can see. The expert can disclose
//! awareness round by round; once a plan is proposed it stays on the table,
//! so the expert ultimately picks among everything proposed. This crate
//! models awareness levels as partitions of a finite ground space, solves
//! the resulting game with exact rational arithmetic, and audits the
//! associated direct mechanisms for individual rationality, incentive
//! compatibility, and Pareto optimality.
//!
//! Entry points:
//!
//! - [`space::StateSpace`] / [`partition::Partition`] / [`instance::Instance`]
//!   describe a problem.
//! - [`contracts`] enumerates and optimizes over contracts.
//! - [`game`] plays the revelation game: myopic strategies, expert best
//!   responses, strategy property checks.
//! - [`mechanisms`] computes the boundary mechanisms and their audits.
//! - [`oracle`] generates seeded instances and brute-force-verifies the
//!   structural claims on them.
//! - [`files`] / [`cli`] load and save instances and drive everything from
//!   the command line.
//!
//! The `examples/` directory contains one runnable program per capability;
//! `cargo run --example myopic_game` is a good first stop.

mod error;

pub mod cli;
pub mod contracts;
pub mod files;
pub mod fixtures;
pub mod game;
pub mod instance;
pub mod mechanisms;
pub mod oracle;
pub mod partition;
pub mod rational;
pub mod refinement;
pub mod space;

pub use error::{Error, Result};
pub use instance::Instance;
pub use partition::Partition;
pub use rational::Rational;
pub use space::{Contract, Player, StateSpace};
