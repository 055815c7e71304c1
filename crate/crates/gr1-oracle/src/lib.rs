//! Independent realizability oracle for GR(1) specifications.
//!
//! The oracle never touches the main solver's game construction or
//! fixpoints. It reduces a specification to a three-color parity game
//! over explicitly enumerated valuations (map-based formula evaluation
//! throughout) and solves it with Zielonka's recursive algorithm, which
//! is itself validated against literal enumeration of positional
//! strategies on small random arenas. Intended for tests only.

pub mod parity;
pub mod randspec;
pub mod reduction;

pub use parity::{solve_parity, ParityGame, Player};
pub use randspec::random_spec;
pub use reduction::oracle_realizable;
