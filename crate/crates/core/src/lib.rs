//! Nash equilibria of nonzero-sum Dynkin games on finite filtration trees.
//!
//! A game gives each of two players a pair of payoff processes `X^i ≤ Y^i`
//! on a non-recombining event tree. Each player picks a stopping time; the
//! first to stop collects `X`, the other collects `Y` at that moment, and a
//! tie convention settles simultaneous stops. [`iterate_equilibrium`]
//! alternates Snell envelope best responses until the pair of stopping times
//! stabilizes, and [`verify_equilibrium`] certifies the result with an
//! independent backward induction.
//!
//! Values are exact rationals ([`BigRational`]) unless a caller opts into
//! `f64` through the [`Scalar`] trait.

pub mod cli;
pub mod dynkin;
pub mod error;
pub mod format;
pub mod gcc;
pub mod generate;
pub mod oracle;
pub mod scalar;
pub mod snell;
pub mod tree;

pub use num_rational::BigRational;

pub use crate::dynkin::{
    check_assumptions, evaluate_j, half_step, iterate_equilibrium, verify_equilibrium, verify_pair,
    DynkinGame, EquilibriumResult, Player, TieConvention,
};
pub use crate::error::{Error, Result};
pub use crate::gcc::{price_claim, GameClaim, PriceQuote, UtilityFunction};
pub use crate::scalar::{Mode, Scalar};
pub use crate::snell::{snell_envelope, SnellResult};
pub use crate::tree::{AdaptedProcess, FiltrationTree, NodeId, StoppingTime};
