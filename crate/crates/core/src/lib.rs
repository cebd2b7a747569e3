//! Unambiguous state discrimination (USD) of `N` symmetric coherent states
//! `|α e^{2πik/N}⟩` using only beamsplitters, threshold photodetectors and
//! feedback.
//!
//! The crate is organised bottom-up:
//!
//! - [`optics`] and [`random`]: exact coherent-state linear optics and the
//!   seeded randomness contract.
//! - [`analytics`]: closed-form success probabilities, the optimal
//!   (unrestricted) USD bound, small-amplitude asymptotics and finite-copy sums.
//! - [`strategies`]: event-level execution of every measurement procedure.
//! - [`qkd`]: BB84 sessions with the 4-step feedback receiver on Bob's side.
//! - [`montecarlo`]: estimation harness and curve tables.
//! - [`oracle`] and [`validation`]: independent reference routes and the
//!   self-check suite used by the `usd validate` command.

pub mod analytics;
pub mod error;
pub mod montecarlo;
pub mod optics;
pub mod oracle;
pub mod qkd;
pub mod random;
pub mod strategies;
pub mod validation;

pub use error::{Error, Result};
