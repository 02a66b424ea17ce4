//! Quantum conditional probabilities and the information measures built on
//! them.
//!
//! Given a state `rho_Q` and a CPTP map `E`, the eigenbases `{P_q}` of
//! `rho_Q` and `{P_r}` of `rho_R = E(rho_Q)` are linked by the column-stochastic
//! table `p(r|q) = Tr[P_r E(P_q)]`. From it the crate derives a conditional
//! entropy `J`, a dynamical mutual information `I = S(rho_R) - J`, Markov
//! chains with a data-processing inequality, subsystem conditionals, and a
//! randomized [`verify`] engine that checks every identity and inequality
//! relating these quantities.

pub mod chain;
pub mod channels;
pub mod cli;
pub mod conditional;
pub mod error;
pub mod generalized;
pub mod io;
pub mod linalg;
pub mod measures;
pub mod random;
pub mod states;
pub mod subsystems;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/conditional.md")]
    pub struct Conditional;
    #[doc = include_str!("../../../book/src/measures.md")]
    pub struct Measures;
    #[doc = include_str!("../../../book/src/chains.md")]
    pub struct Chains;
    #[doc = include_str!("../../../book/src/subsystems.md")]
    pub struct Subsystems;
    #[doc = include_str!("../../../book/src/generalized.md")]
    pub struct Generalized;
    #[doc = include_str!("../../../book/src/verification.md")]
    pub struct Verification;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
    #[doc = include_str!("../../../book/src/formats.md")]
    pub struct Formats;
}
