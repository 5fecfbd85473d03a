//! Special functions behind the resonance solvers.
//!
//! Two independent evaluation routes are kept apart on purpose: [`riccati`]
//! uses exact three-term recurrences, [`uniform`] uses Olver/Debye uniform
//! asymptotic expansions built on [`airy`].

pub mod airy;
pub mod riccati;
pub mod uniform;
