//! Desk-scale implementation of two interactive proofs of quantumness.
//!
//! A verifier asks an untrusted prover to commit to the image of a trapdoor
//! claw-free function evaluated in superposition, then challenges it with
//! either a standard-basis preimage check or an interference check that no
//! classical device can pass alongside the first. The crate provides the two
//! function families (squaring mod N and MSB-rounded LWE), the exact commit
//! circuits on a statevector simulator, the verifier/prover interaction with
//! post-selection, classical baseline strategies, the significance
//! statistics, and a newline-delimited JSON wire protocol.

pub mod circuits;
pub mod cheater;
pub mod numtheory;
pub mod protocol;
pub mod sim;
pub mod stats;
pub mod tcf;
pub mod testkit;
pub mod wire;

pub use numtheory::{BitString, ResidueVector};
pub use sim::{Basis, Gate, StateVector};
