//! Tic-tac-toe played by sampling the ground state of a binary quadratic
//! model that encodes the rules, with classical move selection on top.

pub mod encoder;
pub mod engine;
pub mod game;
pub mod harness;
pub mod gates;
pub mod ising;
pub mod oracle;
pub mod samplers;
