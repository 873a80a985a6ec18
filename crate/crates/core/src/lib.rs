//! Actor networks, protocol processes and runs, and a derivation logic for reasoning about them.

pub mod cli;
pub mod dot;
pub mod explorer;
pub mod network;
pub mod order;
pub mod pdl;
pub mod process;
pub mod run;
pub mod syntax;
pub mod term;
