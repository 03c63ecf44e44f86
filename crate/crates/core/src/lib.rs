pub mod cli;
pub mod config;
pub mod counterexample;
pub mod domains;
pub mod envelope;
pub mod error;
pub mod grid;
pub mod lowdisc;
pub mod regularize;
pub mod subharmonic;

pub use error::{Error, Result};
