pub mod audio;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod imaging;
pub mod manifest;
pub mod models;
pub mod pipeline;
pub mod repro;
pub mod rng;
pub mod scales;
pub mod shallow;
pub mod synth;
pub mod temporal;
pub mod tensor;
pub mod video;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
