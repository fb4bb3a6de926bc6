#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autoencoder;
pub mod config;
pub mod dsp;
pub mod error;
pub mod eval;
pub mod features;
pub mod pipeline;
pub mod render;
pub mod segment;
pub mod signal;
pub mod synth;
pub mod tda;
pub mod wfdb;

pub use error::{Error, Result};
pub use signal::Signal;
