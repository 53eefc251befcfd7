pub mod classifier;
pub mod config;
pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod rules;
pub mod synth;
pub mod zones;

pub use error::{Error, Result};
pub use model::*;
