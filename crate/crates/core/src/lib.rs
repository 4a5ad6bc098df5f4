pub mod acoustics;
pub mod corpus;
pub mod eval;
pub mod error;
pub mod extract;
pub mod fusion;
pub mod noise;
pub mod pca;
pub mod pipeline;
pub mod refmetrics;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
