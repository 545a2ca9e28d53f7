pub mod audit;
pub mod cem;
pub mod cli;
pub mod error;
pub mod features;
pub mod generators;
pub mod genfile;
pub mod highdim;
pub mod layers;
pub mod mlp;
pub mod registration;
pub mod so3;
pub mod toy;

pub use error::{Error, Result};
