//! Scrambling of operator subalgebras: A-OTOCs, their long-time averages,
//! and the optimisation experiments built on them.

pub mod error;
pub mod gtps;
pub mod linalg;
pub mod mereology;
pub mod models;
pub mod optimize;
pub mod output;
pub mod scramble;

pub use error::{Error, Result};
