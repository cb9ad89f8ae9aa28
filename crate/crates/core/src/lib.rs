//! Simulation toolkit for unsourced multiple access.

pub mod bounds;
pub mod channel;
pub mod codec;
pub mod config;
pub mod detection;
pub mod error;
pub mod montecarlo;
pub mod protocols;
pub mod runner;
pub mod seeding;
pub mod sequences;

pub use error::{Error, Result};
