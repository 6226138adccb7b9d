//! Library surface of the experiment runner, kept separate from the
//! binary so integration tests can exercise the pieces directly.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod table;
