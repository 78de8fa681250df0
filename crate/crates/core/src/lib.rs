//! Average search length prediction for single-term retrieval and filtering
//! with part-of-speech tags.
//!
//! [`model`] holds the closed forms, [`oracle`] ranks real documents to check
//! them, [`corpus`] loads tagged collections and estimates parameters,
//! [`surface`] evaluates grids for plotting and [`tagset`] compares tag layers.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod method;
pub mod model;
pub mod numfmt;
pub mod oracle;
pub mod surface;
pub mod tagset;

pub use error::{Error, Result};
