pub mod clean;
pub mod cli;
pub mod error;
pub mod eval;
pub mod extend;
pub mod models;
pub mod report;
pub mod store;

pub use error::{Error, Result};
