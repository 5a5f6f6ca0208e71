pub mod cli;
pub mod error;
pub mod estimate;
pub mod experiments;
pub mod lattice;
pub mod oracle;
pub mod randfield;
pub mod sweep;

pub use error::{Error, Result};
