pub mod airy;
pub mod dynamics;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod field;
pub mod io;
pub mod metric;

pub use error::{Error, Result};
