pub mod error;
pub mod cubical;
pub mod experiments;
pub mod gf2;
pub mod persistence;
pub mod pipeline;
pub mod signatures;
pub mod systems;

pub use error::{Error, Result};
