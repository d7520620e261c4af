pub mod bench;
pub mod error;
pub mod generators;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod params;
pub mod spectral;
pub mod transform;

pub use error::{GlctError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
