pub mod ambient;
pub mod barrier;
pub mod error;
pub mod flow;
pub mod io;
pub mod lab;
pub mod stability;
pub mod submanifold;

pub use error::{Error, Result};
