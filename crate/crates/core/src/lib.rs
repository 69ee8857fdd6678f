pub mod cli;
pub mod error;
pub mod forward;
pub mod grid;
pub mod io;
pub mod kernel;
pub mod model;
pub mod phantom;
pub mod quadrature;
pub mod reconstruct;
pub mod specfun;
pub mod spectral;
pub mod validate;

pub use error::{Error, Result};
