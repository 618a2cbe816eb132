pub mod besov;
pub mod cli;
pub mod error;
pub mod exponents;
pub mod funcrep;
pub mod grid;
pub mod intmat;
pub mod littlewood_paley;
pub mod localapprox;
pub mod mra;
pub mod stats;
pub mod tiling;

pub use error::{Error, ErrorClass, Result};
