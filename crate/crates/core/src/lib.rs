pub mod adversary;
pub mod distill;
pub mod error;
pub mod lp;
pub mod mermin;
pub mod polytope;
pub mod protocol;
pub mod security;

pub use error::{Error, Result};
