pub mod error;
pub mod harness;
pub mod hermitian;
pub mod io;
pub mod measure;
pub mod opuc;
pub mod schur;
pub mod sumrule;
pub mod summation;

pub use error::{Error, Result};
