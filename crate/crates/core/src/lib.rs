pub mod error;
pub mod fcidump;
pub mod fragments;
pub mod grouping;
pub mod majorana;
pub mod optim;
pub mod pauli;
pub mod picture;
pub mod report;
pub mod shift;
pub mod spectra;
pub mod tensors;

pub use error::{Error, Result};
