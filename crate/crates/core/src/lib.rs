pub mod cli;
pub mod constants;
pub mod decoherence;
pub mod dynamics;
pub mod error;
pub mod grating;
pub mod materials;
pub mod oracle;
pub mod quadrature;
pub mod special;
pub mod thermal;

pub use error::{Error, Result};
