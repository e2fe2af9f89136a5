pub mod error;
pub mod evt;
pub mod garch;
pub mod optimize;
pub mod oracle;
pub mod quadrature;
pub mod risk;
pub mod rng;
pub mod special;
pub mod timeseries;

pub use error::{Error, Result};
