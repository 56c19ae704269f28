//! Halász-type anti-concentration bounds with exact oracles, partial
//! Hadamard censuses and the normal-matrix counting machinery.

pub mod bounds;
pub mod distributions;
pub mod error;
pub mod exact;
pub mod hadamard;
pub mod normal;
pub mod numeric;
pub mod oracle;
pub mod par;
pub mod verify;

pub use error::{Error, Result};
