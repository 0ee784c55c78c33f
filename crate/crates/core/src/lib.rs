//! Analysis, control and simulation of state-dependent limited processor
//! sharing queues.

pub mod control;
pub mod error;
pub mod model;
pub mod rbm;
pub mod sim;
mod pchip;
pub mod policy;

pub use error::{Error, Result};
pub use model::*;
pub use pchip::Pchip;
pub use policy::{ControlPolicy, RoundedPolicy};
