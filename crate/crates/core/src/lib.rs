pub mod approximator;
pub mod decision;
pub mod env;
pub mod error;
pub mod harness;
pub mod execution;
pub mod library;
pub mod sim;
pub mod skill;
pub mod toy;

pub use error::{Error, Result};
