pub mod config;
pub mod error;
pub mod liealg;
pub mod ode;
pub mod phaseportrait;
pub mod report;
pub mod rootsys;
pub mod todaflow;
pub mod verify;

pub use error::{Error, Result};
