pub mod composite;
pub mod config;
pub mod error;
pub mod evolution;
pub mod ground_state;
pub mod inner;
pub mod linearized;
pub mod numerics;
pub mod remote;
pub mod self_similar;

pub use config::Config;
pub use error::{Error, Result};
