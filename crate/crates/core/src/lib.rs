pub mod bounds;
pub mod certificates;
pub mod cli;
pub mod error;
mod export;
pub mod kron;
mod linalg;
mod sdp;
pub mod sim;
pub mod system;

pub use error::{Error, Result};
pub use export::write_json;
pub use system::{LtiSystem, UncertainSystem};
