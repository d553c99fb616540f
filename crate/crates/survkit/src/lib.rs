pub mod autodiff;
pub mod data;
pub mod error;
pub mod km;
pub mod loss;
pub mod metrics;
pub mod momentum;
pub mod net;
pub mod simulate;

pub use error::{Error, Result};
