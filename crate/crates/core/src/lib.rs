pub mod channel;
pub mod cli;
pub mod error;
pub mod jscc;
pub mod num;
pub mod prob;
pub mod separation;
pub mod sim;
pub mod source;

pub use error::{Error, Result};

pub type Distribution64 = prob::Distribution<f64>;
pub type Distribution32 = prob::Distribution<f32>;
pub type Channel64 = prob::Channel<f64>;
pub type Channel32 = prob::Channel<f32>;
