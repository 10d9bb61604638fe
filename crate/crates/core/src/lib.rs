//! Model-free ("intelligent PI") control of averaged-model inverters and
//! microgrids, with scenario builders, a sampled-data simulation engine and a
//! PI baseline for comparison.

pub mod cli;
pub mod controllers;
pub mod engine;
pub mod error;
pub mod metrics;
pub mod plants;
pub mod scenarios;

pub use error::{Error, Result};
