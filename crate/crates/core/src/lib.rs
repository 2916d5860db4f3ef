pub mod builder;
pub mod data;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod kernels;
pub mod navigability;
pub mod search;
pub mod solvers;

pub use error::{Error, Result};
