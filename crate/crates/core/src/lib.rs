//! Online nonstochastic control of dynamical systems on the probability simplex.

pub mod applications;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod mixing;
pub mod optimizer;
pub mod seed;
pub mod simplex;

pub use error::{Error, Result};
