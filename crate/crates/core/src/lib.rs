#![allow(clippy::needless_range_loop)]

pub mod appendix;
pub mod check;
pub mod connection;
pub mod curvature;
pub mod embedding;
pub mod error;
pub mod expr;
pub mod metric;
pub mod quasi;
pub mod random;
pub mod rational;
pub mod report;
pub mod runner;
pub mod scalar;
pub mod scenario;
pub mod series;
pub mod star;
pub mod tensor;

pub use error::{Error, Result};
pub use rational::Rational;
