//! Event-driven simulation of elastic collisions of `n` equal balls in
//! `R^d`, plus the verification machinery for the quantities that make the
//! total collision count finite: monotone angle and order-statistic
//! functionals, velocity- and position-gap partitions, upcrossing ledgers,
//! and closed-form collision-count bounds.

pub mod bounds;
pub mod cluster;
pub mod dynamics;
pub mod engine;
pub mod error;
pub mod functionals;
pub mod scenario;
pub mod tol;
pub mod vector;

pub use error::{Error, Result};
