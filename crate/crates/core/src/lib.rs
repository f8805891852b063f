//! Robust two-sample hypothesis testing with minimum density power divergence
//! estimators.
//!
//! The crate provides the parametric families and their divergence integrals
//! ([`family`]), estimation and tuning-parameter selection ([`estimation`]),
//! the reference distributions ([`dist`]), Wald-type tests with their power
//! approximations ([`wald`]), influence-function analytics ([`robustness`]),
//! a seeded Monte Carlo harness ([`sim`]) and dataset/record plumbing
//! ([`data`], [`record`]).

pub mod data;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod family;
pub mod linalg;
pub mod optimize;
pub mod quadrature;
pub mod record;
pub mod robustness;
pub mod sim;
pub mod stats;
pub mod wald;

pub use error::{Error, Result};
