// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cosmic;
pub mod domain;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod inequalities;
pub mod integrate;
pub mod poisson;
pub mod quadrature;
pub mod radial;
pub mod rearrangement;
pub mod report;
pub mod sampling;
pub mod weight;

pub use error::{Error, Result};
