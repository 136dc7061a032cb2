#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod cli;
pub mod config;
pub mod datadriven;
pub mod error;
pub mod galerkin;
pub mod inversion;
pub mod io;
pub mod linalg;
pub mod models;
pub mod objective;
pub mod quadrature;

pub use error::{Error, Result};
