//! Workbench for l1-penalized least squares (Lasso) and the Dantzig
//! selector: solvers with optimality certificates, restricted-eigenvalue
//! analysis of the Gram matrix, evaluation of the associated non-asymptotic
//! error bounds, and a seeded Monte Carlo harness that certifies those
//! bounds empirically.

pub mod api;
pub mod error;
pub mod harness;
pub mod io;
pub mod model;

pub mod bounds;
pub mod dantzig;
pub mod lasso;
pub mod re;
pub mod simplex;

pub use error::{Error, Result};
