//! Descent methods, line searches, learning-rate schedules, stochastic
//! optimizers, second-order steps and conjugate gradient solvers, together
//! with closed-form convergence predictors for quadratic objectives.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analysis;
pub mod cg;
pub mod error;
pub mod linalg;
pub mod linesearch;
pub mod objective;
pub mod optim;
pub mod schedule;
pub mod second_order;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use objective::{Objective, QuadraticForm};
