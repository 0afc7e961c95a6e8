//! Proportionally fair resource allocation for slotted-ALOHA networks whose
//! users are powered by RF energy broadcast from the base station.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fmt;
pub mod model;
pub mod simulator;
pub mod solver;
pub mod specfun;

pub use error::{Error, Result};
