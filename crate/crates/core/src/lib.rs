//! Adaptive interval type-2 fuzzy super-twisting sliding-mode control for
//! uncertain chaotic plants, with a fixed-step closed-loop simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod controller;
pub mod error;
pub mod it2fls;
pub mod plant;
pub mod sim;

pub use error::{Error, Result};
