//! Gradient-matching dataset reduction for offline reinforcement learning.
// negated comparisons deliberately reject NaN; index loops mirror the math
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod agent;
pub mod analysis;
pub mod envdata;
pub mod error;
pub mod numcore;
pub mod selector;

pub use error::{Error, Result};
