// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod rng;
pub mod thm1;
pub mod thm2;
