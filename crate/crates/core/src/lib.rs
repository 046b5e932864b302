// `!(x > 0.0)` is used on purpose: it also rejects NaN. Index loops read
// closer to the linear algebra they implement.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod cones;
pub mod error;
pub mod graphio;
pub mod lp;
pub mod sdbasis;
pub mod stableset;
pub mod symmat;

pub use error::{Error, Result};
