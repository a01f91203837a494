//! Principally polarized abelian varieties whose theta divisor contains
//! translates of complementary abelian subvarieties: exact lattice
//! constructions and numerical theta/Gauss-map probes.

// `!(x > 0.0)` is deliberate: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod gauss;
pub mod lattice;
pub mod linalg;
pub mod serde_num;
pub mod theta;
pub mod torus;
pub mod verify;

pub use error::{Error, Result};
