//! Growth of discrete subgroups of products of `SL(n, R)` in the Weyl chamber.
//!
//! The crate enumerates word balls of matrix groups and reduces every element
//! to its Cartan projection, synthesizes point clouds with a prescribed
//! directional growth, estimates critical exponents and the growth indicator
//! from such datasets, and turns either kind of input into a report on the
//! bottom of the spectrum of the associated locally symmetric space.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cartan;
pub mod chamber;
pub mod error;
pub mod estimate;
pub mod gauge;
pub mod orbit;
pub mod spectrum;
pub mod sphere;
pub mod synth;
pub mod verify;

pub use chamber::{ChamberVector, GroupDescriptor, RootSystem};
pub use error::{Error, ParseError, Result};
