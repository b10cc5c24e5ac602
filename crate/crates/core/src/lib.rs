#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chains;
pub mod dual;
pub mod error;
pub mod geom;
pub mod lattice;
pub mod phassembly;
pub mod primal;
pub mod shell;
pub mod simulate;
pub mod sparse;

pub use error::{Error, Result};
