#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

extern crate alloc;

pub mod dist;
pub mod error;
pub mod special;

pub use error::{Error, Result};
pub mod design;
pub mod oracle;
pub mod params;
pub mod power;
pub mod ratify;
pub mod select;
pub mod session;
