//! Compiles the book chapters so their listings run as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}
#[doc = include_str!("../../../book/src/measure.md")]
pub mod measure {}
#[doc = include_str!("../../../book/src/connectivity.md")]
pub mod connectivity {}
#[doc = include_str!("../../../book/src/dynamics.md")]
pub mod dynamics {}
#[doc = include_str!("../../../book/src/trees.md")]
pub mod trees {}
#[doc = include_str!("../../../book/src/shattering.md")]
pub mod shattering {}
#[doc = include_str!("../../../book/src/lab.md")]
pub mod lab {}
#[doc = include_str!("../../../README.md")]
pub mod readme {}
