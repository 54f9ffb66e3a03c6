//! Random-cluster model, FK (Glauber) dynamics and Swendsen–Wang dynamics
//! on random regular graphs.
//!
//! ```
//! use rcdyn::exact::enumerate;
//! use rcdyn::graphs::named;
//! use rcdyn::BoundaryCondition;
//!
//! let table = enumerate(&named::triangle(), 0.5, 2.0, &BoundaryCondition::free()).unwrap();
//! assert!((table.z() - 3.5).abs() < 1e-12);
//! ```

pub mod boundary;
pub mod connectivity;
pub mod dynamics;
pub mod error;
pub mod exact;
pub mod graphs;
pub mod rng;
pub mod shattering;
pub mod tree;
pub mod unionfind;

pub use boundary::BoundaryCondition;
pub use error::{Error, Result};
pub use graphs::MultiGraph;
