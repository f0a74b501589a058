//! Deterministic kernels: Hermite polynomials, the midpoint Taylor table and
//! the catalog of smooth test functions.

mod functions;
mod hermite;
mod taylor;

pub use functions::{Field2D, PartialField, Polynomial2D, TestFunction2D};
pub use hermite::{hermite_eval, hermite_expand, HermiteExpansion};
pub use taylor::{midpoint_taylor_table, MidpointTaylorTable, MAX_TAYLOR_ORDER};
