//! Text formats, an external interpolation backend and run configuration
//! for the `cdd-chc-core` solver.

pub mod config;
pub mod error;
pub mod external;
pub mod horn;
pub mod native;
pub mod sexp;
pub mod solution;
mod term;
pub mod trace;

pub use error::ParseError;
pub use horn::{parse_horn, print_horn};
pub use native::{parse_native, print_native};
pub use solution::{parse_solution, print_solution};
