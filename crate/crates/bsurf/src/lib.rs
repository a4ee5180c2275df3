//! Bi-infinite ordered Bratteli diagrams, their path spaces and the
//! translation surfaces they define, together with the interval-exchange
//! and zippered-rectangle machinery that produces such diagrams.

pub mod cli;
pub mod core_diagram;
pub mod error;
pub mod fixtures;
pub mod iet_zip;
pub mod ktheory;
pub mod induction;
pub mod matrix;
pub mod path_space;
pub mod rat;
pub mod states_charts;
pub mod surface_diagram;

pub use error::{BsurfError, Result};
