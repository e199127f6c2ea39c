//! Experiment drivers, configuration, and file formats behind the `polymhd`
//! binary, exposed as a library so integration suites can reuse them.

pub mod commands;
pub mod config;
pub mod report;
pub mod vtk;
