pub mod analysis;
pub mod cascade;
pub mod discretization;
pub mod equilibrium;
pub mod error;
pub mod mc;
pub mod pde;
pub mod problem;

pub use discretization::{Field2D, Field3D, Grid, Partition};
pub use error::{Result, TicError};
pub use problem::{ControlSet, HamiltonianArgs, ProblemSpec};
