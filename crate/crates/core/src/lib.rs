//! Two-center restricted Hartree model: monoatomic reference state, diatomic
//! mean-field problem, asymptotic fits and standalone numerical checks.

pub mod asymptotics;
pub mod checks;
pub mod coulomb;
pub mod diatomic;
pub mod dst;
pub mod eigen;
pub mod error;
pub mod fit;
pub mod grids;
pub mod mono;
pub mod multipole;
pub mod scf;
pub mod special;

pub use error::{HartreeError, Result};
pub use grids::{
    make_radial_grid, AxialGrid, CartesianGrid, GridField, Mesh, ModelParams, Parity, RadialFunction, RadialGrid,
    RadialScheme,
};
