//! Parameters, grids, quadrature, discrete derivatives and the mechanical energy.

pub mod grid;
pub mod mechanics;
pub mod params;
pub mod profile;
pub mod quad;

pub use grid::{Grid1D, Grid2D};
pub use mechanics::{em_gradient, mechanical_energy};
pub use params::ModelParams;
pub use profile::{interior_dot, interior_norm, DeflectionProfile, DELTA_FLOOR};
pub use quad::{quad1d, quad2d, simpson_weights};
