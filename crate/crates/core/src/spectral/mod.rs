//! Fourier representation of fields on the periodic torus: grid, transforms,
//! Galerkin truncation, Leray projection, norms and entropy integrals.

mod entropy;
mod fft;
mod field;
mod grid;
mod norms;

pub use entropy::{entropy_integrals, full_spectrum, sqrt_c_gradient, EntropyIntegrals, EPS_SQRT_FLOOR};
pub use field::{Axis2, SolenoidalVelocityField, SpectralScalarField};
pub use grid::TorusGrid;
pub use norms::{
    energy, grad_sq, grid_min, inner, l2_sq, laplacian_sq, norms, physical_gradient, quadrature,
    velocity_grad_sq, velocity_inner, FieldNorms,
};
