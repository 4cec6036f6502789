//! Norms, inner products and integral functionals of spectral fields.
//!
//! `L^2`- and `H^1`-type quantities are evaluated spectrally (Parseval with
//! the mean-preserving normalization: `||f||_{L^2}^2 = L^2 * sum |f_hat|^2`);
//! `L^1`, `L^inf` and pointwise extrema use trapezoid-free quadrature on the
//! physical grid, which is exact for band-limited integrands.

use super::field::{Axis2, SolenoidalVelocityField, SpectralScalarField};
use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

/// Bundle of norms of a scalar field.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FieldNorms {
    pub l2: f64,
    pub h1: f64,
    pub l1: f64,
    pub linf: f64,
    /// Integral of the field, `L^2 * coeff(0)`.
    pub mass: f64,
}

/// All norms of a scalar field.
pub fn norms(field: &SpectralScalarField) -> FieldNorms {
    let grid = field.grid();
    let area = grid.area();
    let mut sum_sq = 0.0;
    let mut sum_grad_sq = 0.0;
    for ((r, c), v) in field.coeffs().indexed_iter() {
        let k2 = {
            let kx = grid.wavenumber(c);
            let ky = grid.wavenumber(r);
            kx * kx + ky * ky
        };
        let p = v.norm_sqr();
        sum_sq += p;
        sum_grad_sq += k2 * p;
    }
    let l2 = (area * sum_sq).sqrt();
    let h1 = (area * (sum_sq + sum_grad_sq)).sqrt();

    let phys = field.to_physical();
    let cell = grid.cell_area();
    let mut l1 = 0.0;
    let mut linf = 0.0_f64;
    for v in phys.iter() {
        l1 += v.abs();
        linf = linf.max(v.abs());
    }
    FieldNorms {
        l2,
        h1,
        l1: l1 * cell,
        linf,
        mass: area * field.mean(),
    }
}

/// `||f||_{L^2}^2` computed spectrally.
pub fn l2_sq(field: &SpectralScalarField) -> f64 {
    field.grid().area() * field.coeffs().iter().map(Complex64::norm_sqr).sum::<f64>()
}

/// `||grad f||_{L^2}^2` computed spectrally.
pub fn grad_sq(field: &SpectralScalarField) -> f64 {
    let grid = field.grid();
    let mut sum = 0.0;
    for ((r, c), v) in field.coeffs().indexed_iter() {
        let kx = grid.wavenumber(c);
        let ky = grid.wavenumber(r);
        sum += (kx * kx + ky * ky) * v.norm_sqr();
    }
    grid.area() * sum
}

/// `||Δf||_{L^2}^2` computed spectrally.
pub fn laplacian_sq(field: &SpectralScalarField) -> f64 {
    let grid = field.grid();
    let mut sum = 0.0;
    for ((r, c), v) in field.coeffs().indexed_iter() {
        let kx = grid.wavenumber(c);
        let ky = grid.wavenumber(r);
        let k2 = kx * kx + ky * ky;
        sum += k2 * k2 * v.norm_sqr();
    }
    grid.area() * sum
}

/// `L^2` inner product of two scalar fields (spectral).
pub fn inner(a: &SpectralScalarField, b: &SpectralScalarField) -> f64 {
    debug_assert_eq!(a.grid().as_ref(), b.grid().as_ref());
    let sum: f64 = a
        .coeffs()
        .iter()
        .zip(b.coeffs().iter())
        .map(|(x, y)| (x * y.conj()).re)
        .sum();
    a.grid().area() * sum
}

/// Kinetic energy `||u||_H^2 = ||u||_{L^2}^2` of a velocity field.
pub fn energy(u: &SolenoidalVelocityField) -> f64 {
    let sum: f64 = u
        .coeffs_x()
        .iter()
        .chain(u.coeffs_y().iter())
        .map(Complex64::norm_sqr)
        .sum();
    u.grid().area() * sum
}

/// Enstrophy-type norm `||grad u||_{L^2}^2` of a velocity field.
pub fn velocity_grad_sq(u: &SolenoidalVelocityField) -> f64 {
    let grid = u.grid();
    let mut sum = 0.0;
    for comp in [u.coeffs_x(), u.coeffs_y()] {
        for ((r, c), v) in comp.indexed_iter() {
            let kx = grid.wavenumber(c);
            let ky = grid.wavenumber(r);
            sum += (kx * kx + ky * ky) * v.norm_sqr();
        }
    }
    grid.area() * sum
}

/// `H` inner product of two velocity fields.
pub fn velocity_inner(a: &SolenoidalVelocityField, b: &SolenoidalVelocityField) -> f64 {
    debug_assert_eq!(a.grid().as_ref(), b.grid().as_ref());
    let sum: f64 = a
        .coeffs_x()
        .iter()
        .zip(b.coeffs_x().iter())
        .chain(a.coeffs_y().iter().zip(b.coeffs_y().iter()))
        .map(|(x, y)| (x * y.conj()).re)
        .sum();
    a.grid().area() * sum
}

/// Minimum of the field over the physical grid.
pub fn grid_min(field: &SpectralScalarField) -> f64 {
    field
        .to_physical()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Quadrature `sum_ij w(i,j) * cell_area` of a physical-grid integrand.
pub fn quadrature(field: &SpectralScalarField, values: &Array2<f64>) -> f64 {
    field.grid().cell_area() * values.iter().sum::<f64>()
}

/// Gradient of a scalar returned on the physical grid.
pub fn physical_gradient(field: &SpectralScalarField) -> (Array2<f64>, Array2<f64>) {
    (
        field.derivative(Axis2::X).to_physical(),
        field.derivative(Axis2::Y).to_physical(),
    )
}
