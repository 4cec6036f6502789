//! Entropy-type integrals of the density and chemoattractant fields.
//!
//! The entropy of `n` is evaluated as `∫ (n+1) ln(n+1) dx`, which is
//! two-sidedly equivalent to the `L^1 ∩ L log L` norm for nonnegative `n`.
//! Square roots of `c` are floored at a small epsilon before evaluation:
//! the exact Galerkin flow keeps `c > 0`, but the spectral truncation can
//! undershoot zero, and those violations are reported rather than hidden.

use super::field::SpectralScalarField;
use super::norms::quadrature;
use ndarray::Array2;
use serde::Serialize;

/// Floor applied to `c` (and to `n + 1`) inside square roots.
pub const EPS_SQRT_FLOOR: f64 = 1e-12;

/// Entropy integrals of a `(n, c)` pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EntropyIntegrals {
    /// `∫ (n+1) ln(n+1) dx` over grid points with `n > -1`.
    pub phi_n: f64,
    /// `||grad sqrt(c)||_{L^2}^2`, with `c` floored inside the root.
    pub grad_sqrt_c_sq: f64,
    /// `∫ n |grad sqrt(c)|^2 dx` (the chemotaxis cross term).
    pub cross_term: f64,
    /// Grid points where `n <= -1` (excluded from `phi_n`).
    pub n_below_minus_one: usize,
    /// Grid points where `c <  EPS_SQRT_FLOOR` (clamped in the root).
    pub c_below_floor: usize,
    /// Most negative `c` observed (0 if none negative).
    pub worst_c_violation: f64,
}

/// Evaluate the entropy integrals of `n` and `c`.
///
/// `grad sqrt(c)` is computed by transforming `sqrt(max(c, eps))` and
/// differentiating spectrally on the full grid (no Galerkin truncation:
/// the square root is not band-limited and this is a quadrature choice,
/// not a state change).
pub fn entropy_integrals(
    n: &SpectralScalarField,
    c: &SpectralScalarField,
    eps: f64,
) -> EntropyIntegrals {
    debug_assert_eq!(n.grid().as_ref(), c.grid().as_ref());
    let n_phys = n.to_physical();
    let c_phys = c.to_physical();

    let mut phi = 0.0;
    let mut below = 0usize;
    for v in n_phys.iter() {
        if *v > -1.0 {
            phi += (v + 1.0) * (v + 1.0).ln();
        } else {
            below += 1;
        }
    }
    let phi_n = phi * n.grid().cell_area();

    let (gx, gy, c_below_floor, worst) = sqrt_c_gradient(c, &c_phys, eps);
    let grad_sq_point = Array2::from_shape_fn(gx.dim(), |idx| {
        gx[idx] * gx[idx] + gy[idx] * gy[idx]
    });
    let grad_sqrt_c_sq = quadrature(c, &grad_sq_point);
    let cross_point = &grad_sq_point * &n_phys;
    let cross_term = quadrature(c, &cross_point);

    EntropyIntegrals {
        phi_n,
        grad_sqrt_c_sq,
        cross_term,
        n_below_minus_one: below,
        c_below_floor,
        worst_c_violation: worst,
    }
}

/// Physical-grid gradient of `sqrt(max(c, eps))`, plus violation stats.
pub fn sqrt_c_gradient(
    c: &SpectralScalarField,
    c_phys: &Array2<f64>,
    eps: f64,
) -> (Array2<f64>, Array2<f64>, usize, f64) {
    let mut below = 0usize;
    let mut worst = 0.0_f64;
    let sqrt_phys = c_phys.mapv(|v| {
        if v < eps {
            below += 1;
            worst = worst.min(v);
        }
        v.max(eps).sqrt()
    });
    let root = full_spectrum(c, &sqrt_phys);
    let gx = root.derivative(super::field::Axis2::X).to_physical();
    let gy = root.derivative(super::field::Axis2::Y).to_physical();
    (gx, gy, below, worst)
}

/// Transform without Galerkin truncation, used only for diagnostic
/// derivatives of pointwise nonlinear functions of the state.
pub fn full_spectrum(reference: &SpectralScalarField, physical: &Array2<f64>) -> SpectralScalarField {
    let grid = reference.grid().clone();
    let coeffs = grid.fft().forward(physical);
    SpectralScalarField::from_raw_full(grid, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn zero_density_zero_entropy() {
        let g = TorusGrid::new(2.0 * PI, 32, 10).unwrap();
        let n = SpectralScalarField::zero(g.clone());
        let c = SpectralScalarField::from_fn(g, |_, _| 1.0);
        let e = entropy_integrals(&n, &c, EPS_SQRT_FLOOR);
        assert!(e.phi_n.abs() < 1e-12);
        assert!(e.grad_sqrt_c_sq < 1e-12);
        assert_eq!(e.n_below_minus_one, 0);
    }

    #[test]
    fn unit_density_closed_form() {
        // n = 1 on the 2pi torus: phi_n = 2 ln 2 * L^2 = 8 pi^2 ln 2.
        let g = TorusGrid::new(2.0 * PI, 32, 10).unwrap();
        let n = SpectralScalarField::from_fn(g.clone(), |_, _| 1.0);
        let c = SpectralScalarField::from_fn(g, |_, _| 1.0);
        let e = entropy_integrals(&n, &c, EPS_SQRT_FLOOR);
        let expected = 8.0 * PI * PI * 2.0_f64.ln();
        assert_relative_eq!(e.phi_n, expected, max_relative = 1e-12);
    }

    #[test]
    fn constant_c_no_gradient() {
        let g = TorusGrid::new(2.0 * PI, 32, 10).unwrap();
        let n = SpectralScalarField::from_fn(g.clone(), |x, _| 1.0 + 0.5 * x.cos());
        let c = SpectralScalarField::from_fn(g, |_, _| 0.7);
        let e = entropy_integrals(&n, &c, EPS_SQRT_FLOOR);
        assert!(e.grad_sqrt_c_sq < 1e-20);
        assert!(e.cross_term.abs() < 1e-20);
    }

    #[test]
    fn negative_cells_are_counted_not_fatal() {
        let g = TorusGrid::new(2.0 * PI, 32, 10).unwrap();
        let n = SpectralScalarField::from_fn(g.clone(), |x, _| -1.5 + 0.1 * x.cos());
        let c = SpectralScalarField::from_fn(g, |x, _| -0.5 + 0.1 * x.sin());
        let e = entropy_integrals(&n, &c, EPS_SQRT_FLOOR);
        assert!(e.n_below_minus_one > 0);
        assert!(e.c_below_floor > 0);
        assert!(e.worst_c_violation < 0.0);
        assert!(e.phi_n.is_finite());
        assert!(e.grad_sqrt_c_sq.is_finite());
    }
}
