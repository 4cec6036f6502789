//! Truncated-Fourier scalar and solenoidal vector fields.

use super::grid::TorusGrid;
use crate::{CnsError, Result};
use ndarray::Array2;
use num_complex::Complex64;
use std::sync::Arc;

/// Real scalar field stored as truncated Fourier coefficients.
///
/// Invariants maintained by every constructor and operation:
/// * conjugate symmetry `coeff(-k) = conj(coeff(k))` (the field is real),
/// * all modes with `|k|_inf > m` are identically zero.
#[derive(Debug, Clone)]
pub struct SpectralScalarField {
    grid: Arc<TorusGrid>,
    coeffs: Array2<Complex64>,
}

impl SpectralScalarField {
    /// The zero field.
    pub fn zero(grid: Arc<TorusGrid>) -> Self {
        let n = grid.points();
        Self {
            grid,
            coeffs: Array2::zeros((n, n)),
        }
    }

    /// Forward transform of an `N x N` physical array; applies the
    /// Galerkin projection `P_m` and exact symmetrization.
    pub fn from_physical(grid: Arc<TorusGrid>, physical: &Array2<f64>) -> Result<Self> {
        let n = grid.points();
        let (rows, cols) = physical.dim();
        if rows != n || cols != n {
            return Err(CnsError::DimensionMismatch {
                expected: n,
                got_rows: rows,
                got_cols: cols,
            });
        }
        let mut coeffs = grid.fft().forward(physical);
        truncate(&grid, &mut coeffs);
        symmetrize(&mut coeffs);
        Ok(Self { grid, coeffs })
    }

    /// Sample an analytic function on the grid and transform it.
    pub fn from_fn(grid: Arc<TorusGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.points();
        let phys = Array2::from_shape_fn((n, n), |(i, j)| f(grid.coordinate(j), grid.coordinate(i)));
        Self::from_physical(grid, &phys).expect("shape is correct by construction")
    }

    /// Build a field from raw mode coefficients in FFT index order; the
    /// Galerkin projection and exact symmetrization are applied.
    pub fn from_spectrum(grid: Arc<TorusGrid>, mut coeffs: Array2<Complex64>) -> Result<Self> {
        let n = grid.points();
        if coeffs.dim() != (n, n) {
            return Err(CnsError::DimensionMismatch {
                expected: n,
                got_rows: coeffs.dim().0,
                got_cols: coeffs.dim().1,
            });
        }
        truncate(&grid, &mut coeffs);
        symmetrize(&mut coeffs);
        Ok(Self { grid, coeffs })
    }

    /// Wrap raw coefficients keeping the full spectrum (no `P_m`).
    ///
    /// Only for diagnostic quadratures of nonlinear functions of the state;
    /// dynamical fields always go through the Galerkin projection.
    pub(crate) fn from_raw_full(grid: Arc<TorusGrid>, mut coeffs: Array2<Complex64>) -> Self {
        symmetrize(&mut coeffs);
        Self { grid, coeffs }
    }

    /// Wrap coefficients verbatim (checkpoint restore: bit-exactness beats
    /// re-enforcing invariants that already hold).
    pub(crate) fn from_raw_verbatim(grid: Arc<TorusGrid>, coeffs: Array2<Complex64>) -> Self {
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn coeffs(&self) -> &Array2<Complex64> {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.coeffs
    }

    /// Inverse transform to the physical grid.
    pub fn to_physical(&self) -> Array2<f64> {
        self.grid.fft().inverse(&self.coeffs)
    }

    /// Inverse transform plus the maximum imaginary residue (reality check).
    pub fn to_physical_with_residue(&self) -> (Array2<f64>, f64) {
        self.grid.fft().inverse_with_residue(&self.coeffs)
    }

    /// Spatial mean, `coeff(0)`.
    pub fn mean(&self) -> f64 {
        self.coeffs[[0, 0]].re
    }

    /// Galerkin projection to a (weakly) smaller cutoff.
    ///
    /// Idempotent, orthogonal, `L^2`-non-increasing.
    pub fn galerkin_project(&self, new_cutoff: usize) -> Result<Self> {
        if new_cutoff > self.grid.cutoff() {
            return Err(CnsError::CutoffExceeded {
                requested: new_cutoff,
                stored: self.grid.cutoff(),
            });
        }
        let mut out = self.clone();
        let m = new_cutoff as i64;
        for ((r, c), v) in out.coeffs.indexed_iter_mut() {
            if self.grid.wavenumber_int(r).abs() > m || self.grid.wavenumber_int(c).abs() > m {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        Ok(out)
    }

    /// Spectral partial derivative along `x` (axis of columns) or `y`.
    pub fn derivative(&self, axis: Axis2) -> Self {
        let mut coeffs = self.coeffs.clone();
        for ((r, c), v) in coeffs.indexed_iter_mut() {
            let k = match axis {
                Axis2::X => self.grid.wavenumber(c),
                Axis2::Y => self.grid.wavenumber(r),
            };
            *v *= Complex64::new(0.0, k);
        }
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    /// Spectral Laplacian.
    pub fn laplacian(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        for ((r, c), v) in coeffs.indexed_iter_mut() {
            let kx = self.grid.wavenumber(c);
            let ky = self.grid.wavenumber(r);
            *v *= -(kx * kx + ky * ky);
        }
        Self {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.coeffs.mapv_inplace(|v| v * factor);
    }

    pub fn add_scaled(&mut self, other: &Self, factor: f64) {
        debug_assert_eq!(self.grid.as_ref(), other.grid.as_ref());
        self.coeffs.zip_mut_with(&other.coeffs, |a, b| {
            *a += b * factor;
        });
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Axis selector for derivatives; `X` varies along columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis2 {
    X,
    Y,
}

/// Two-component velocity field constrained to zero spectral divergence.
#[derive(Debug, Clone)]
pub struct SolenoidalVelocityField {
    grid: Arc<TorusGrid>,
    x: Array2<Complex64>,
    y: Array2<Complex64>,
}

impl SolenoidalVelocityField {
    pub fn zero(grid: Arc<TorusGrid>) -> Self {
        let n = grid.points();
        Self {
            grid,
            x: Array2::zeros((n, n)),
            y: Array2::zeros((n, n)),
        }
    }

    /// Leray-project a pair of scalar fields into the solenoidal space.
    ///
    /// Per retained mode `k != 0`: `u_hat <- u_hat - k (k·u_hat)/|k|^2`.
    /// The `k = 0` mode (mean flow) passes through unchanged.
    pub fn leray_project(raw_x: &SpectralScalarField, raw_y: &SpectralScalarField) -> Result<Self> {
        raw_x
            .grid()
            .check_same(raw_y.grid(), "leray_project components")?;
        let grid = raw_x.grid().clone();
        let mut out = Self {
            grid,
            x: raw_x.coeffs().clone(),
            y: raw_y.coeffs().clone(),
        };
        out.reproject();
        Ok(out)
    }

    /// Sample analytic components, project to the cutoff, then Leray-project.
    pub fn from_fns(
        grid: Arc<TorusGrid>,
        fx: impl Fn(f64, f64) -> f64,
        fy: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let sx = SpectralScalarField::from_fn(grid.clone(), fx);
        let sy = SpectralScalarField::from_fn(grid, fy);
        Self::leray_project(&sx, &sy).expect("components share the grid by construction")
    }

    /// Wrap components verbatim (checkpoint restore).
    pub(crate) fn from_components_raw(
        grid: Arc<TorusGrid>,
        x: Array2<Complex64>,
        y: Array2<Complex64>,
    ) -> Self {
        Self { grid, x, y }
    }

    /// Apply the Leray projector in place (idempotent).
    pub fn reproject(&mut self) {
        let grid = self.grid.clone();
        for r in 0..grid.points() {
            let ky = grid.wavenumber(r);
            for c in 0..grid.points() {
                let kx = grid.wavenumber(c);
                let k2 = kx * kx + ky * ky;
                if k2 == 0.0 {
                    continue;
                }
                let dot = kx * self.x[[r, c]] + ky * self.y[[r, c]];
                let factor = dot / k2;
                self.x[[r, c]] -= kx * factor;
                self.y[[r, c]] -= ky * factor;
            }
        }
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    /// Components viewed as scalar fields (shares the coefficient data).
    pub fn component(&self, axis: Axis2) -> SpectralScalarField {
        let coeffs = match axis {
            Axis2::X => self.x.clone(),
            Axis2::Y => self.y.clone(),
        };
        SpectralScalarField {
            grid: self.grid.clone(),
            coeffs,
        }
    }

    pub fn coeffs_x(&self) -> &Array2<Complex64> {
        &self.x
    }

    pub fn coeffs_y(&self) -> &Array2<Complex64> {
        &self.y
    }

    pub(crate) fn coeffs_mut(&mut self) -> (&mut Array2<Complex64>, &mut Array2<Complex64>) {
        (&mut self.x, &mut self.y)
    }

    pub fn to_physical(&self) -> (Array2<f64>, Array2<f64>) {
        (
            self.grid.fft().inverse(&self.x),
            self.grid.fft().inverse(&self.y),
        )
    }

    /// Largest per-mode divergence `|k·u_hat(k)|` over retained modes.
    pub fn max_mode_divergence(&self) -> f64 {
        let mut max = 0.0_f64;
        for r in 0..self.grid.points() {
            let ky = self.grid.wavenumber(r);
            for c in 0..self.grid.points() {
                let kx = self.grid.wavenumber(c);
                let div = kx * self.x[[r, c]] + ky * self.y[[r, c]];
                max = max.max(div.norm());
            }
        }
        max
    }

    pub fn scale(&mut self, factor: f64) {
        self.x.mapv_inplace(|v| v * factor);
        self.y.mapv_inplace(|v| v * factor);
    }

    pub fn add_scaled(&mut self, other: &Self, factor: f64) {
        debug_assert_eq!(self.grid.as_ref(), other.grid.as_ref());
        self.x.zip_mut_with(&other.x, |a, b| *a += b * factor);
        self.y.zip_mut_with(&other.y, |a, b| *a += b * factor);
    }

    pub fn is_finite(&self) -> bool {
        self.x
            .iter()
            .chain(self.y.iter())
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

/// Zero all modes outside the Galerkin range `|k|_inf <= m`.
pub(crate) fn truncate(grid: &TorusGrid, coeffs: &mut Array2<Complex64>) {
    for ((r, c), v) in coeffs.indexed_iter_mut() {
        if !grid.retained(r, c) {
            *v = Complex64::new(0.0, 0.0);
        }
    }
}

/// Enforce conjugate symmetry exactly: averages `coeff(k)` with
/// `conj(coeff(-k))`, making inverse transforms real to the bit.
pub(crate) fn symmetrize(coeffs: &mut Array2<Complex64>) {
    let n = coeffs.nrows();
    for r in 0..n {
        let rn = if r == 0 { 0 } else { n - r };
        for c in 0..n {
            let cn = if c == 0 { 0 } else { n - c };
            if (r, c) < (rn, cn) {
                let a = coeffs[[r, c]];
                let b = coeffs[[rn, cn]];
                let avg = 0.5 * (a + b.conj());
                coeffs[[r, c]] = avg;
                coeffs[[rn, cn]] = avg.conj();
            } else if (r, c) == (rn, cn) {
                // Self-paired modes must be purely real.
                coeffs[[r, c]] = Complex64::new(coeffs[[r, c]].re, 0.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn grid(n: usize, m: usize) -> Arc<TorusGrid> {
        TorusGrid::new(2.0 * PI, n, m).unwrap()
    }

    #[test]
    fn constant_field_single_mode() {
        let g = grid(32, 10);
        let f = SpectralScalarField::from_fn(g, |_, _| 3.0);
        assert_abs_diff_eq!(f.mean(), 3.0, epsilon = 1e-13);
        let energy_off: f64 = f
            .coeffs()
            .indexed_iter()
            .filter(|((r, c), _)| !(*r == 0 && *c == 0))
            .map(|(_, v)| v.norm())
            .sum();
        assert!(energy_off < 1e-12);
        let phys = f.to_physical();
        for v in phys.iter() {
            assert_abs_diff_eq!(*v, 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cosine_two_modes() {
        let g = grid(64, 20);
        let f = SpectralScalarField::from_fn(g.clone(), |x, _| x.cos());
        let mut nonzero = Vec::new();
        for ((r, c), v) in f.coeffs().indexed_iter() {
            if v.norm() > 1e-12 {
                nonzero.push((g.wavenumber_int(r), g.wavenumber_int(c), *v));
            }
        }
        nonzero.sort_by_key(|(r, c, _)| (*r, *c));
        assert_eq!(nonzero.len(), 2);
        assert_eq!((nonzero[0].0, nonzero[0].1), (0, -1));
        assert_eq!((nonzero[1].0, nonzero[1].1), (0, 1));
        for (_, _, v) in nonzero {
            assert_abs_diff_eq!(v.re, 0.5, epsilon = 1e-13);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn round_trip_random_smooth() {
        let g = grid(64, 21);
        let phys = Array2::from_shape_fn((64, 64), |(i, j)| {
            let x = 2.0 * PI * j as f64 / 64.0;
            let y = 2.0 * PI * i as f64 / 64.0;
            (3.0 * x).sin() * (2.0 * y).cos() + 0.3 * (5.0 * (x + y)).cos() + 1.0
        });
        let f = SpectralScalarField::from_physical(g, &phys).unwrap();
        let back = f.to_physical();
        let scale = phys.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let max_err = phys
            .iter()
            .zip(back.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(max_err / scale <= 1e-12, "relative error {}", max_err / scale);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let g = grid(32, 10);
        let bad = Array2::zeros((16, 16));
        assert!(matches!(
            SpectralScalarField::from_physical(g, &bad),
            Err(CnsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_identity_and_idempotence() {
        let g = grid(64, 20);
        let f = SpectralScalarField::from_fn(g, |x, y| (3.0 * x).cos() + (7.0 * y).sin());
        let same = f.galerkin_project(20).unwrap();
        assert_eq!(f.coeffs(), same.coeffs());
        let once = f.galerkin_project(5).unwrap();
        let twice = once.galerkin_project(5).unwrap();
        assert_eq!(once.coeffs(), twice.coeffs());
        assert!(f.galerkin_project(21).is_err());
    }

    #[test]
    fn gradient_fields_are_annihilated() {
        let g = grid(64, 20);
        let scalar = SpectralScalarField::from_fn(g.clone(), |x, y| (2.0 * x).sin() * y.cos());
        let gx = scalar.derivative(Axis2::X);
        let gy = scalar.derivative(Axis2::Y);
        let projected = SolenoidalVelocityField::leray_project(&gx, &gy).unwrap();
        let residual: f64 = projected
            .coeffs_x()
            .iter()
            .chain(projected.coeffs_y().iter())
            .map(|v| v.norm())
            .fold(0.0_f64, f64::max);
        assert!(residual < 1e-13, "gradient survived Leray: {residual}");
    }

    #[test]
    fn leray_fixes_solenoidal_and_kills_divergence() {
        let g = grid(64, 20);
        // Taylor-Green vortex is already divergence-free.
        let tg = SolenoidalVelocityField::from_fns(
            g.clone(),
            |x, y| x.sin() * y.cos(),
            |x, y| -x.cos() * y.sin(),
        );
        let again = SolenoidalVelocityField::leray_project(
            &tg.component(Axis2::X),
            &tg.component(Axis2::Y),
        )
        .unwrap();
        let diff: f64 = tg
            .coeffs_x()
            .iter()
            .zip(again.coeffs_x().iter())
            .chain(tg.coeffs_y().iter().zip(again.coeffs_y().iter()))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        assert!(diff < 1e-14);

        // Random non-solenoidal input: per-mode divergence after projection.
        let sx = SpectralScalarField::from_fn(g.clone(), |x, y| (3.0 * x + y).sin() + x.cos());
        let sy = SpectralScalarField::from_fn(g, |x, y| (x - 2.0 * y).cos());
        let proj = SolenoidalVelocityField::leray_project(&sx, &sy).unwrap();
        let norm: f64 = proj
            .coeffs_x()
            .iter()
            .chain(proj.coeffs_y().iter())
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(proj.max_mode_divergence() <= 1e-14 * norm.max(1.0));
    }
}
