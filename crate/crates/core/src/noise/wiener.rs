//! Truncated cylindrical Wiener forcing of gradient type.
//!
//! The operator acts mode-wise: the `i`-th scalar Wiener increment `dW_i`
//! forces the velocity by `sigma * (b_i(x)·grad u + c_i(x) u) dW_i`, followed
//! by the Leray projection. The noise is multiplicative and vanishes at
//! `u = 0`.

use crate::spectral::{Axis2, SolenoidalVelocityField, SpectralScalarField, TorusGrid};
use crate::{CnsError, Result};
use ndarray::Array2;
use std::sync::Arc;

/// One Wiener direction: a vector coefficient `b` and a scalar coefficient `c`.
#[derive(Debug, Clone)]
pub struct WienerMode {
    pub b_x: Array2<f64>,
    pub b_y: Array2<f64>,
    pub c: Array2<f64>,
}

impl WienerMode {
    fn linf_sq(&self) -> (f64, f64) {
        let b = self
            .b_x
            .iter()
            .zip(self.b_y.iter())
            .map(|(x, y)| x * x + y * y)
            .fold(0.0_f64, f64::max);
        let c = self.c.iter().map(|v| v * v).fold(0.0_f64, f64::max);
        (b, c)
    }
}

/// Configuration of the truncated Wiener driver.
#[derive(Debug, Clone)]
pub struct WienerDriverConfig {
    grid: Arc<TorusGrid>,
    amplitude: f64,
    modes: Vec<WienerMode>,
    /// `sum_i (||b_i||_inf^2 + ||c_i||_inf^2)`, needed finite by (the
    /// summability behind) the growth bound.
    sum_linf_sq: f64,
}

impl WienerDriverConfig {
    pub fn new(grid: Arc<TorusGrid>, amplitude: f64, modes: Vec<WienerMode>) -> Result<Self> {
        let n = grid.points();
        let mut sum = 0.0;
        for (i, mode) in modes.iter().enumerate() {
            for arr in [&mode.b_x, &mode.b_y, &mode.c] {
                if arr.dim() != (n, n) {
                    return Err(CnsError::DimensionMismatch {
                        expected: n,
                        got_rows: arr.dim().0,
                        got_cols: arr.dim().1,
                    });
                }
                if arr.iter().any(|v| !v.is_finite()) {
                    return Err(CnsError::InvalidParameter {
                        name: "wiener mode",
                        message: format!("mode {i} contains non-finite values"),
                    });
                }
            }
            let (b, c) = mode.linf_sq();
            sum += b + c;
        }
        if !sum.is_finite() {
            return Err(CnsError::InvalidParameter {
                name: "wiener modes",
                message: "coefficient sup-norms must be summable".into(),
            });
        }
        Ok(Self {
            grid,
            amplitude,
            modes,
            sum_linf_sq: sum,
        })
    }

    /// Driver with no Wiener forcing.
    pub fn off(grid: Arc<TorusGrid>) -> Self {
        Self {
            grid,
            amplitude: 0.0,
            modes: Vec::new(),
            sum_linf_sq: 0.0,
        }
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn modes(&self) -> &[WienerMode] {
        &self.modes
    }

    pub fn sum_linf_sq(&self) -> f64 {
        self.sum_linf_sq
    }

    /// Gradient-free part of the growth constant:
    /// `sigma^2 * sum_i ||c_i||_inf^2`. Used as the default `C_0` when
    /// estimating the gradient coefficient `lambda_0` empirically.
    pub fn gradient_free_constant(&self) -> f64 {
        let c_sum: f64 = self
            .modes
            .iter()
            .map(|m| m.c.iter().map(|v| v * v).fold(0.0_f64, f64::max))
            .sum();
        self.amplitude * self.amplitude * c_sum
    }

    /// Apply one Wiener direction to `u`: `sigma * (b_i·grad u + c_i u)`,
    /// Leray-projected. Linear in `u`.
    pub fn apply_mode(
        &self,
        u: &SolenoidalVelocityField,
        index: usize,
    ) -> Result<SolenoidalVelocityField> {
        let mut one_hot = vec![0.0; self.modes.len()];
        one_hot[index] = 1.0;
        self.apply_gaussian(u, &one_hot)
    }

    /// Apply the full Gaussian increment
    /// `P sum_i sigma (b_i·grad u + c_i u) dW_i`.
    ///
    /// The sum over modes is accumulated on the physical grid before the
    /// single transform back, which keeps the cost independent of the mode
    /// count and the result exactly linear in the increments.
    pub fn apply_gaussian(
        &self,
        u: &SolenoidalVelocityField,
        dw: &[f64],
    ) -> Result<SolenoidalVelocityField> {
        self.grid.check_same(u.grid(), "apply_gaussian")?;
        if dw.len() != self.modes.len() {
            return Err(CnsError::InvalidParameter {
                name: "dw",
                message: format!(
                    "increment has {} entries but the driver has {} modes",
                    dw.len(),
                    self.modes.len()
                ),
            });
        }
        if self.modes.is_empty() || self.amplitude == 0.0 {
            return Ok(SolenoidalVelocityField::zero(self.grid.clone()));
        }
        let n = self.grid.points();
        let mut sx = Array2::<f64>::zeros((n, n));
        let mut sy = Array2::<f64>::zeros((n, n));
        let mut r = Array2::<f64>::zeros((n, n));
        for (mode, w) in self.modes.iter().zip(dw.iter()) {
            sx.zip_mut_with(&mode.b_x, |a, b| *a += w * b);
            sy.zip_mut_with(&mode.b_y, |a, b| *a += w * b);
            r.zip_mut_with(&mode.c, |a, b| *a += w * b);
        }
        let (ux, uy) = u.to_physical();
        let dux_dx = u.component(Axis2::X).derivative(Axis2::X).to_physical();
        let dux_dy = u.component(Axis2::X).derivative(Axis2::Y).to_physical();
        let duy_dx = u.component(Axis2::Y).derivative(Axis2::X).to_physical();
        let duy_dy = u.component(Axis2::Y).derivative(Axis2::Y).to_physical();
        let vx = self.amplitude * (&sx * &dux_dx + &sy * &dux_dy + &r * &ux);
        let vy = self.amplitude * (&sx * &duy_dx + &sy * &duy_dy + &r * &uy);
        let fx = SpectralScalarField::from_physical(self.grid.clone(), &vx)?;
        let fy = SpectralScalarField::from_physical(self.grid.clone(), &vy)?;
        SolenoidalVelocityField::leray_project(&fx, &fy)
    }

    /// Hilbert-Schmidt norm of the (projected, truncated) noise operator at
    /// `u`: `sum_i ||P sigma (b_i·grad u + c_i u)||_H^2`.
    pub fn hilbert_schmidt_sq(&self, u: &SolenoidalVelocityField) -> Result<f64> {
        let mut sum = 0.0;
        for i in 0..self.modes.len() {
            let v = self.apply_mode(u, i)?;
            sum += crate::spectral::energy(&v);
        }
        Ok(sum)
    }
}
