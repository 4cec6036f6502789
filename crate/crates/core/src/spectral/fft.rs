//! Planned 2D complex FFTs on an `N x N` grid.
//!
//! The forward transform carries the mean-preserving normalization
//! `1/N^2`, so `coeff[[0, 0]]` of a forward transform equals the spatial
//! mean of the input. The inverse transform is the plain unnormalized
//! synthesis sum; round trips are identities up to roundoff.

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Cached forward/inverse FFT plans for one grid size.
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// In-place 2D FFT along rows then columns of a flat row-major buffer.
    fn transform_2d(&self, data: &mut Array2<Complex64>, plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        // Rows are contiguous in standard layout; rustfft processes the
        // buffer as consecutive length-n transforms.
        plan.process(data.as_slice_mut().expect("contiguous row-major array"));
        let mut transposed = data.t().as_standard_layout().into_owned();
        plan.process(
            transposed
                .as_slice_mut()
                .expect("contiguous row-major array"),
        );
        data.assign(&transposed.t());
        debug_assert_eq!(data.dim(), (n, n));
    }

    /// Physical real grid -> normalized complex spectrum.
    pub fn forward(&self, physical: &Array2<f64>) -> Array2<Complex64> {
        let mut buf = physical.mapv(|v| Complex64::new(v, 0.0));
        self.transform_2d(&mut buf, &self.forward);
        let scale = 1.0 / (self.n * self.n) as f64;
        buf.mapv_inplace(|v| v * scale);
        buf
    }

    /// Normalized complex spectrum -> physical grid, discarding the
    /// imaginary residue (tracked separately by callers that need it).
    pub fn inverse(&self, spectrum: &Array2<Complex64>) -> Array2<f64> {
        let mut buf = spectrum.clone();
        self.transform_2d(&mut buf, &self.inverse);
        buf.mapv(|v| v.re)
    }

    /// Inverse transform returning the maximum absolute imaginary residue
    /// alongside the real part, for reality checks.
    pub fn inverse_with_residue(&self, spectrum: &Array2<Complex64>) -> (Array2<f64>, f64) {
        let mut buf = spectrum.clone();
        self.transform_2d(&mut buf, &self.inverse);
        let mut residue = 0.0_f64;
        let real = buf.mapv(|v| {
            residue = residue.max(v.im.abs());
            v.re
        });
        (real, residue)
    }
}
