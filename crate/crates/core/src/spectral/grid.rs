//! The periodic torus grid and its wavenumber bookkeeping.

use super::fft::Fft2;
use crate::{CnsError, Result};
use std::sync::Arc;

/// Discretization of the torus `[0, L]^2`.
///
/// Fields are sampled on `N x N` equispaced points and represented by
/// Fourier coefficients truncated to `|k|_inf <= m` (in integer wavenumber
/// units; the physical wavenumber is `2*pi/L` times the integer). The `k = 0`
/// mode stores the spatial mean.
#[derive(Debug)]
pub struct TorusGrid {
    length: f64,
    points: usize,
    cutoff: usize,
    dealias_rule: f64,
    fft: Fft2,
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.length == other.length
            && self.points == other.points
            && self.cutoff == other.cutoff
            && self.dealias_rule == other.dealias_rule
    }
}

impl TorusGrid {
    /// Default dealiasing fraction (the 2/3 rule).
    pub const DEFAULT_DEALIAS_RULE: f64 = 2.0 / 3.0;

    /// Build a grid with the default 2/3 dealiasing rule.
    pub fn new(length: f64, points: usize, cutoff: usize) -> Result<Arc<Self>> {
        Self::with_dealias_rule(length, points, cutoff, Self::DEFAULT_DEALIAS_RULE)
    }

    pub fn with_dealias_rule(
        length: f64,
        points: usize,
        cutoff: usize,
        dealias_rule: f64,
    ) -> Result<Arc<Self>> {
        if !(length.is_finite() && length > 0.0) {
            return Err(CnsError::InvalidGrid(format!(
                "side length must be positive, got {length}"
            )));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(CnsError::InvalidGrid(format!(
                "points per axis must be a power of two >= 4, got {points}"
            )));
        }
        if cutoff == 0 || cutoff > points / 2 - 1 {
            return Err(CnsError::InvalidGrid(format!(
                "cutoff m = {cutoff} must satisfy 1 <= m <= N/2 - 1 = {}",
                points / 2 - 1
            )));
        }
        if !(0.0 < dealias_rule && dealias_rule <= 1.0) {
            return Err(CnsError::InvalidGrid(format!(
                "dealias rule must lie in (0, 1], got {dealias_rule}"
            )));
        }
        let dealias_cutoff = (dealias_rule * (points / 2) as f64).floor() as usize;
        if cutoff > dealias_cutoff {
            // Quadratic products would alias back into the retained band.
            return Err(CnsError::InvalidGrid(format!(
                "cutoff m = {cutoff} exceeds the dealias cutoff {dealias_cutoff} \
                 (= floor({dealias_rule:.4} * N/2) with N = {points}); \
                 nonlinear products would not be alias-free"
            )));
        }
        Ok(Arc::new(Self {
            length,
            points,
            cutoff,
            dealias_rule,
            fft: Fft2::new(points),
        }))
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Physical grid points per axis.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Galerkin cutoff `m`: retained integer wavenumbers satisfy `|k|_inf <= m`.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dealias_rule(&self) -> f64 {
        self.dealias_rule
    }

    /// Largest integer wavenumber kept by the dealiasing rule.
    pub fn dealias_cutoff(&self) -> usize {
        (self.dealias_rule * (self.points / 2) as f64).floor() as usize
    }

    /// Area element of the physical grid, `(L/N)^2`.
    pub fn cell_area(&self) -> f64 {
        let h = self.length / self.points as f64;
        h * h
    }

    /// Total area `L^2`.
    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    /// Integer wavenumber for a storage index (FFT ordering).
    #[inline]
    pub fn wavenumber_int(&self, index: usize) -> i64 {
        let n = self.points as i64;
        let i = index as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Physical wavenumber `2*pi/L * k_int` for a storage index.
    #[inline]
    pub fn wavenumber(&self, index: usize) -> f64 {
        2.0 * std::f64::consts::PI / self.length * self.wavenumber_int(index) as f64
    }

    /// Whether the mode at `(row, col)` lies inside the Galerkin range.
    #[inline]
    pub fn retained(&self, row: usize, col: usize) -> bool {
        let m = self.cutoff as i64;
        self.wavenumber_int(row).abs() <= m && self.wavenumber_int(col).abs() <= m
    }

    /// Physical coordinate of grid node `index` along one axis.
    #[inline]
    pub fn coordinate(&self, index: usize) -> f64 {
        self.length * index as f64 / self.points as f64
    }

    pub(crate) fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// Error unless the two grids have identical parameters.
    pub fn check_same(&self, other: &TorusGrid, context: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(CnsError::GridMismatch(format!(
                "{context}: ({}, N={}, m={}) vs ({}, N={}, m={})",
                self.length, self.points, self.cutoff, other.length, other.points, other.cutoff
            )))
        }
    }
}
