//! Named analytic presets for initial data, potentials and noise
//! coefficient fields.
//!
//! Everything here is an analytic function sampled on the grid, so the same
//! preset evaluated at different Galerkin cutoffs or resolutions describes
//! the same continuum datum — which is what makes noise-coupled convergence
//! studies meaningful.

use crate::config::{InitialSection, PotentialSection, WienerSection};
use anyhow::{bail, Result};
use cns_core::dynamics::PotentialField;
use cns_core::integrator::InitialData;
use cns_core::noise::{WienerDriverConfig, WienerMode};
use cns_core::spectral::{SpectralScalarField, TorusGrid};
use ndarray::Array2;
use std::f64::consts::PI;
use std::sync::Arc;

fn sample(grid: &Arc<TorusGrid>, f: impl Fn(f64, f64) -> f64) -> Array2<f64> {
    let n = grid.points();
    Array2::from_shape_fn((n, n), |(i, j)| f(grid.coordinate(j), grid.coordinate(i)))
}

/// Periodic bump `floor + amp * exp(kappa (cos(qx - qx0) + cos(qy - qy0) - 2))`
/// with `q = 2 pi / L`; analytic and strictly positive.
fn periodic_bump(grid: &Arc<TorusGrid>, floor: f64, amp: f64, kappa: f64) -> Array2<f64> {
    let length = grid.length();
    let q = 2.0 * PI / length;
    let (x0, y0) = (length / 2.0, length / 2.0);
    sample(grid, move |x, y| {
        floor + amp * (kappa * ((q * (x - x0)).cos() + (q * (y - y0)).cos() - 2.0)).exp()
    })
}

fn taylor_green(grid: &Arc<TorusGrid>, amp: f64) -> (Array2<f64>, Array2<f64>) {
    let q = 2.0 * PI / grid.length();
    (
        sample(grid, move |x, y| amp * (q * x).sin() * (q * y).cos()),
        sample(grid, move |x, y| -amp * (q * x).cos() * (q * y).sin()),
    )
}

/// Build initial data from a named preset.
pub fn initial_data(grid: &Arc<TorusGrid>, section: &InitialSection) -> Result<InitialData> {
    let n = grid.points();
    let zeros = || Array2::zeros((n, n));
    match section.preset.as_str() {
        // Reference configuration: gentle bump over a weak Taylor-Green
        // vortex, unit chemoattractant.
        "small-data" => {
            let (u0_x, u0_y) = taylor_green(grid, section.velocity_amplitude.unwrap_or(0.2));
            Ok(InitialData {
                n0: periodic_bump(
                    grid,
                    section.n_floor.unwrap_or(0.1),
                    section.bump_amplitude.unwrap_or(0.8),
                    section.bump_concentration.unwrap_or(2.0),
                ),
                c0: sample(grid, |_, _| section.c_level.unwrap_or(1.0)),
                u0_x,
                u0_y,
            })
        }
        // Stronger bump dropped into a faster vortex.
        "bump-into-fluid" => {
            let (u0_x, u0_y) = taylor_green(grid, section.velocity_amplitude.unwrap_or(0.5));
            Ok(InitialData {
                n0: periodic_bump(
                    grid,
                    section.n_floor.unwrap_or(0.1),
                    section.bump_amplitude.unwrap_or(2.0),
                    section.bump_concentration.unwrap_or(3.0),
                ),
                c0: sample(grid, |_, _| section.c_level.unwrap_or(1.0)),
                u0_x,
                u0_y,
            })
        }
        // Spatially uniform state (exact solutions: consumption decay).
        "uniform" => Ok(InitialData {
            n0: sample(grid, |_, _| section.n_floor.unwrap_or(1.0)),
            c0: sample(grid, |_, _| section.c_level.unwrap_or(1.0)),
            u0_x: zeros(),
            u0_y: zeros(),
        }),
        // The trivial equilibrium (plumbing checks).
        "zero" => Ok(InitialData {
            n0: zeros(),
            c0: zeros(),
            u0_x: zeros(),
            u0_y: zeros(),
        }),
        other => bail!("initial.preset: unknown preset `{other}`"),
    }
}

/// Build the gravitational potential from its config section.
pub fn potential(grid: &Arc<TorusGrid>, section: &PotentialSection) -> Result<PotentialField> {
    match section.kind.as_str() {
        "sine-y" => Ok(PotentialField::default_sine(
            grid.clone(),
            section.amplitude,
        )),
        "constant" => Ok(PotentialField::new(SpectralScalarField::from_fn(
            grid.clone(),
            move |_, _| section.amplitude,
        ))?),
        other => bail!("potential.kind: unknown kind `{other}`"),
    }
}

/// Smooth bounded waves used as noise coefficient fields. Mode `i` gets a
/// `1/(i+1)` decay so the sup-norm sum converges as the count grows.
fn wave(grid: &Arc<TorusGrid>, index: usize) -> Array2<f64> {
    let q = 2.0 * PI / grid.length();
    let decay = 1.0 / (index as f64 + 1.0);
    match index % 4 {
        0 => sample(grid, move |_, _| decay),
        1 => sample(grid, move |x, _| decay * (q * x).cos()),
        2 => sample(grid, move |_, y| decay * (q * y).sin()),
        _ => sample(grid, move |x, y| decay * (q * (x + y)).cos()),
    }
}

/// Build the Wiener driver from its config section.
pub fn wiener_driver(grid: &Arc<TorusGrid>, section: &WienerSection) -> Result<WienerDriverConfig> {
    let n = grid.points();
    if section.modes == 0 || section.amplitude == 0.0 {
        return Ok(WienerDriverConfig::off(grid.clone()));
    }
    let modes: Vec<WienerMode> = (0..section.modes)
        .map(|i| {
            let c = wave(grid, i);
            let (b_x, b_y) = match section.kind.as_str() {
                // Pure multiplication noise: no gradient dependence.
                "c-waves" => (Array2::zeros((n, n)), Array2::zeros((n, n))),
                // Gradient-type noise b_i . grad u + c_i u.
                "gradient-waves" => {
                    let scale = section.gradient_scale;
                    let q = 2.0 * PI / grid.length();
                    let decay = scale / (i as f64 + 1.0);
                    (
                        sample(grid, move |x, _| decay * (q * x + i as f64).sin()),
                        sample(grid, move |_, y| decay * (q * y).cos()),
                    )
                }
                other => {
                    return Err(anyhow::anyhow!("wiener.kind: unknown kind `{other}`"));
                }
            };
            Ok(WienerMode { b_x, b_y, c })
        })
        .collect::<Result<_>>()?;
    Ok(WienerDriverConfig::new(
        grid.clone(),
        section.amplitude,
        modes,
    )?)
}
