//! Deterministic right-hand-side operators of the coupled system.
//!
//! All transport terms are evaluated in conservative (divergence) form so
//! that the discrete mass of `n` is constant to roundoff: the `k = 0`
//! coefficient of a spectral divergence is exactly zero. Quadratic products
//! are formed on the physical grid; the Galerkin cutoff `m <= N/3` keeps
//! them alias-free under the 2/3 rule.

use crate::spectral::{
    energy, Axis2, SolenoidalVelocityField, SpectralScalarField, TorusGrid,
};
use crate::{CnsError, Result};
use ndarray::Array2;
use std::sync::Arc;

/// Time-independent gravitational potential with cached gradient data.
#[derive(Debug, Clone)]
pub struct PotentialField {
    phi: SpectralScalarField,
    grad_x: Array2<f64>,
    grad_y: Array2<f64>,
    grad_linf: f64,
}

impl PotentialField {
    pub fn new(phi: SpectralScalarField) -> Result<Self> {
        let grad_x = phi.derivative(Axis2::X).to_physical();
        let grad_y = phi.derivative(Axis2::Y).to_physical();
        let grad_linf = grad_x
            .iter()
            .zip(grad_y.iter())
            .map(|(a, b)| (a * a + b * b).sqrt())
            .fold(0.0_f64, f64::max);
        if !grad_linf.is_finite() {
            return Err(CnsError::InvalidParameter {
                name: "phi",
                message: "potential gradient is not finite".into(),
            });
        }
        Ok(Self {
            phi,
            grad_x,
            grad_y,
            grad_linf,
        })
    }

    /// Default potential `phi(x, y) = sin(2 pi y / L)`.
    pub fn default_sine(grid: Arc<TorusGrid>, amplitude: f64) -> Self {
        let length = grid.length();
        let phi = SpectralScalarField::from_fn(grid, |_, y| {
            amplitude * (2.0 * std::f64::consts::PI * y / length).sin()
        });
        Self::new(phi).expect("analytic potential is finite")
    }

    pub fn phi(&self) -> &SpectralScalarField {
        &self.phi
    }

    /// Cached `||grad phi||_{L^inf}`.
    pub fn grad_linf(&self) -> f64 {
        self.grad_linf
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        self.phi.grid()
    }
}

/// Deterministic tendencies of the three fields.
///
/// `dn` has exactly zero mean; `du` is divergence-free.
#[derive(Debug, Clone)]
pub struct RhsBundle {
    pub dn: SpectralScalarField,
    pub dc: SpectralScalarField,
    pub du: SolenoidalVelocityField,
}

/// How the stiff linear diffusion enters the tendency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionTreatment {
    /// Include `Δ` terms in the returned tendencies (fully explicit RHS).
    Explicit,
    /// Leave `Δ` terms out; the integrator applies them exactly.
    SeparateLinearPart,
}

/// Physical-grid product of two spectral scalars, retruncated to the cutoff.
fn product(a_phys: &Array2<f64>, b_phys: &Array2<f64>, grid: &Arc<TorusGrid>) -> SpectralScalarField {
    let prod = a_phys * b_phys;
    SpectralScalarField::from_physical(grid.clone(), &prod).expect("grids agree")
}

/// Spectral divergence of a physical-grid vector field `(vx, vy)`.
fn divergence(vx: &Array2<f64>, vy: &Array2<f64>, grid: &Arc<TorusGrid>) -> SpectralScalarField {
    let fx = product_identity(vx, grid).derivative(Axis2::X);
    let fy = product_identity(vy, grid).derivative(Axis2::Y);
    let mut out = fx;
    out.add_scaled(&fy, 1.0);
    out
}

fn product_identity(v: &Array2<f64>, grid: &Arc<TorusGrid>) -> SpectralScalarField {
    SpectralScalarField::from_physical(grid.clone(), v).expect("grids agree")
}

/// Transport tendency `-div(u f)` of a scalar by a solenoidal velocity.
///
/// Exactly mass-neutral: the `k = 0` mode of a divergence vanishes.
pub fn advection_scalar(
    u: &SolenoidalVelocityField,
    f: &SpectralScalarField,
) -> Result<SpectralScalarField> {
    u.grid().check_same(f.grid(), "advection_scalar")?;
    let grid = f.grid().clone();
    let (ux, uy) = u.to_physical();
    let f_phys = f.to_physical();
    let flux_x = &ux * &f_phys;
    let flux_y = &uy * &f_phys;
    let mut out = divergence(&flux_x, &flux_y, &grid);
    out.scale(-1.0);
    Ok(out)
}

/// Chemotaxis tendency `-div(n grad c)`.
pub fn chemotaxis_flux(
    n: &SpectralScalarField,
    c: &SpectralScalarField,
) -> Result<SpectralScalarField> {
    n.grid().check_same(c.grid(), "chemotaxis_flux")?;
    let grid = n.grid().clone();
    let n_phys = n.to_physical();
    let cx = c.derivative(Axis2::X).to_physical();
    let cy = c.derivative(Axis2::Y).to_physical();
    let flux_x = &n_phys * &cx;
    let flux_y = &n_phys * &cy;
    let mut out = divergence(&flux_x, &flux_y, &grid);
    out.scale(-1.0);
    Ok(out)
}

/// Consumption tendency `-n c` (pointwise, dealiased).
pub fn consumption(
    n: &SpectralScalarField,
    c: &SpectralScalarField,
) -> Result<SpectralScalarField> {
    n.grid().check_same(c.grid(), "consumption")?;
    let grid = n.grid().clone();
    let mut out = product(&n.to_physical(), &c.to_physical(), &grid);
    out.scale(-1.0);
    Ok(out)
}

/// Navier-Stokes nonlinearity: Leray projection of `-(u·grad)u`,
/// evaluated in divergence form `-div(u ⊗ u)`.
///
/// Energy-neutral: `<output, u>_{L^2} = 0` up to roundoff.
pub fn ns_nonlinearity(u: &SolenoidalVelocityField) -> SolenoidalVelocityField {
    let grid = u.grid().clone();
    let (ux, uy) = u.to_physical();
    let uxx = &ux * &ux;
    let uxy = &ux * &uy;
    let uyy = &uy * &uy;
    let mut tx = divergence(&uxx, &uxy, &grid);
    tx.scale(-1.0);
    let mut ty = divergence(&uxy, &uyy, &grid);
    ty.scale(-1.0);
    SolenoidalVelocityField::leray_project(&tx, &ty).expect("components share the grid")
}

/// Buoyancy tendency: Leray projection of `n grad phi`.
pub fn buoyancy(n: &SpectralScalarField, phi: &PotentialField) -> Result<SolenoidalVelocityField> {
    n.grid().check_same(phi.grid(), "buoyancy")?;
    let grid = n.grid().clone();
    let n_phys = n.to_physical();
    let fx = product(&n_phys, &phi.grad_x, &grid);
    let fy = product(&n_phys, &phi.grad_y, &grid);
    SolenoidalVelocityField::leray_project(&fx, &fy)
}

/// Assemble every deterministic tendency of the system.
///
/// With `Explicit` diffusion:
/// `dn = Δn - div(u n) - div(n grad c)`,
/// `dc = Δc - div(u c) - n c`,
/// `du = P[Δu - (u·grad)u + n grad phi]`.
pub fn full_rhs(
    n: &SpectralScalarField,
    c: &SpectralScalarField,
    u: &SolenoidalVelocityField,
    phi: &PotentialField,
    diffusion: DiffusionTreatment,
) -> Result<RhsBundle> {
    let mut dn = advection_scalar(u, n)?;
    dn.add_scaled(&chemotaxis_flux(n, c)?, 1.0);

    let mut dc = advection_scalar(u, c)?;
    dc.add_scaled(&consumption(n, c)?, 1.0);

    let mut du = ns_nonlinearity(u);
    du.add_scaled(&buoyancy(n, phi)?, 1.0);

    if diffusion == DiffusionTreatment::Explicit {
        dn.add_scaled(&n.laplacian(), 1.0);
        dc.add_scaled(&c.laplacian(), 1.0);
        let lap_x = u.component(Axis2::X).laplacian();
        let lap_y = u.component(Axis2::Y).laplacian();
        let lap = SolenoidalVelocityField::leray_project(&lap_x, &lap_y)?;
        du.add_scaled(&lap, 1.0);
    }

    Ok(RhsBundle { dn, dc, du })
}

/// `<ns_nonlinearity(u), u>` normalized by `max(1, ||u||^3)`; identity check.
pub fn transport_energy_defect(u: &SolenoidalVelocityField) -> f64 {
    let tendency = ns_nonlinearity(u);
    let ip = crate::spectral::velocity_inner(&tendency, u);
    ip.abs() / energy(u).powf(1.5).max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{inner, l2_sq, velocity_inner};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn grid64() -> Arc<TorusGrid> {
        TorusGrid::new(2.0 * PI, 64, 21).unwrap()
    }

    fn taylor_green(grid: &Arc<TorusGrid>, amp: f64) -> SolenoidalVelocityField {
        SolenoidalVelocityField::from_fns(
            grid.clone(),
            move |x, y| amp * x.sin() * y.cos(),
            move |x, y| -amp * x.cos() * y.sin(),
        )
    }

    #[test]
    fn advection_by_zero_velocity_vanishes() {
        let g = grid64();
        let u = SolenoidalVelocityField::zero(g.clone());
        let f = SpectralScalarField::from_fn(g, |x, y| (2.0 * x).cos() + y.sin());
        let t = advection_scalar(&u, &f).unwrap();
        assert!(l2_sq(&t) < 1e-24);
    }

    #[test]
    fn constant_velocity_translation_tendency() {
        // u = (U, 0), f = cos(k x): tendency = U k sin(k x).
        let g = grid64();
        let big_u = 1.3;
        let k = 3.0;
        let u = SolenoidalVelocityField::from_fns(g.clone(), move |_, _| big_u, |_, _| 0.0);
        let f = SpectralScalarField::from_fn(g.clone(), move |x, _| (k * x).cos());
        let t = advection_scalar(&u, &f).unwrap();
        let expected = SpectralScalarField::from_fn(g, move |x, _| big_u * k * (k * x).sin());
        let mut diff = t.clone();
        diff.add_scaled(&expected, -1.0);
        assert!(l2_sq(&diff) < 1e-20);
    }

    #[test]
    fn advection_is_exactly_mass_neutral() {
        let g = grid64();
        let u = taylor_green(&g, 0.8);
        let f = SpectralScalarField::from_fn(g, |x, y| 1.0 + 0.3 * (x + 2.0 * y).cos());
        let t = advection_scalar(&u, &f).unwrap();
        assert_eq!(t.mean(), 0.0);
    }

    #[test]
    fn transport_is_energy_neutral() {
        let g = grid64();
        let u = taylor_green(&g, 0.7);
        let f = SpectralScalarField::from_fn(g, |x, y| 0.4 * (2.0 * x).sin() + 0.2 * y.cos());
        let t = advection_scalar(&u, &f).unwrap();
        let rel = inner(&t, &f).abs() / l2_sq(&f);
        assert!(rel < 1e-10, "skew-symmetry defect {rel}");
    }

    #[test]
    fn chemotaxis_constant_density_reduces_to_scaled_laplacian() {
        let g = grid64();
        let n_bar = 1.7;
        let n = SpectralScalarField::from_fn(g.clone(), move |_, _| n_bar);
        let c = SpectralScalarField::from_fn(g, |x, y| (2.0 * x).cos() * y.sin());
        let t = chemotaxis_flux(&n, &c).unwrap();
        let mut expected = c.laplacian();
        expected.scale(-n_bar);
        let mut diff = t.clone();
        diff.add_scaled(&expected, -1.0);
        assert!(l2_sq(&diff) / l2_sq(&expected) < 1e-20);
        assert!(t.mean().abs() <= 1e-14);
    }

    #[test]
    fn chemotaxis_no_gradient_vanishes() {
        let g = grid64();
        let n = SpectralScalarField::from_fn(g.clone(), |x, _| 1.0 + 0.5 * x.cos());
        let c = SpectralScalarField::from_fn(g, |_, _| 2.0);
        let t = chemotaxis_flux(&n, &c).unwrap();
        assert!(l2_sq(&t) < 1e-24);
    }

    #[test]
    fn consumption_signs_and_values() {
        let g = grid64();
        let n = SpectralScalarField::from_fn(g.clone(), |_, _| 1.0);
        let c_bar = 0.6;
        let c = SpectralScalarField::from_fn(g.clone(), move |_, _| c_bar);
        let t = consumption(&n, &c).unwrap();
        assert_relative_eq!(t.mean(), -c_bar, max_relative = 1e-12);

        let n2 = SpectralScalarField::from_fn(g.clone(), |x, _| 1.0 + 0.9 * x.cos());
        let c2 = SpectralScalarField::from_fn(g, |_, y| 1.0 + 0.9 * y.sin());
        let t2 = consumption(&n2, &c2).unwrap();
        let max = t2.to_physical().iter().copied().fold(f64::MIN, f64::max);
        assert!(max <= 1e-12, "nonnegative inputs must give -nc <= 0, max {max}");
    }

    #[test]
    fn consumption_of_zero_density_vanishes() {
        let g = grid64();
        let n = SpectralScalarField::zero(g.clone());
        let c = SpectralScalarField::from_fn(g, |x, _| 1.0 + 0.2 * x.cos());
        assert!(l2_sq(&consumption(&n, &c).unwrap()) < 1e-24);
    }

    #[test]
    fn ns_nonlinearity_zero_and_orthogonal() {
        let g = grid64();
        let zero = SolenoidalVelocityField::zero(g.clone());
        let t0 = ns_nonlinearity(&zero);
        assert!(energy(&t0) < 1e-24);

        let u = taylor_green(&g, 1.0);
        let t = ns_nonlinearity(&u);
        let defect = velocity_inner(&t, &u).abs();
        assert!(defect <= 1e-10 * energy(&u).powf(1.5).max(1.0));
        let tn: f64 = energy(&t).sqrt();
        assert!(t.max_mode_divergence() <= 1e-14 * tn.max(1.0));
    }

    #[test]
    fn buoyancy_trivial_cases() {
        let g = grid64();
        let phi = PotentialField::default_sine(g.clone(), 1.0);
        let zero_n = SpectralScalarField::zero(g.clone());
        assert!(energy(&buoyancy(&zero_n, &phi).unwrap()) < 1e-24);

        let const_phi =
            PotentialField::new(SpectralScalarField::from_fn(g.clone(), |_, _| 5.0)).unwrap();
        let n = SpectralScalarField::from_fn(g.clone(), |x, _| 1.0 + x.cos());
        assert!(energy(&buoyancy(&n, &const_phi).unwrap()) < 1e-24);

        // n = 1, phi = sin(x): n grad phi = (cos x, 0) is a pure gradient.
        let phi_x =
            PotentialField::new(SpectralScalarField::from_fn(g.clone(), |x, _| x.sin())).unwrap();
        let ones = SpectralScalarField::from_fn(g, |_, _| 1.0);
        let forced = buoyancy(&ones, &phi_x).unwrap();
        assert!(energy(&forced) < 1e-20, "pure gradient must be annihilated");
    }

    #[test]
    fn full_rhs_analytic_reduction() {
        let g = grid64();
        let phi = PotentialField::new(SpectralScalarField::from_fn(g.clone(), |_, _| 2.0)).unwrap();
        let n_bar = 1.25;
        let c_bar = 0.75;
        let n = SpectralScalarField::from_fn(g.clone(), move |_, _| n_bar);
        let c = SpectralScalarField::from_fn(g.clone(), move |_, _| c_bar);
        let u = SolenoidalVelocityField::zero(g.clone());
        let rhs = full_rhs(&n, &c, &u, &phi, DiffusionTreatment::Explicit).unwrap();
        assert!(l2_sq(&rhs.dn) < 1e-22);
        assert!(energy(&rhs.du) < 1e-22);
        assert_relative_eq!(rhs.dc.mean(), -n_bar * c_bar, max_relative = 1e-12);
        let uniform_defect = l2_sq(&rhs.dc) - rhs.dc.mean().powi(2) * g.area();
        assert!(uniform_defect.abs() < 1e-18, "dc must be uniform");

        let zero = full_rhs(
            &SpectralScalarField::zero(g.clone()),
            &SpectralScalarField::zero(g.clone()),
            &SolenoidalVelocityField::zero(g.clone()),
            &phi,
            DiffusionTreatment::Explicit,
        )
        .unwrap();
        assert!(l2_sq(&zero.dn) + l2_sq(&zero.dc) + energy(&zero.du) < 1e-30);
    }

    #[test]
    fn full_rhs_mass_neutral_on_random_state() {
        let g = grid64();
        let phi = PotentialField::default_sine(g.clone(), 1.0);
        let n = SpectralScalarField::from_fn(g.clone(), |x, y| 1.0 + 0.4 * (x + y).cos());
        let c = SpectralScalarField::from_fn(g.clone(), |x, y| 1.0 + 0.3 * (2.0 * x - y).sin());
        let u = taylor_green(&g, 0.5);
        for treatment in [DiffusionTreatment::Explicit, DiffusionTreatment::SeparateLinearPart] {
            let rhs = full_rhs(&n, &c, &u, &phi, treatment).unwrap();
            assert_eq!(rhs.dn.mean(), 0.0);
            let e: f64 = energy(&rhs.du).sqrt();
            assert!(rhs.du.max_mode_divergence() <= 1e-14 * e.max(1.0));
        }
    }
}
