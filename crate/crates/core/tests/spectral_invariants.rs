//! Property tests for the structural invariants of the spectral layer:
//! Parseval consistency, orthogonality of the Galerkin projection, the
//! Leray projector's algebra, and reality of inverse transforms.

use cns_core::spectral::{
    energy, grad_sq, l2_sq, velocity_inner, Axis2, SolenoidalVelocityField, SpectralScalarField,
    TorusGrid,
};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

const N: usize = 32;
const M: usize = 10;

fn grid() -> Arc<TorusGrid> {
    TorusGrid::new(2.0 * PI, N, M).unwrap()
}

/// Random band-limited real field from a handful of low modes.
fn field_strategy() -> impl Strategy<Value = SpectralScalarField> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 6).prop_map(|amps| {
        let g = grid();
        SpectralScalarField::from_fn(g, move |x, y| {
            let mut v = 0.0;
            for (k, (a, b)) in amps.iter().enumerate() {
                let kf = (k % 5 + 1) as f64;
                v += a * (kf * x).cos() * ((k % 3) as f64 * y).cos() + b * (kf * (x + y)).sin();
            }
            v
        })
    })
}

fn velocity_strategy() -> impl Strategy<Value = SolenoidalVelocityField> {
    (field_strategy(), field_strategy())
        .prop_map(|(fx, fy)| SolenoidalVelocityField::leray_project(&fx, &fy).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn parseval_holds_after_operations(f in field_strategy()) {
        // Spectral L2 equals physical-grid L2 for the field and its
        // derivative (band-limited, so the quadrature is exact).
        for field in [f.derivative(Axis2::X), f] {
            let spectral = l2_sq(&field);
            let phys = field.to_physical();
            let quad: f64 = field.grid().cell_area() * phys.iter().map(|v| v * v).sum::<f64>();
            let scale = spectral.abs().max(1e-30);
            prop_assert!(((spectral - quad) / scale).abs() < 1e-10);
        }
    }

    #[test]
    fn galerkin_projection_is_orthogonal(f in field_strategy()) {
        let projected = f.galerkin_project(3).unwrap();
        let mut residual = f.clone();
        residual.add_scaled(&projected, -1.0);
        let total = l2_sq(&f);
        let parts = l2_sq(&projected) + l2_sq(&residual);
        prop_assert!(l2_sq(&projected) <= total * (1.0 + 1e-12));
        prop_assert!(((total - parts) / total.max(1e-30)).abs() < 1e-10);
    }

    #[test]
    fn leray_is_idempotent_and_symmetric(
        (fx, fy) in (field_strategy(), field_strategy()),
        (gx, gy) in (field_strategy(), field_strategy()),
    ) {
        let pu = SolenoidalVelocityField::leray_project(&fx, &fy).unwrap();
        let ppu = SolenoidalVelocityField::leray_project(
            &pu.component(Axis2::X),
            &pu.component(Axis2::Y),
        ).unwrap();
        let mut diff = pu.clone();
        diff.add_scaled(&ppu, -1.0);
        prop_assert!(energy(&diff) <= 1e-24 * energy(&pu).max(1.0));

        // <P u, v> = <u, P v> via the scalar inner products of components.
        let pv = SolenoidalVelocityField::leray_project(&gx, &gy).unwrap();
        let lhs = cns_core::spectral::inner(&pu.component(Axis2::X), &gx)
            + cns_core::spectral::inner(&pu.component(Axis2::Y), &gy);
        let rhs = cns_core::spectral::inner(&fx, &pv.component(Axis2::X))
            + cns_core::spectral::inner(&fy, &pv.component(Axis2::Y));
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        prop_assert!(((lhs - rhs) / scale).abs() < 1e-12);
    }

    #[test]
    fn inverse_transform_reality(f in field_strategy()) {
        let (phys, residue) = f.to_physical_with_residue();
        let magnitude = phys.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-30);
        prop_assert!(residue <= 1e-12 * magnitude.max(1.0));
    }

    #[test]
    fn velocity_energy_matches_components(u in velocity_strategy()) {
        let direct = energy(&u);
        let via_components = l2_sq(&u.component(Axis2::X)) + l2_sq(&u.component(Axis2::Y));
        prop_assert!(((direct - via_components) / direct.max(1e-30)).abs() < 1e-12);
        prop_assert!(velocity_inner(&u, &u) >= 0.0);
        let gsq = grad_sq(&u.component(Axis2::X)) + grad_sq(&u.component(Axis2::Y));
        prop_assert!((cns_core::spectral::velocity_grad_sq(&u) - gsq).abs()
            <= 1e-10 * gsq.max(1.0));
    }
}
