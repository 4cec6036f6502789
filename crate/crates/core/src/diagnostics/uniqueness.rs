//! Pathwise-uniqueness functionals of a pair of trajectories.
//!
//! For two states with difference `(n*, c*, u*)`:
//! `A = ||n*||^2 + ||c*||^2 + ||grad c*||^2 + ||u*||^2` (zero iff equal),
//! `B = ||grad n*||^2 + ||grad c*||^2 + ||Δc*||^2 + ||grad u*||^2`,
//! and `C` is the Gronwall coefficient assembled from the two solution
//! states themselves (nine products plus one). The difference inequality
//! `dA + B <= C_uniq * A * C` makes `exp(C_uniq ∫ C dt)` the growth
//! envelope of `A(t)/A(0)`.

use crate::integrator::SimulationState;
use crate::spectral::{energy, grad_sq, l2_sq, laplacian_sq, velocity_grad_sq, Axis2};
use crate::Result;
use serde::Serialize;

/// The three §-functionals of a state pair.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UniquenessMetrics {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Evaluate `A`, `B`, `C` for a pair of states on a common grid.
pub fn uniqueness_metrics(
    first: &SimulationState,
    second: &SimulationState,
) -> Result<UniquenessMetrics> {
    first
        .grid()
        .check_same(second.grid(), "uniqueness_metrics")?;

    let mut n_diff = first.n.clone();
    n_diff.add_scaled(&second.n, -1.0);
    let mut c_diff = first.c.clone();
    c_diff.add_scaled(&second.c, -1.0);
    let mut u_diff = first.u.clone();
    u_diff.add_scaled(&second.u, -1.0);

    let a = l2_sq(&n_diff) + l2_sq(&c_diff) + grad_sq(&c_diff) + energy(&u_diff);
    let b = grad_sq(&n_diff) + grad_sq(&c_diff) + laplacian_sq(&c_diff) + velocity_grad_sq(&u_diff);

    // Gronwall coefficient: nine solution-dependent products plus one.
    let n1_sq = l2_sq(&first.n);
    let grad_n1_sq = grad_sq(&first.n);
    let n2_sq = l2_sq(&second.n);
    let grad_n2_sq = grad_sq(&second.n);
    let grad_c1_sq = grad_sq(&first.c);
    let lap_c1_sq = laplacian_sq(&first.c);
    let u1_sq = energy(&first.u);
    let grad_u1_sq = {
        let ux = first.u.component(Axis2::X);
        let uy = first.u.component(Axis2::Y);
        grad_sq(&ux) + grad_sq(&uy)
    };
    let grad_u2_sq = velocity_grad_sq(&second.u);

    let c = n1_sq * grad_n1_sq
        + grad_c1_sq * lap_c1_sq
        + n2_sq * grad_n2_sq
        + grad_c1_sq * lap_c1_sq
        + n2_sq
        + grad_c1_sq * lap_c1_sq
        + grad_u2_sq
        + n2_sq * grad_n2_sq
        + u1_sq * grad_u1_sq
        + 1.0;

    Ok(UniquenessMetrics { a, b, c })
}
