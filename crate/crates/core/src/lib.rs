//! Spectral Galerkin simulator for the 2D stochastic chemotaxis-Navier-Stokes
//! system on the periodic torus `[0, L]^2`.
//!
//! The model couples a bacterial density `n`, a chemoattractant concentration
//! `c` and an incompressible fluid velocity `u`:
//!
//! ```text
//! dn = [ Δn − ∇·(u n) − ∇·(n ∇c) ] dt
//! dc = [ Δc − ∇·(u c) − n c     ] dt
//! du = P [ Δu − (u·∇)u + n ∇φ  ] dt + P G(u) dW + ∫ F(u; z) η̃(dt, dz)
//! ∇·u = 0
//! ```
//!
//! where `P` is the Leray projection, `G` is gradient-type multiplicative
//! Wiener noise and `η̃` is a compensated finite-activity Poisson random
//! measure with multiplicative jump map `F(u; z) = r(z)·u`.
//!
//! Everything is discretised pseudo-spectrally: fields live as truncated
//! Fourier coefficients (`|k|_∞ ≤ m`), nonlinear terms are evaluated on the
//! physical grid under the 2/3 dealiasing rule, and the stiff diffusion is
//! integrated exactly via integrating factors. The crate is organised by
//! subsystem:
//!
//! * [`spectral`] — torus grid, transforms, Galerkin truncation, Leray
//!   projection, norms and entropy integrals,
//! * [`dynamics`] — the deterministic right-hand-side operators,
//! * [`noise`] — Wiener and compensated-Poisson drivers plus hypothesis
//!   verification,
//! * [`integrator`] — the jump-adapted semi-implicit Euler-Maruyama stepper,
//!   stopping times, and checkpointing,
//! * [`diagnostics`] — the entropy-energy ledger, invariant reports,
//!   escape-probability and moment estimators, and uniqueness functionals.

pub mod diagnostics;
pub mod dynamics;
mod error;
pub mod integrator;
pub mod noise;
pub mod spectral;

pub use error::CnsError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CnsError>;
