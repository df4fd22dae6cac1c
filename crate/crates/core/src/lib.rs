//! Certified stability assessment for interconnected nonlinear networks.
//!
//! The crate decomposes a network of polynomially perturbed linear subsystems
//! into per-subsystem decay/perturbation/coupling gains, condenses them into
//! a small structure matrix, and searches for a diagonal scaling whose
//! weighted block-quadratic function certifies an invariant region around the
//! equilibrium. A fixed-step integrator cross-checks certificates on
//! trajectories.
//!
//! Module map:
//! - [`numerics`]: dense kernels (symmetric eigensolver, Lyapunov solve,
//!   linear feasibility, matrix measure).
//! - [`model`]: subsystem/coupling/network types and dynamics evaluation.
//! - [`gains`]: per-subsystem decay rates, perturbation bounds, coupling
//!   gains.
//! - [`certify`]: structure matrix, diagonal-scaling search, invariant-set
//!   membership, level adaptation.
//! - [`simulate`]: fixed-step integration and certificate validation on
//!   trajectories.
//! - [`ring`]: the built-in 20-subsystem ring benchmark.

pub mod certify;
pub mod error;
pub mod gains;
pub mod model;
pub mod numerics;
pub mod ring;
pub mod simulate;
