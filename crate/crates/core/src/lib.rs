//! Empirical checks of linearized (Lyapunov indirect) stability for
//! infinite-dimensional systems.
//!
//! * [`state`]: l2 sequences, Fourier fields, trajectories, report types.
//! * [`zwart`]: the l2 system `z_n' = -z_n/n + z_n^2`, whose linearization
//!   is asymptotically but not exponentially stable.
//! * [`ks`]: pseudospectral Kuramoto-Sivashinsky solver and its linearization
//!   at constant equilibria.
//! * [`quasilinear`]: a dissipative testbed with analytic Gronwall constants.
//! * [`analysis`]: Frechet remainder scans, growth constants, contraction
//!   checks and stability classification over any [`analysis::FlowPair`].
//! * [`cli`]: configuration parsing and the `semistab` command driver.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod etd;
pub mod ks;
pub mod quasilinear;
pub mod state;
pub mod zwart;

pub use error::{Error, Result};
pub use state::{
    l2_norm, state_axpy, FrechetReport, SequenceState, SpectralField, StabilityClass, StabilityVerdict, State,
    Trajectory,
};
