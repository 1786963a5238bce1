//! Secrecy-rate optimization for a multiple-input single-output wiretap
//! channel assisted by two reconfigurable reflecting surfaces: one controlled
//! by the legitimate link and one controlled by the eavesdropper.
//!
//! The crate provides three solution methods for the max-min secrecy-rate
//! problem and the shared machinery they stand on:
//!
//! * [`ao`] — alternating optimization with semidefinite relaxation for the
//!   two phase-shift subproblems and a closed-form beamformer.
//! * [`gda`] — projected gradient descent-ascent on the lifted adversarial
//!   subproblem.
//! * [`game`] — exact mixed Nash equilibrium of the finite zero-sum game over
//!   quantized phase configurations.
//! * [`optkit`] — the dense numeric kernels (Hermitian eigendecomposition,
//!   a small semidefinite programming solver, a simplex linear programming
//!   solver, and nearest-point projection onto affine-plus-cone sets).
//! * [`model`] — channel model types, effective channels, rates.
//! * [`chansim`] — seeded statistical channel generation over a node geometry.

pub mod ao;
pub mod chansim;
pub mod game;
pub mod gda;
pub mod model;
pub mod optkit;
