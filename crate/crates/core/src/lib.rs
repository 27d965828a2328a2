//! Fluid-model and packet-level analysis of the Rate Control Protocol (RCP)
//! on a single bottleneck, with and without queue-size feedback.
//!
//! The crate is `no_std` (it needs `alloc` for trajectories and traces) and
//! covers:
//!
//! * [`fluid_model`]: the delay differential equation, its equilibrium and the
//!   Taylor coefficients of its expansion about that equilibrium.
//! * [`linear_analysis`]: local and robust stability, the critical value of the
//!   bifurcation parameter and the rate of convergence.
//! * [`hopf`]: the criticality coefficient `mu2` of the first Hopf bifurcation.
//! * [`dde_sim`]: a fixed-step RK4 integrator for the delayed equation and
//!   bifurcation-diagram sweeps.
//! * [`packet_sim`]: a discrete-event simulation of a single RCP router fed by
//!   Poisson sources.
#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN
#![no_std]
#![warn(missing_docs)]

extern crate alloc;

mod error;
mod params;
mod roots;

pub mod dde_sim;
pub mod fluid_model;
pub mod hopf;
pub mod lambert;
pub mod linear_analysis;
pub mod packet_sim;

pub use error::{Error, Result};
pub use params::{FluidParams, Variant};
