//! Closed-form first-arrival-position (FAP) channel mathematics for diffusive
//! molecular communication with an absorbing planar receiver.
//!
//! The crate covers
//!
//! * [`specfun`]: modified Bessel functions of the second kind and the
//!   exponential integral, implemented without external math dependencies;
//! * [`channel`]: FAP densities for arbitrary drift, the vertically drifted
//!   (VDFAP) family, the zero-drift Cauchy limit and the spherical receiver kernel;
//! * [`spectral`]: the VDFAP characteristic function, its derivatives and moments;
//! * [`entropy`]: closed-form and quadrature differential entropies;
//! * [`capacity`]: lower and upper bounds on the VDFAP channel capacity under a
//!   second-moment input constraint;
//! * [`mcsim`]: particle-based first-passage simulation and exact sampling;
//! * [`validate`]: statistical comparison of simulation against theory.
//!
//! Lengths are in μm, normalized drift in μm⁻¹, time in seconds, entropies in nats.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod channel;
pub mod entropy;
mod error;
pub mod mcsim;
pub mod quad;
pub mod spectral;
pub mod specfun;
pub mod validate;

pub use error::{FapError, Result};
