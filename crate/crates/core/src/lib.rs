//! Exact structural analysis of linear differential-algebraic systems and
//! funnel tracking control of nonlinear functional DAEs.
//!
//! The crate is `no_std` with `alloc`. File formats, the command-line front
//! end and anything touching the OS live in the `funnel-dae` companion crate.

#![no_std]

extern crate alloc;

pub mod closed_loop;
pub mod dae_analysis;
pub mod funnel;
pub mod linalg;
pub mod operators;
pub mod polyrat;
pub mod registry;
