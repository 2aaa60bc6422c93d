//! Simulation of seam-measurement scheduling for a triangular color code
//! distributed over four QPUs.

pub mod decoder;
pub mod framesim;
pub mod lattice;
pub mod noise;
pub mod partition;
pub mod rng;
pub mod circuit;
pub mod schedule;
pub mod experiment;
