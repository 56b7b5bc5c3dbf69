//! Conley–Zehnder indices of Reeb orbits and the curvature of contact
//! metric 3-manifolds.

pub mod cli;
pub mod czindex;
pub mod dynamics;
pub mod fd;
pub mod geometry;
pub mod la;
pub mod models;
pub mod ode;
pub mod report;
pub mod sampling;
pub mod sp2core;
pub mod tolerances;
