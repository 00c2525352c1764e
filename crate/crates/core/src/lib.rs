//! Structural observability analysis and sensor-failure recovery for
//! networked linear estimators.

pub mod analysis;
pub mod digraph;
pub mod estimator;
pub mod io;
pub mod recovery;
pub mod sim;
