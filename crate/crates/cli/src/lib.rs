//! Command-line and HTTP front ends for the sabotage-game solvers.

pub mod api;
pub mod service;
