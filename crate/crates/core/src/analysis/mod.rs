//! Error probability: Monte Carlo estimation and the closed-form upper bound.

pub mod bound;
pub mod montecarlo;
