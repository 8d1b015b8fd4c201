//! Time evolution, outside probabilities, averages and resolvents.

pub mod average;
pub mod evolve;
pub mod observables;
pub mod resolvent;

pub use average::{time_average, TimeAverage};
pub use evolve::{evolve, evolve_with_cap, Propagator, WavePacket};
pub use observables::{moment, moment_uncertainty, outside_probability, Region, TailProfile};
pub use resolvent::{
    parseval_average, parseval_averages, resolvent_vector, ParsevalAverage, ResolventSolver, ResolventVector,
};
