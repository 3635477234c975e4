//! The five explicitly solvable models.

mod delay;
pub mod pollution;
pub mod spatial_growth;
pub mod time_to_build;
pub mod vintage_dde;
pub mod vintage_transport;

pub use delay::DelayState;
