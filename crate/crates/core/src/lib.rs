//! Simulation of classical and quantum limit-cycle oscillators and their
//! synchronization.
//!
//! The crate covers noisy classical van-der-Pol and Adler phase dynamics,
//! Lindblad master equations for quantum van-der-Pol oscillators and
//! spins-1/2, heterodyne-detection quantum trajectories, Husimi-Q phase-space
//! distributions, and emission spectra from the quantum regression theorem
//! or from detector currents. The [`experiments`] module binds these into
//! reproducible scenario runs that write CSV/JSON artifacts.

pub mod linalg;
pub mod rng;
pub mod classical;
pub mod lindblad;
pub mod spectral;
pub mod heterodyne;
pub mod phase_space;
pub mod experiments;
