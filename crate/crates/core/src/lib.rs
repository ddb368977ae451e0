//! Desk-scale simulation of local entanglement growth and its role in
//! wave-function collapse.
//!
//! The crate is organised around the chain the simulations follow:
//!
//! * [`detector`]: gas/detector constants and the order-of-magnitude
//!   arithmetic that connects them to front speeds and fluctuation rates.
//! * [`kinetics`]: the contagion–diffusion equation for the local measure of
//!   intricacy, its traveling-wave profile and front-speed measurement.
//! * [`sectors`]: exact small-N evolution of wave functions indexed by
//!   entanglement bitstrings, with the symmetric reduction.
//! * [`predecoherence`]: random fluctuation matrices, their positive and
//!   negative parts, and the semicircle law.
//! * [`collapse`]: stochastic channel-probability dynamics with absorbing
//!   boundaries and Born-rule statistics.
//! * [`scenario`]: strict configuration parsing and deterministic scenario
//!   execution with CSV/JSON outputs.
//!
//! Kinetics and collapse work in reduced units: lengths in mean free paths
//! (λ) and times in mean free times (τ). The detector module works in CGS.

pub mod collapse;
pub mod detector;
pub mod error;
pub mod kinetics;
pub mod predecoherence;
pub mod rng;
pub mod scenario;
pub mod sectors;

pub use error::{Error, Result};
