//! Information model of spin-1/2 measurement collapse.
//!
//! * [`bloch`]: axes, states, eigenvectors and overlap probabilities.
//! * [`entropy`]: binary entropy and the decoherence entropies.
//! * [`solver`]: the entropy-constrained post-measurement axis, with a
//!   lattice route and an independent closed-form route.
//! * [`pfn`]: boolean outcome policies over projected angles and history.
//! * [`automaton`]: the Mealy-machine runner for iterated measurements.
//! * [`cli`]: the `spin-collapse` command-line front end.

pub mod automaton;
pub mod bloch;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod pfn;
pub mod solver;

pub use bloch::{canonicalize_axis, Axis, Outcome, SpinState};
pub use error::{Error, Result};
pub use solver::{solve, solve_collapse, solve_collapse_closed_form, CollapseSolution, SolverConfig, Status};
