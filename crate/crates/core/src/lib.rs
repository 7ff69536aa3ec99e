//! Optimistic mirror descent with predictable sequences.
//!
//! * [`mirror`]: mirror maps, Bregman divergences, the optimistic round,
//!   adaptive step sizes and regret certificates.
//! * [`offline`]: Mirror Prox and Hölder-smooth offline minimization.
//! * [`saddle`]: convex-concave saddle points by two coupled learners.
//! * [`game`]: uncoupled zero-sum matrix game dynamics under full and
//!   bandit feedback.
//! * [`convex`]: approximate smooth convex programming and max flow.
//! * [`harness`]: experiment configuration, parsing and CSV traces.

pub mod convex;
pub mod error;
pub mod game;
pub mod harness;
pub mod linalg;
pub mod mirror;
pub mod offline;
pub mod saddle;

pub use error::{Error, Result};
