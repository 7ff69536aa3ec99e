//! Mirror maps, Bregman machinery and the optimistic mirror descent round.

pub mod map;
pub mod omd;
pub mod simplex;

pub use map::{project_ball, project_simplex, FeasibleSet, MirrorMap, Regularizer};
pub use omd::{adaptive_eta, regret_certificate, OmdRound, OmdState, RegretCertificate};
pub use simplex::SimplexPoint;
