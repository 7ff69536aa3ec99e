//! Zero-sum matrix games played by uncoupled optimistic learners.

pub mod bandit;
pub mod certificate;
pub mod full_info;
pub mod matrix;

use serde::Serialize;

pub use bandit::{
    bandit_estimate, bandit_eta, bandit_eta_cap, enumerate_estimates, max_delta, run_bandit_match,
    scaled_tangent_projection, tangent_basis, BanditMatch, BanditPlayer, BanditRound, BanditStep,
};
pub use certificate::{full_info_regret_certificate, GameCertificate, StepRecord};
pub use full_info::{
    full_info_eta, full_info_eta_scaled, run_against, run_full_info_match, FullInfoMatch,
    FullInfoPlayer, FullInfoRound, Opponent, Side, FULL_INFO_ETA_CAP,
};
pub use matrix::PayoffMatrix;

/// One round of match telemetry. Column fields are `NaN` when the column
/// side does not run the certified dynamics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: usize,
    pub eta_row: f64,
    pub eta_col: f64,
    /// Duality gap of the running averages.
    pub gap: f64,
    pub cert_lhs_row: f64,
    pub cert_rhs_row: f64,
    pub cert_lhs_col: f64,
    pub cert_rhs_col: f64,
}

/// Final certificate values and how many round prefixes satisfied them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateSummary {
    pub lhs: f64,
    pub rhs: f64,
    pub checked: usize,
    pub passed: usize,
}

impl CertificateSummary {
    pub fn from_certificate(cert: &GameCertificate, passed: usize) -> Self {
        Self {
            lhs: cert.lhs(),
            rhs: cert.rhs(),
            checked: cert.rounds(),
            passed,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.passed == self.checked
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub trace: Vec<TraceRow>,
    pub f_bar: Vec<f64>,
    pub x_bar: Vec<f64>,
    /// `bilinear_gap(A, f̄, x̄)`
    pub gap: f64,
    pub row: CertificateSummary,
    /// Present when the column side ran the certified dynamics.
    pub col: Option<CertificateSummary>,
}
