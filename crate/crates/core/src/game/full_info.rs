//! Full-information dynamics: each player observes its whole loss vector.
//!
//! Player I observes `Ax_t`; Player II observes `f_tᵀA` and, as the maximizer,
//! is charged the negated vector. Both run optimistic exponential weights
//! with the previous observation as prediction, mix a `β = 1/T²` share of the
//! uniform distribution into the secondary iterate, and adapt the step size
//! to the observed variation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_finite, check_len, invalid, Result};
use crate::game::certificate::{GameCertificate, StepRecord};
use crate::game::matrix::PayoffMatrix;
use crate::game::{CertificateSummary, MatchResult, TraceRow};
use crate::linalg::{norm_inf, sub, RunningMean};
use crate::mirror::SimplexPoint;
use crate::saddle::bilinear_gap;

/// Upper clamp of the full-information step size.
pub const FULL_INFO_ETA_CAP: f64 = 1.0 / 11.0;

/// `min{ ln(nT) / (√S_{t-1} + √S_{t-2}), 1/11 }`; a zero denominator gives `1/11`.
pub fn full_info_eta(s_prev: f64, s_prev2: f64, n: usize, horizon: usize) -> f64 {
    full_info_eta_scaled(s_prev, s_prev2, (n as f64 * horizon as f64).ln())
}

/// [`full_info_eta`] with the numerator `ln(nT)` supplied directly.
pub fn full_info_eta_scaled(s_prev: f64, s_prev2: f64, log_scale: f64) -> f64 {
    let denom = s_prev.sqrt() + s_prev2.sqrt();
    if denom > 0.0 {
        (log_scale / denom).min(FULL_INFO_ETA_CAP)
    } else {
        FULL_INFO_ETA_CAP
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Row,
    Column,
}

/// One player of the full-information dynamics. It minimizes the loss
/// vectors it is given; the match runner negates the column player's payoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct FullInfoPlayer {
    side: Side,
    horizon: usize,
    beta: f64,
    log_scale: f64,
    g_prime: SimplexPoint,
    play: SimplexPoint,
    last_obs: Vec<f64>,
    history: Vec<f64>,
    sums: (f64, f64),
    etas: Vec<f64>,
}

impl FullInfoPlayer {
    /// Starts from uniform `g'₀` with `obs₀` the loss the opponent's uniform
    /// start would induce, and plays `f₁ ∝ g'₀ · exp(-η₁ obs₀)`.
    pub fn new(side: Side, horizon: usize, initial_obs: &[f64], mixing: bool) -> Result<Self> {
        let n = initial_obs.len();
        if n == 0 {
            return Err(invalid("a player needs at least one action"));
        }
        if horizon == 0 {
            return Err(invalid("horizon must be positive"));
        }
        check_finite(initial_obs, "observation")?;
        let t = horizon as f64;
        let g_prime = SimplexPoint::uniform(n);
        let eta = FULL_INFO_ETA_CAP;
        let play = g_prime.exp_update(initial_obs, eta)?;
        Ok(Self {
            side,
            horizon,
            beta: if mixing { 1.0 / (t * t) } else { 0.0 },
            log_scale: (n as f64 * t).ln(),
            g_prime,
            play,
            last_obs: initial_obs.to_vec(),
            history: Vec::new(),
            sums: (0.0, 0.0),
            etas: vec![eta],
        })
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn dim(&self) -> usize {
        self.play.dim()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `β = 1/T²`, or 0 with mixing disabled.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Current play `f_t`.
    pub fn play(&self) -> &[f64] {
        self.play.weights()
    }

    /// Latest mixed secondary iterate `g'_t`.
    pub fn g_prime(&self) -> &SimplexPoint {
        &self.g_prime
    }

    /// `‖obs_s - obs_{s-1}‖_∞²` for every completed round.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// `η_1, …, η_{t+1}`: the last entry belongs to the pending play.
    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    /// Step size the current play was computed with.
    pub fn current_eta(&self) -> f64 {
        *self.etas.last().expect("initialized with η₁")
    }

    /// Observes the loss of round `t` and prepares `f_{t+1}`.
    pub fn step(&mut self, obs: &[f64]) -> Result<StepRecord> {
        check_len(self.dim(), obs.len())?;
        check_finite(obs, "observation")?;
        let eta = self.current_eta();
        let secondary = self.g_prime.exp_update(obs, eta)?;
        let mixed = secondary.mix(self.beta);

        let diff = norm_inf(&sub(obs, &self.last_obs));
        self.history.push(diff * diff);
        self.sums = (self.sums.0 + diff * diff, self.sums.0);
        let next_eta = full_info_eta_scaled(self.sums.0, self.sums.1, self.log_scale);
        let next_play = mixed.exp_update(obs, next_eta)?;

        let record = StepRecord {
            played: self.play.weights().to_vec(),
            secondary: secondary.weights().to_vec(),
            mixed: mixed.weights().to_vec(),
            prev_mixed: self.g_prime.weights().to_vec(),
            loss: obs.to_vec(),
            prediction: self.last_obs.clone(),
            eta,
        };
        self.g_prime = mixed;
        self.play = next_play;
        self.last_obs = obs.to_vec();
        self.etas.push(next_eta);
        Ok(record)
    }
}

/// Strategies the column side may use instead of the prescribed dynamics.
#[derive(Debug, Clone, PartialEq)]
pub enum Opponent {
    /// The prescribed full-information dynamics.
    Adaptive,
    /// The same mixed strategy every round.
    Fixed(Vec<f64>),
    /// A uniformly random pure action every round.
    UniformRandom { seed: u64 },
    /// Plain exponential weights on its payoffs with a constant step size.
    MirrorDescent { eta: f64 },
}

enum ColumnState {
    Adaptive(Box<(FullInfoPlayer, GameCertificate)>),
    Fixed(Vec<f64>),
    Random(Box<ChaCha8Rng>, Vec<f64>),
    MirrorDescent(SimplexPoint, f64),
}

impl ColumnState {
    fn play(&self) -> &[f64] {
        match self {
            ColumnState::Adaptive(state) => state.0.play(),
            ColumnState::Fixed(x) | ColumnState::Random(_, x) => x,
            ColumnState::MirrorDescent(p, _) => p.weights(),
        }
    }
}

/// A full-information match that can be advanced one round at a time.
pub struct FullInfoMatch {
    matrix: PayoffMatrix,
    horizon: usize,
    row: FullInfoPlayer,
    row_cert: GameCertificate,
    column: ColumnState,
    mean_f: RunningMean,
    mean_x: RunningMean,
    round: usize,
}

impl std::fmt::Debug for FullInfoMatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FullInfoMatch")
            .field("horizon", &self.horizon)
            .field("round", &self.round)
            .finish_non_exhaustive()
    }
}

/// Plays of one round and the trace row recorded after it.
#[derive(Debug, Clone, PartialEq)]
pub struct FullInfoRound {
    pub f: Vec<f64>,
    pub x: Vec<f64>,
    pub row: TraceRow,
}

impl FullInfoMatch {
    pub fn new(a: &PayoffMatrix, horizon: usize, opponent: Opponent, mixing: bool) -> Result<Self> {
        if horizon < 2 {
            return Err(invalid("a match needs at least two rounds"));
        }
        let (n, m) = (a.rows(), a.cols());
        let uniform_x = vec![1.0 / m as f64; m];
        let uniform_f = vec![1.0 / n as f64; n];
        let row = FullInfoPlayer::new(Side::Row, horizon, &a.mul_vec(&uniform_x), mixing)?;
        let row_cert = GameCertificate::new(n, horizon, row.beta());
        let column = match opponent {
            Opponent::Adaptive => {
                let obs0 = negate(&a.vec_mul(&uniform_f));
                let player = FullInfoPlayer::new(Side::Column, horizon, &obs0, mixing)?;
                let cert = GameCertificate::new(m, horizon, player.beta());
                ColumnState::Adaptive(Box::new((player, cert)))
            }
            Opponent::Fixed(x) => {
                check_len(m, x.len())?;
                check_distribution(&x)?;
                ColumnState::Fixed(x)
            }
            Opponent::UniformRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let x = random_vertex(&mut rng, m);
                ColumnState::Random(Box::new(rng), x)
            }
            Opponent::MirrorDescent { eta } => {
                if !(eta.is_finite() && eta > 0.0) {
                    return Err(invalid(format!("step size must be positive, got {eta}")));
                }
                ColumnState::MirrorDescent(SimplexPoint::uniform(m), eta)
            }
        };
        Ok(Self {
            matrix: a.clone(),
            horizon,
            row,
            row_cert,
            column,
            mean_f: RunningMean::new(n),
            mean_x: RunningMean::new(m),
            round: 0,
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn is_finished(&self) -> bool {
        self.round >= self.horizon
    }

    pub fn row_player(&self) -> &FullInfoPlayer {
        &self.row
    }

    pub fn column_player(&self) -> Option<&FullInfoPlayer> {
        match &self.column {
            ColumnState::Adaptive(state) => Some(&state.0),
            _ => None,
        }
    }

    /// Plays one round: both plays are fixed, both observations computed,
    /// then both players update.
    pub fn step(&mut self) -> Result<FullInfoRound> {
        if self.is_finished() {
            return Err(invalid("the match is over"));
        }
        let f = self.row.play().to_vec();
        let x = self.column.play().to_vec();
        let row_obs = self.matrix.mul_vec(&x);
        let col_obs = negate(&self.matrix.vec_mul(&f));

        let eta_row = self.row.current_eta();
        let record = self.row.step(&row_obs)?;
        self.row_cert.push(&record);

        let (eta_col, col_terms) = match &mut self.column {
            ColumnState::Adaptive(state) => {
                let (player, cert) = &mut **state;
                let eta = player.current_eta();
                cert.push(&player.step(&col_obs)?);
                (eta, (cert.lhs(), cert.rhs()))
            }
            ColumnState::Fixed(_) => (f64::NAN, (f64::NAN, f64::NAN)),
            ColumnState::Random(rng, x) => {
                *x = random_vertex(rng, self.matrix.cols());
                (f64::NAN, (f64::NAN, f64::NAN))
            }
            ColumnState::MirrorDescent(point, eta) => {
                *point = point.exp_update(&col_obs, *eta)?;
                (*eta, (f64::NAN, f64::NAN))
            }
        };

        self.mean_f.push(&f);
        self.mean_x.push(&x);
        self.round += 1;
        let gap = bilinear_gap(&self.matrix, &self.mean_f.mean(), &self.mean_x.mean())?;
        let row = TraceRow {
            t: self.round,
            eta_row,
            eta_col,
            gap,
            cert_lhs_row: self.row_cert.lhs(),
            cert_rhs_row: self.row_cert.rhs(),
            cert_lhs_col: col_terms.0,
            cert_rhs_col: col_terms.1,
        };
        Ok(FullInfoRound { f, x, row })
    }

    pub fn row_certificate(&self) -> &GameCertificate {
        &self.row_cert
    }

    pub fn column_certificate(&self) -> Option<&GameCertificate> {
        match &self.column {
            ColumnState::Adaptive(state) => Some(&state.1),
            _ => None,
        }
    }

    /// Plays the remaining rounds and summarizes the match.
    pub fn finish(mut self) -> Result<MatchResult> {
        let mut trace = Vec::with_capacity(self.horizon - self.round);
        let mut row_passed = 0;
        let mut col_passed = 0;
        while !self.is_finished() {
            let round = self.step()?;
            row_passed += usize::from(self.row_cert.holds());
            col_passed += usize::from(self.column_certificate().is_some_and(|c| c.holds()));
            trace.push(round.row);
        }
        let (f_bar, x_bar) = (self.mean_f.mean(), self.mean_x.mean());
        let gap = bilinear_gap(&self.matrix, &f_bar, &x_bar)?;
        let row = CertificateSummary::from_certificate(&self.row_cert, row_passed);
        let col = self
            .column_certificate()
            .map(|c| CertificateSummary::from_certificate(c, col_passed));
        Ok(MatchResult {
            trace,
            f_bar,
            x_bar,
            gap,
            row,
            col,
        })
    }
}

/// Both players follow the prescribed dynamics with mixing.
pub fn run_full_info_match(a: &PayoffMatrix, horizon: usize) -> Result<MatchResult> {
    FullInfoMatch::new(a, horizon, Opponent::Adaptive, true)?.finish()
}

/// Player I follows the prescribed dynamics against `opponent`.
pub fn run_against(
    a: &PayoffMatrix,
    horizon: usize,
    opponent: Opponent,
    mixing: bool,
) -> Result<MatchResult> {
    FullInfoMatch::new(a, horizon, opponent, mixing)?.finish()
}

pub(crate) fn check_distribution(x: &[f64]) -> Result<()> {
    check_finite(x, "mixed strategy")?;
    let total: f64 = x.iter().sum();
    if x.iter().any(|v| *v < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(crate::error::Error::Domain(
            "not a probability vector".into(),
        ));
    }
    Ok(())
}

pub(crate) fn negate(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

fn random_vertex(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut x = vec![0.0; m];
    x[rng.gen_range(0..m)] = 1.0;
    x
}
