//! Partial-information dynamics: each player only sees scalar payoffs of
//! four `δ`-perturbations of its own strategy per round, and builds
//! two-point gradient estimates along a random tangent direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_finite, invalid, Result};
use crate::game::certificate::{GameCertificate, StepRecord};
use crate::game::full_info::negate;
use crate::game::matrix::PayoffMatrix;
use crate::game::{CertificateSummary, MatchResult, TraceRow};
use crate::linalg::{axpy, norm_inf, sub, RunningMean};
use crate::mirror::SimplexPoint;
use crate::saddle::bilinear_gap;

/// Default perturbation size before the mixing-floor clamp.
pub const DEFAULT_DELTA: f64 = 1e-6;

/// Orthonormal basis of `{v : Σ v_i = 0}` by the Helmert construction:
/// `u_k = (1, …, 1, -k, 0, …, 0) / √(k(k+1))` with `k` leading ones.
pub fn tangent_basis(n: usize) -> Result<Vec<Vec<f64>>> {
    if n < 2 {
        return Err(invalid(format!("tangent basis needs n >= 2, got {n}")));
    }
    Ok((1..n)
        .map(|k| {
            let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
            let mut u = vec![0.0; n];
            u[..k].iter_mut().for_each(|x| *x = scale);
            u[k] = -(k as f64) * scale;
            u
        })
        .collect())
}

/// `(n / 2δ)(r⁺ - r⁻) · u`
pub fn bandit_estimate(r_plus: f64, r_minus: f64, delta: f64, u: &[f64], n: usize) -> Vec<f64> {
    let scale = n as f64 / (2.0 * delta) * (r_plus - r_minus);
    u.iter().map(|x| scale * x).collect()
}

/// Step-size cap `1/(28 m √ln(mT))`.
pub fn bandit_eta_cap(opp_dim: usize, horizon: usize) -> f64 {
    1.0 / (28.0 * opp_dim as f64 * (opp_dim as f64 * horizon as f64).ln().sqrt())
}

/// `min{ √ln(nT) (√S_{t-1} - √S_{t-2}) / h_{t-1}, 1/(28 m √ln(mT)) }`
/// where `history = h_1..h_{t-1}`. A zero `h_{t-1}` (or an empty history)
/// gives the cap.
pub fn bandit_eta(history: &[f64], n: usize, opp_dim: usize, horizon: usize) -> f64 {
    let cap = bandit_eta_cap(opp_dim, horizon);
    let Some(&last) = history.last() else {
        return cap;
    };
    if last <= 0.0 {
        return cap;
    }
    let s_prev: f64 = history.iter().sum();
    let s_prev2 = s_prev - last;
    // (√a - √b)/(a - b) = 1/(√a + √b) without the cancellation
    let ratio = 1.0 / (s_prev.sqrt() + s_prev2.max(0.0).sqrt());
    ((n as f64 * horizon as f64).ln().sqrt() * ratio).min(cap)
}

/// Largest `δ` keeping `g' ± δu` inside the simplex.
pub fn max_delta(n: usize, horizon: usize) -> f64 {
    let beta = 1.0 / (horizon as f64 * horizon as f64);
    let widest = ((n - 1) as f64 / n as f64).sqrt();
    (beta / n as f64) / widest
}

/// Everything one bandit update observed.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditStep {
    /// Loss `â_t` charged this round, prediction `ā_{t-1}`.
    pub record: StepRecord,
    /// `ā_t`, the next prediction.
    pub estimate_bar: Vec<f64>,
    /// `i_{t-1}`
    pub prev_index: usize,
    /// `i_t`
    pub index: usize,
}

/// One bandit-feedback player; minimizes the scalar losses it is shown.
#[derive(Debug, Clone)]
pub struct BanditPlayer {
    horizon: usize,
    opp_dim: usize,
    beta: f64,
    delta: f64,
    basis: Vec<Vec<f64>>,
    g_prime: SimplexPoint,
    play: SimplexPoint,
    prev_index: usize,
    prev_bar: Vec<f64>,
    history: Vec<f64>,
    etas: Vec<f64>,
    rng: ChaCha8Rng,
}

impl BanditPlayer {
    /// `delta = None` picks `min(1e-6, max_delta)`; an explicit value above
    /// [`max_delta`] is rejected.
    pub fn new(
        n: usize,
        opp_dim: usize,
        horizon: usize,
        delta: Option<f64>,
        seed: u64,
    ) -> Result<Self> {
        let basis = tangent_basis(n)?;
        if opp_dim == 0 {
            return Err(invalid("opponent needs at least one action"));
        }
        if horizon < 2 {
            return Err(invalid("horizon must be at least 2"));
        }
        let bound = max_delta(n, horizon);
        let delta = match delta {
            None => DEFAULT_DELTA.min(bound),
            Some(d) if !(d.is_finite() && d > 0.0) => {
                return Err(invalid(format!("δ must be positive, got {d}")))
            }
            Some(d) if d > bound => {
                return Err(invalid(format!(
                    "δ = {d} exceeds the mixing-floor bound {bound} for n = {n}, T = {horizon}"
                )))
            }
            Some(d) => d,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prev_index = rng.gen_range(0..n - 1);
        let t = horizon as f64;
        Ok(Self {
            horizon,
            opp_dim,
            beta: 1.0 / (t * t),
            delta,
            basis,
            g_prime: SimplexPoint::uniform(n),
            play: SimplexPoint::uniform(n),
            prev_index,
            prev_bar: vec![0.0; n],
            history: Vec::new(),
            etas: Vec::new(),
            rng,
        })
    }

    pub fn dim(&self) -> usize {
        self.play.dim()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn play(&self) -> &[f64] {
        self.play.weights()
    }

    pub fn g_prime(&self) -> &SimplexPoint {
        &self.g_prime
    }

    /// `‖â_s - ā_{s-1}‖_∞²` per completed round.
    pub fn history(&self) -> &[f64] {
        &self.history
    }

    /// Step sizes `η_1..η_t` used so far.
    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    /// Step size for the current round.
    pub fn current_eta(&self) -> f64 {
        bandit_eta(&self.history, self.dim(), self.opp_dim, self.horizon)
    }

    /// Plays one round. `loss_of` returns the scalar loss of a strategy
    /// against the opponent's current play.
    pub fn step<F: Fn(&[f64]) -> f64>(&mut self, loss_of: F) -> Result<BanditStep> {
        let n = self.dim();
        let index = self.rng.gen_range(0..n - 1);
        let f = self.play.weights().to_vec();
        let probe = |u: &[f64], sign: f64| loss_of(&axpy(&f, sign * self.delta, u));
        let (u_prev, u_now) = (&self.basis[self.prev_index], &self.basis[index]);
        let (r_plus, r_minus) = (probe(u_prev, 1.0), probe(u_prev, -1.0));
        let (rb_plus, rb_minus) = (probe(u_now, 1.0), probe(u_now, -1.0));
        let estimate = bandit_estimate(r_plus, r_minus, self.delta, u_prev, n);
        let estimate_bar = bandit_estimate(rb_plus, rb_minus, self.delta, u_now, n);
        check_finite(&estimate, "estimate")?;
        check_finite(&estimate_bar, "estimate")?;

        let eta = self.current_eta();
        let secondary = self.g_prime.exp_update(&estimate, eta)?;
        let mixed = secondary.mix(self.beta);
        let miss = norm_inf(&sub(&estimate, &self.prev_bar));
        self.history.push(miss * miss);
        self.etas.push(eta);
        let next_play = mixed.exp_update(&estimate_bar, self.current_eta())?;

        let record = StepRecord {
            played: f,
            secondary: secondary.weights().to_vec(),
            mixed: mixed.weights().to_vec(),
            prev_mixed: self.g_prime.weights().to_vec(),
            loss: estimate,
            prediction: std::mem::replace(&mut self.prev_bar, estimate_bar.clone()),
            eta,
        };
        let prev_index = std::mem::replace(&mut self.prev_index, index);
        self.g_prime = mixed;
        self.play = next_play;
        Ok(BanditStep {
            record,
            estimate_bar,
            prev_index,
            index,
        })
    }
}

/// `(1/(n-1)) Σ_i bandit_estimate` over every basis direction at `f`, for
/// the scalar loss `loss_of`. For a linear loss `⟨·, a⟩` this equals
/// `(n/(n-1)) P a` with `P` the projection onto the tangent space.
pub fn enumerate_estimates<F: Fn(&[f64]) -> f64>(
    f: &[f64],
    delta: f64,
    basis: &[Vec<f64>],
    loss_of: F,
) -> Vec<f64> {
    let n = f.len();
    let mut total = vec![0.0; n];
    for u in basis {
        let r_plus = loss_of(&axpy(f, delta, u));
        let r_minus = loss_of(&axpy(f, -delta, u));
        for (t, e) in total
            .iter_mut()
            .zip(bandit_estimate(r_plus, r_minus, delta, u, n))
        {
            *t += e;
        }
    }
    let k = basis.len() as f64;
    total.iter().map(|t| t / k).collect()
}

/// `(n/(n-1)) (a - mean(a) 𝟙)`
pub fn scaled_tangent_projection(a: &[f64]) -> Vec<f64> {
    let n = a.len() as f64;
    let mean = a.iter().sum::<f64>() / n;
    a.iter().map(|x| n / (n - 1.0) * (x - mean)).collect()
}

/// Plays of one round and the trace row recorded after it.
#[derive(Debug, Clone)]
pub struct BanditRound {
    pub f: Vec<f64>,
    pub x: Vec<f64>,
    pub row_step: BanditStep,
    pub col_step: BanditStep,
    pub row: TraceRow,
}

/// A bandit-feedback match that can be advanced one round at a time.
#[derive(Debug, Clone)]
pub struct BanditMatch {
    matrix: PayoffMatrix,
    horizon: usize,
    row: BanditPlayer,
    col: BanditPlayer,
    row_cert: GameCertificate,
    col_cert: GameCertificate,
    mean_f: RunningMean,
    mean_x: RunningMean,
    round: usize,
}

impl BanditMatch {
    /// Player seeds are drawn from one generator seeded with `seed`.
    pub fn new(a: &PayoffMatrix, horizon: usize, delta: Option<f64>, seed: u64) -> Result<Self> {
        let (n, m) = (a.rows(), a.cols());
        let mut master = ChaCha8Rng::seed_from_u64(seed);
        let (row_seed, col_seed) = (master.gen::<u64>(), master.gen::<u64>());
        let row = BanditPlayer::new(n, m, horizon, delta, row_seed)?;
        let col = BanditPlayer::new(m, n, horizon, delta, col_seed)?;
        Ok(Self {
            matrix: a.clone(),
            horizon,
            row_cert: GameCertificate::new(n, horizon, row.beta()),
            col_cert: GameCertificate::new(m, horizon, col.beta()),
            row,
            col,
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

    pub fn row_player(&self) -> &BanditPlayer {
        &self.row
    }

    pub fn column_player(&self) -> &BanditPlayer {
        &self.col
    }

    /// Certificates on the estimated losses.
    pub fn row_certificate(&self) -> &GameCertificate {
        &self.row_cert
    }

    pub fn column_certificate(&self) -> &GameCertificate {
        &self.col_cert
    }

    pub fn step(&mut self) -> Result<BanditRound> {
        if self.is_finished() {
            return Err(invalid("the match is over"));
        }
        let f = self.row.play().to_vec();
        let x = self.col.play().to_vec();
        let ax = self.matrix.mul_vec(&x);
        let fa = negate(&self.matrix.vec_mul(&f));
        let eta_row = self.row.current_eta();
        let eta_col = self.col.current_eta();
        let row_step = self.row.step(|g| crate::linalg::dot(g, &ax))?;
        let col_step = self.col.step(|y| crate::linalg::dot(y, &fa))?;
        self.row_cert.push(&row_step.record);
        self.col_cert.push(&col_step.record);

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
            cert_rhs_row: self.row_cert.rhs_general(),
            cert_lhs_col: self.col_cert.lhs(),
            cert_rhs_col: self.col_cert.rhs_general(),
        };
        Ok(BanditRound {
            f,
            x,
            row_step,
            col_step,
            row,
        })
    }

    pub fn finish(mut self) -> Result<MatchResult> {
        let mut trace = Vec::with_capacity(self.horizon - self.round);
        let (mut row_passed, mut col_passed) = (0, 0);
        while !self.is_finished() {
            let round = self.step()?;
            row_passed += usize::from(self.row_cert.holds_general());
            col_passed += usize::from(self.col_cert.holds_general());
            trace.push(round.row);
        }
        let (f_bar, x_bar) = (self.mean_f.mean(), self.mean_x.mean());
        let gap = bilinear_gap(&self.matrix, &f_bar, &x_bar)?;
        let mut row = CertificateSummary::from_certificate(&self.row_cert, row_passed);
        row.rhs = self.row_cert.rhs_general();
        let mut col = CertificateSummary::from_certificate(&self.col_cert, col_passed);
        col.rhs = self.col_cert.rhs_general();
        Ok(MatchResult {
            trace,
            f_bar,
            x_bar,
            gap,
            row,
            col: Some(col),
        })
    }
}

pub fn run_bandit_match(
    a: &PayoffMatrix,
    horizon: usize,
    delta: Option<f64>,
    seed: u64,
) -> Result<MatchResult> {
    BanditMatch::new(a, horizon, delta, seed)?.finish()
}
