//! Experiment configuration: `key=value` files merged with command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum ExperimentKind {
    MirrorProx,
    Holder,
    Saddle,
    Game,
    GameBandit,
    Cvxprog,
    Maxflow,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::MirrorProx => "mirror-prox",
            ExperimentKind::Holder => "holder",
            ExperimentKind::Saddle => "saddle",
            ExperimentKind::Game => "game",
            ExperimentKind::GameBandit => "game-bandit",
            ExperimentKind::Cvxprog => "cvxprog",
            ExperimentKind::Maxflow => "maxflow",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        <Self as clap::ValueEnum>::from_str(s, false)
            .map_err(|_| invalid(format!("unknown experiment kind {s:?}")))
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub matrix: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub program: Option<PathBuf>,
    pub rounds: Option<usize>,
    pub seed: u64,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub target: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub out: Option<PathBuf>,
    pub mixing: bool,
}

/// Partially specified settings; later layers override earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigValues {
    pub kind: Option<ExperimentKind>,
    pub matrix: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub program: Option<PathBuf>,
    pub rounds: Option<usize>,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub alpha: Option<f64>,
    pub target: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub out: Option<PathBuf>,
    pub no_mixing: Option<bool>,
}

fn parse_value<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse {
        line,
        message: format!("bad value {value:?} for `{key}`"),
    })
}

impl ConfigValues {
    /// Reads `key=value` lines; `#` starts a comment. Relative paths are
    /// resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut out = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or_default().trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line,
                message: "expected key=value".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let path = || base_dir.join(value);
            match key {
                "kind" => out.kind = Some(parse_value(line, key, value)?),
                "matrix" => out.matrix = Some(path()),
                "graph" => out.graph = Some(path()),
                "program" => out.program = Some(path()),
                "rounds" => out.rounds = Some(parse_value(line, key, value)?),
                "seed" => out.seed = Some(parse_value(line, key, value)?),
                "delta" => out.delta = Some(parse_value(line, key, value)?),
                "epsilon" => out.epsilon = Some(parse_value(line, key, value)?),
                "alpha" => out.alpha = Some(parse_value(line, key, value)?),
                "radius" => out.radius = Some(parse_value(line, key, value)?),
                "target" => {
                    let parts: Result<Vec<f64>> = value
                        .split(',')
                        .map(|v| parse_value(line, key, v.trim()))
                        .collect();
                    out.target = Some(parts?);
                }
                "out" => out.out = Some(path()),
                "no-mixing" => out.no_mixing = Some(parse_value(line, key, value)?),
                other => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        Ok(out)
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: Self) -> Self {
        Self {
            kind: top.kind.or(self.kind),
            matrix: top.matrix.or(self.matrix),
            graph: top.graph.or(self.graph),
            program: top.program.or(self.program),
            rounds: top.rounds.or(self.rounds),
            seed: top.seed.or(self.seed),
            delta: top.delta.or(self.delta),
            epsilon: top.epsilon.or(self.epsilon),
            alpha: top.alpha.or(self.alpha),
            target: top.target.or(self.target),
            radius: top.radius.or(self.radius),
            out: top.out.or(self.out),
            no_mixing: top.no_mixing.or(self.no_mixing),
        }
    }

    /// Checks that the fields the kind needs are present.
    pub fn build(self) -> Result<ExperimentConfig> {
        let kind = self
            .kind
            .ok_or_else(|| invalid("experiment kind is required"))?;
        let need = |present: bool, what: &str| {
            if present {
                Ok(())
            } else {
                Err(invalid(format!("`{kind}` needs {what}")))
            }
        };
        match kind {
            ExperimentKind::MirrorProx => need(self.rounds.is_some(), "--rounds")?,
            ExperimentKind::Holder => {
                need(self.rounds.is_some(), "--rounds")?;
                need(self.alpha.is_some(), "alpha")?;
            }
            ExperimentKind::Saddle | ExperimentKind::Game | ExperimentKind::GameBandit => {
                need(self.rounds.is_some(), "--rounds")?;
                need(self.matrix.is_some(), "--matrix")?;
            }
            ExperimentKind::Cvxprog => {
                need(self.program.is_some(), "a program file")?;
                need(self.epsilon.is_some(), "--epsilon")?;
            }
            ExperimentKind::Maxflow => {
                need(self.graph.is_some(), "--graph")?;
                need(self.epsilon.is_some(), "--epsilon")?;
            }
        }
        let min_rounds = match kind {
            ExperimentKind::Game | ExperimentKind::GameBandit => 2,
            _ => 1,
        };
        if let Some(t) = self.rounds {
            if t < min_rounds {
                return Err(invalid(format!(
                    "`{kind}` needs at least {min_rounds} rounds"
                )));
            }
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(invalid(format!("alpha must lie in [0, 1], got {a}")));
            }
        }
        Ok(ExperimentConfig {
            kind,
            matrix: self.matrix,
            graph: self.graph,
            program: self.program,
            rounds: self.rounds,
            seed: self.seed.unwrap_or(0),
            delta: self.delta,
            epsilon: self.epsilon,
            alpha: self.alpha,
            target: self.target,
            radius: self.radius,
            out: self.out,
            mixing: !self.no_mixing.unwrap_or(false),
        })
    }
}
