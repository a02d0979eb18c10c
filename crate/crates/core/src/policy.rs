//! Arm-selection strategies.
//!
//! * `gentry`: ε-greedy on the projected estimate `⟨P x, P θ̂⟩`, exploring
//!   uniformly over `D_k`.
//! * `curse`: the same loop exploiting the raw estimate `⟨x, θ̂⟩`.
//! * `regret`: the same loop, but the ridge estimator is fed projected arms
//!   `P x` instead of `x`.
//! * `ue`: uncertainty-ellipsoid rule `r̄(x) + α·sqrt(log t · min{d log t, |D|})·‖x‖_{V⁻¹}`.
//!
//! The estimate used at step `t` is the one after `t - 1` updates.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::decision_set::{DecisionSet, Maximizer, DEFAULT_BALL_TOL};
use crate::environment::Arm;
use crate::error::{Error, Result};
use crate::linalg::{Projector, RidgeState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    /// `min{1, αk/t}`
    Finite,
    /// `min{1, αk/t^{1/3}}`
    Infinite,
    /// `min{1, αk/√t}`
    Smooth,
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "finite" => Ok(ScheduleKind::Finite),
            "infinite" => Ok(ScheduleKind::Infinite),
            "smooth" => Ok(ScheduleKind::Smooth),
            other => Err(Error::invalid(format!("unknown schedule `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub kind: ScheduleKind,
    pub alpha: f64,
    pub k: usize,
}

impl EpsilonSchedule {
    pub fn new(kind: ScheduleKind, alpha: f64, k: usize) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        if k == 0 {
            return Err(Error::invalid("span dimension k must be positive"));
        }
        Ok(EpsilonSchedule { kind, alpha, k })
    }

    /// Exploration probability at step `t ≥ 1`.
    pub fn value(&self, t: u64) -> Result<f64> {
        if t == 0 {
            return Err(Error::invalid("exploration schedule is defined for t >= 1"));
        }
        let t = t as f64;
        let denom = match self.kind {
            ScheduleKind::Finite => t,
            ScheduleKind::Infinite => t.cbrt(),
            ScheduleKind::Smooth => t.sqrt(),
        };
        Ok((self.alpha * self.k as f64 / denom).min(1.0))
    }
}

/// Free-function form of [`EpsilonSchedule::value`].
pub fn epsilon_value(schedule: &EpsilonSchedule, t: u64) -> Result<f64> {
    schedule.value(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Gentry,
    Curse,
    Regret,
    Ue,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Gentry, Strategy::Curse, Strategy::Regret, Strategy::Ue];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Gentry => "gentry",
            Strategy::Curse => "curse",
            Strategy::Regret => "regret",
            Strategy::Ue => "ue",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gentry" => Ok(Strategy::Gentry),
            "curse" => Ok(Strategy::Curse),
            "regret" => Ok(Strategy::Regret),
            "ue" => Ok(Strategy::Ue),
            other => Err(Error::invalid(format!("unknown strategy `{other}`"))),
        }
    }
}

/// Exploit term of the UE objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UeExploit {
    /// `⟨P x, P θ̂⟩`
    #[default]
    Projected,
    /// `⟨x, θ̂⟩`
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub strategy: Strategy,
    pub alpha: f64,
    pub lambda: f64,
    pub schedule: ScheduleKind,
    pub ue_exploit: UeExploit,
    /// Random support points in the UE candidate pool on infinite sets.
    pub ue_pool_size: usize,
}

/// What a policy pulled at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub arm: Arm,
    /// Pulled from the random branch.
    pub explored: bool,
    /// Position in `D_k` of a randomly pulled arm.
    pub dk_slot: Option<usize>,
}

/// Per-trial state of one strategy.
#[derive(Debug, Clone)]
pub struct PolicyState {
    config: PolicyConfig,
    ridge: RidgeState,
    schedule: Option<EpsilonSchedule>,
    /// `N_t(x)` per arm for finite sets.
    counts: Vec<u64>,
    /// `Ñ_t(x)` per `D_k` slot: pulls from the random branch.
    random_counts: Vec<u64>,
    ue_pool: Vec<DVector<f64>>,
    dim: usize,
}

impl PolicyState {
    /// Fresh state for one trial. The UE candidate pool on infinite sets is
    /// drawn here from `rng`.
    pub fn new<R: Rng + ?Sized>(
        config: PolicyConfig,
        set: &DecisionSet,
        rng: &mut R,
    ) -> Result<Self> {
        let dim = set.dim();
        let k = set.span_dim();
        let ridge = RidgeState::new(dim, config.lambda)?;
        let schedule = match config.strategy {
            Strategy::Ue => {
                if !(config.alpha >= 0.0) || !config.alpha.is_finite() {
                    return Err(Error::invalid("UE bonus weight must be >= 0"));
                }
                None
            }
            _ => Some(EpsilonSchedule::new(config.schedule, config.alpha, k)?),
        };
        let mut ue_pool = Vec::new();
        if config.strategy == Strategy::Ue {
            if let DecisionSet::EntropyBall(ball) = set {
                for _ in 0..config.ue_pool_size {
                    let dir = DVector::<f64>::from_fn(dim, |_, _| rng.sample(StandardNormal));
                    ue_pool.push(ball.linear_max(&dir, DEFAULT_BALL_TOL)?);
                }
            }
        }
        Ok(PolicyState {
            config,
            ridge,
            schedule,
            counts: vec![0; set.len().unwrap_or(0)],
            random_counts: vec![0; k],
            ue_pool,
            dim,
        })
    }

    pub fn config(&self) -> &PolicyConfig {
        &self.config
    }

    pub fn strategy(&self) -> Strategy {
        self.config.strategy
    }

    /// The estimator: `θ̂` for gentry/curse/ue, `θ̃` (projected arms) for regret.
    pub fn ridge(&self) -> &RidgeState {
        &self.ridge
    }

    pub fn schedule(&self) -> Option<&EpsilonSchedule> {
        self.schedule.as_ref()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn random_counts(&self) -> &[u64] {
        &self.random_counts
    }

    pub fn ue_pool(&self) -> &[DVector<f64>] {
        &self.ue_pool
    }

    /// Linear objective maximized by the exploit branch.
    pub fn exploit_direction(&self, projector: &Projector) -> DVector<f64> {
        let est = self.ridge.theta_hat();
        match self.config.strategy {
            Strategy::Gentry | Strategy::Regret => projector.project(est),
            Strategy::Curse => est.clone(),
            Strategy::Ue => match self.config.ue_exploit {
                UeExploit::Projected => projector.project(est),
                UeExploit::Raw => est.clone(),
            },
        }
    }

    fn to_arm(set: &DecisionSet, m: Maximizer) -> Arm {
        match m {
            Maximizer::Index(i) => {
                let DecisionSet::Finite(fs) = set else { unreachable!() };
                Arm::indexed(i, fs.arms()[i].clone())
            }
            Maximizer::Point(x) => Arm::point(x),
        }
    }

    /// Greedy arm of the ε-greedy strategies.
    pub fn exploit_arm(&self, set: &DecisionSet, projector: &Projector) -> Result<Arm> {
        let c = self.exploit_direction(projector);
        Ok(Self::to_arm(set, set.linear_max(&c)?))
    }

    /// Choose the arm for step `t` (1-based).
    pub fn select<R: Rng + ?Sized>(
        &self,
        set: &DecisionSet,
        projector: &Projector,
        rng: &mut R,
        t: u64,
    ) -> Result<Choice> {
        match self.config.strategy {
            Strategy::Ue => Ok(Choice {
                arm: self.ue_select(set, projector, t)?,
                explored: false,
                dk_slot: None,
            }),
            _ => self.epsilon_greedy_select(set, projector, rng, t),
        }
    }

    fn epsilon_greedy_select<R: Rng + ?Sized>(
        &self,
        set: &DecisionSet,
        projector: &Projector,
        rng: &mut R,
        t: u64,
    ) -> Result<Choice> {
        let schedule = self.schedule.as_ref().expect("ε-greedy strategies carry a schedule");
        let eps = schedule.value(t)?;
        let u: f64 = rng.random();
        if u < eps {
            let slot = rng.random_range(0..set.span_dim());
            let (index, x) = set.dk_arm(slot);
            return Ok(Choice {
                arm: Arm {
                    index,
                    vector: x.clone(),
                },
                explored: true,
                dk_slot: Some(slot),
            });
        }
        Ok(Choice {
            arm: self.exploit_arm(set, projector)?,
            explored: false,
            dk_slot: None,
        })
    }

    /// Bonus multiplier `α·sqrt(log t · min{d log t, |D|})`.
    pub fn ue_bonus_weight(&self, set: &DecisionSet, t: u64) -> f64 {
        let log_t = (t.max(1) as f64).ln();
        let d_log_t = self.dim as f64 * log_t;
        let inner = match set.len() {
            Some(n) => d_log_t.min(n as f64),
            None => d_log_t,
        };
        self.config.alpha * (log_t * inner).sqrt()
    }

    /// UE objective for one arm.
    pub fn ue_score(&self, c: &DVector<f64>, weight: f64, x: &DVector<f64>) -> f64 {
        let bonus = if weight == 0.0 {
            0.0
        } else {
            weight * self.ridge.inverse_norm(x)
        };
        x.dot(c) + bonus
    }

    fn ue_select(&self, set: &DecisionSet, projector: &Projector, t: u64) -> Result<Arm> {
        let c = self.exploit_direction(projector);
        let weight = self.ue_bonus_weight(set, t);
        match set {
            DecisionSet::Finite(fs) => {
                let mut best = (0, f64::NEG_INFINITY);
                for (i, x) in fs.arms().iter().enumerate() {
                    let s = self.ue_score(&c, weight, x);
                    if s > best.1 {
                        best = (i, s);
                    }
                }
                Ok(Arm::indexed(best.0, fs.arms()[best.0].clone()))
            }
            DecisionSet::EntropyBall(ball) => {
                let support = ball.linear_max(&c, DEFAULT_BALL_TOL)?;
                let mut best: Option<(&DVector<f64>, f64)> = None;
                let candidates = self
                    .ue_pool
                    .iter()
                    .chain(std::iter::once(&support))
                    .chain(ball.dk_arms().iter());
                for x in candidates {
                    let s = self.ue_score(&c, weight, x);
                    if best.is_none_or(|(_, b)| s > b) {
                        best = Some((x, s));
                    }
                }
                Ok(Arm::point(best.expect("candidate pool is nonempty").0.clone()))
            }
        }
    }

    /// Feed back the observed return of `choice`.
    pub fn update(&mut self, choice: &Choice, projector: &Projector, reward: f64) {
        match self.config.strategy {
            Strategy::Regret => {
                let px = projector.project(&choice.arm.vector);
                self.ridge.update(&px, reward);
            }
            _ => self.ridge.update(&choice.arm.vector, reward),
        }
        if let Some(i) = choice.arm.index {
            if let Some(n) = self.counts.get_mut(i) {
                *n += 1;
            }
        }
        if let Some(slot) = choice.dk_slot {
            self.random_counts[slot] += 1;
        }
    }
}
