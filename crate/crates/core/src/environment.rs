//! Ground-truth reward model.
//!
//! A pulled arm `x` returns `⟨x, θ⟩ + η` with Gaussian noise `η`, while the
//! quantity being optimized is the projection reward `⟨P x, P θ⟩`. The
//! remainder `⟨(I-P) x, (I-P) θ⟩` is the corruption. In tabular mode each arm
//! carries its observed and projection values directly.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::decision_set::{DecisionSet, Maximizer};
use crate::error::{Error, Result};
use crate::linalg::Projector;

/// `‖P θ‖` at or below this is treated as zero.
pub const PROJECTED_THETA_TOL: f64 = 1e-8;

/// Slack allowed for negative regret against the entropy-ball oracle.
pub const NEGATIVE_REGRET_SLACK: f64 = 1e-10;

/// A concrete arm: its index in a finite set (if any) and its vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Arm {
    pub index: Option<usize>,
    pub vector: DVector<f64>,
}

impl Arm {
    pub fn indexed(index: usize, vector: DVector<f64>) -> Self {
        Arm {
            index: Some(index),
            vector,
        }
    }

    pub fn point(vector: DVector<f64>) -> Self {
        Arm {
            index: None,
            vector,
        }
    }
}

/// One wine in the tabular experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularArm {
    pub features: DVector<f64>,
    /// Corrupted rating: `projection_value - 4 · protected feature`.
    pub observed_value: f64,
    /// Original rating.
    pub projection_value: f64,
}

#[derive(Debug, Clone)]
pub enum RewardModel {
    Linear {
        theta: DVector<f64>,
        projected_theta: DVector<f64>,
    },
    Tabular {
        arms: Vec<TabularArm>,
        noisy: bool,
    },
}

#[derive(Debug, Clone)]
pub struct Environment {
    projector: Projector,
    noise_std: f64,
    model: RewardModel,
}

/// Best achievable values for one instance, computed once per trial.
#[derive(Debug, Clone)]
pub struct Oracle {
    pub best_projection_arm: Arm,
    pub best_projection_value: f64,
    pub best_standard_value: f64,
}

fn check_noise(noise_std: f64) -> Result<()> {
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::invalid(format!("noise level must be >= 0, got {noise_std}")));
    }
    Ok(())
}

impl Environment {
    /// Linear model with parameter `theta`, which must satisfy `‖θ‖ ≤ theta_bound`
    /// and `‖P θ‖ > 0`.
    pub fn synthetic(
        theta: DVector<f64>,
        projector: Projector,
        noise_std: f64,
        theta_bound: f64,
    ) -> Result<Self> {
        check_noise(noise_std)?;
        if theta.len() != projector.dim() {
            return Err(Error::invalid(format!(
                "theta has length {}, projector dimension is {}",
                theta.len(),
                projector.dim()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("theta has non-finite entries"));
        }
        if theta.norm() > theta_bound {
            return Err(Error::AssumptionViolated(format!(
                "‖θ‖ = {} exceeds the bound {theta_bound}",
                theta.norm()
            )));
        }
        let projected_theta = projector.project(&theta);
        if projected_theta.norm() <= PROJECTED_THETA_TOL {
            return Err(Error::AssumptionViolated(
                "projected parameter is zero; the objective is constant".into(),
            ));
        }
        Ok(Environment {
            projector,
            noise_std,
            model: RewardModel::Linear {
                theta,
                projected_theta,
            },
        })
    }

    /// Tabular model. `noisy` adds `N(0, noise_std²)` to observed values.
    pub fn tabular(
        arms: Vec<TabularArm>,
        projector: Projector,
        noise_std: f64,
        noisy: bool,
    ) -> Result<Self> {
        check_noise(noise_std)?;
        if arms.is_empty() {
            return Err(Error::invalid("tabular environment needs arms"));
        }
        if arms.iter().any(|a| a.features.len() != projector.dim()) {
            return Err(Error::invalid("tabular arm dimension does not match projector"));
        }
        Ok(Environment {
            projector,
            noise_std,
            model: RewardModel::Tabular { arms, noisy },
        })
    }

    pub fn projector(&self) -> &Projector {
        &self.projector
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn model(&self) -> &RewardModel {
        &self.model
    }

    pub fn theta(&self) -> Option<&DVector<f64>> {
        match &self.model {
            RewardModel::Linear { theta, .. } => Some(theta),
            RewardModel::Tabular { .. } => None,
        }
    }

    fn tabular_arm<'a>(arms: &'a [TabularArm], arm: &Arm) -> &'a TabularArm {
        let idx = arm.index.expect("tabular environments only accept indexed arms");
        &arms[idx]
    }

    /// Observed return of one pull. Always consumes exactly one normal draw in
    /// synthetic mode, so streams stay aligned across noise levels.
    pub fn observe_return<R: Rng + ?Sized>(&self, arm: &Arm, rng: &mut R) -> f64 {
        match &self.model {
            RewardModel::Linear { theta, .. } => {
                let z: f64 = rng.sample(StandardNormal);
                arm.vector.dot(theta) + self.noise_std * z
            }
            RewardModel::Tabular { arms, noisy } => {
                let base = Self::tabular_arm(arms, arm).observed_value;
                if *noisy {
                    let z: f64 = rng.sample(StandardNormal);
                    base + self.noise_std * z
                } else {
                    base
                }
            }
        }
    }

    /// Noise-free observed return `⟨x, θ⟩` (the observed value in tabular mode).
    pub fn expected_return(&self, arm: &Arm) -> f64 {
        match &self.model {
            RewardModel::Linear { theta, .. } => arm.vector.dot(theta),
            RewardModel::Tabular { arms, .. } => Self::tabular_arm(arms, arm).observed_value,
        }
    }

    /// Projection reward `⟨P x, P θ⟩`, evaluated as `⟨x, P θ⟩`.
    pub fn projection_reward(&self, arm: &Arm) -> f64 {
        match &self.model {
            RewardModel::Linear {
                projected_theta, ..
            } => arm.vector.dot(projected_theta),
            RewardModel::Tabular { arms, .. } => Self::tabular_arm(arms, arm).projection_value,
        }
    }

    /// Corruption `⟨(I-P) x, (I-P) θ⟩` (synthetic mode only).
    pub fn corruption(&self, arm: &Arm) -> Option<f64> {
        match &self.model {
            RewardModel::Linear { theta, .. } => {
                let q = self.projector.complement();
                Some((&q * &arm.vector).dot(&(&q * theta)))
            }
            RewardModel::Tabular { .. } => None,
        }
    }

    fn best_for(&self, set: &DecisionSet, c: &DVector<f64>) -> Result<Arm> {
        Ok(match set.linear_max(c)? {
            Maximizer::Index(i) => {
                let DecisionSet::Finite(fs) = set else { unreachable!() };
                Arm::indexed(i, fs.arms()[i].clone())
            }
            Maximizer::Point(x) => Arm::point(x),
        })
    }

    fn tabular_best(arms: &[TabularArm], value: impl Fn(&TabularArm) -> f64) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, a) in arms.iter().enumerate() {
            let v = value(a);
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    }

    /// The best projection arm and its projection reward.
    pub fn best_projection_arm(&self, set: &DecisionSet) -> Result<(Arm, f64)> {
        self.check_set(set)?;
        match &self.model {
            RewardModel::Linear {
                projected_theta, ..
            } => {
                let arm = self.best_for(set, projected_theta)?;
                let value = self.projection_reward(&arm);
                Ok((arm, value))
            }
            RewardModel::Tabular { arms, .. } => {
                let DecisionSet::Finite(fs) = set else { unreachable!() };
                let (i, v) = Self::tabular_best(arms, |a| a.projection_value);
                Ok((Arm::indexed(i, fs.arms()[i].clone()), v))
            }
        }
    }

    /// The best arm for the full (uncorrupted-objective) return and its value.
    pub fn best_standard_arm(&self, set: &DecisionSet) -> Result<(Arm, f64)> {
        self.check_set(set)?;
        match &self.model {
            RewardModel::Linear { theta, .. } => {
                let arm = self.best_for(set, theta)?;
                let value = self.expected_return(&arm);
                Ok((arm, value))
            }
            RewardModel::Tabular { arms, .. } => {
                let DecisionSet::Finite(fs) = set else { unreachable!() };
                let (i, v) = Self::tabular_best(arms, |a| a.observed_value);
                Ok((Arm::indexed(i, fs.arms()[i].clone()), v))
            }
        }
    }

    fn check_set(&self, set: &DecisionSet) -> Result<()> {
        if set.dim() != self.projector.dim() {
            return Err(Error::invalid("decision set dimension does not match environment"));
        }
        if let RewardModel::Tabular { arms, .. } = &self.model {
            if set.len() != Some(arms.len()) {
                return Err(Error::invalid(
                    "tabular environment needs a finite set with one arm per row",
                ));
            }
        }
        Ok(())
    }

    pub fn oracle(&self, set: &DecisionSet) -> Result<Oracle> {
        let (best_projection_arm, best_projection_value) = self.best_projection_arm(set)?;
        let (_, best_standard_value) = self.best_standard_arm(set)?;
        Ok(Oracle {
            best_projection_arm,
            best_projection_value,
            best_standard_value,
        })
    }

    /// `(projection regret, standard regret)` of pulling `arm`.
    pub fn step_regrets(&self, oracle: &Oracle, arm: &Arm) -> (f64, f64) {
        (
            oracle.best_projection_value - self.projection_reward(arm),
            oracle.best_standard_value - self.expected_return(arm),
        )
    }
}
