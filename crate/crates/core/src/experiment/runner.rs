//! Instance generation and the select → observe → update trial loop.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::decision_set::{DecisionSet, EntropyBall, FiniteSet};
use crate::environment::{Environment, Oracle};
use crate::error::{Error, Result};
use crate::experiment::aggregate::{AggregateCurve, Accumulator};
use crate::experiment::config::{ExperimentConfig, Setting};
use crate::experiment::seed::{trial_seed, TrialStreams};
use crate::linalg::{min_eigen_in_span, range_outside_span, Projector, OPERATIONAL_TOL};
use crate::policy::{PolicyConfig, PolicyState, Strategy};
use crate::wine::{build_wine_decision_set, load_wine_csv, WineOptions, WineRecord};

/// Redraws allowed when an instance violates the modelling assumptions.
pub const MAX_REDRAWS: usize = 100;

/// A projection regret at or below this counts as pulling an optimal arm.
pub const OPTIMAL_ARM_TOL: f64 = 1e-9;

/// Steps at the end of a trial inspected by the best-arm metric.
pub const BEST_ARM_WINDOW: usize = 200;

/// Fraction of the window the optimal arm must exceed.
pub const BEST_ARM_FRACTION: f64 = 0.9;

/// One fixed problem instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub env: Environment,
    pub set: DecisionSet,
    /// `δ_{D_k}`: smallest eigenvalue of `Σ_{x ∈ D_k} xxᵀ` on the span.
    pub delta_dk: f64,
}

impl Instance {
    pub fn projector(&self) -> &Projector {
        self.env.projector()
    }

    pub fn span_dim(&self) -> usize {
        self.set.span_dim()
    }
}

fn uniform_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0))
}

fn uniform_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    // column-major fill, matching `from_fn` order
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// `δ_{D_k}` for a decision set.
pub fn delta_dk(set: &DecisionSet) -> Result<f64> {
    let dk = set.dk_vectors();
    let d = set.dim();
    let mut gram = DMatrix::zeros(d, d);
    for x in &dk {
        gram.ger(1.0, x, x, 1.0);
    }
    min_eigen_in_span(&gram, &dk)
}

fn finish_instance(env: Environment, set: DecisionSet) -> Result<Instance> {
    let dk = set.dk_vectors();
    let outside = range_outside_span(env.projector(), &dk)?;
    if outside > OPERATIONAL_TOL {
        return Err(Error::AssumptionViolated(format!(
            "target subspace is not inside the span of the arms (residual {outside:e})"
        )));
    }
    let delta_dk = delta_dk(&set)?;
    Ok(Instance { env, set, delta_dk })
}

fn try_synthetic<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Result<Instance> {
    let d = config.d;
    let s_bound = (d as f64).sqrt();
    let set = match config.setting {
        Setting::A | Setting::B => {
            let arms: Vec<_> = (0..config.num_arms).map(|_| uniform_vector(rng, d)).collect();
            DecisionSet::Finite(FiniteSet::with_norm_bound(arms, s_bound)?)
        }
        Setting::C => DecisionSet::EntropyBall(EntropyBall::new(d, config.entropy_budget)?),
        Setting::Wine => unreachable!("wine instances are built from data"),
    };
    let theta = uniform_vector(rng, d);
    let projector = match config.setting {
        Setting::B => Projector::diagonal(d, config.u)?,
        _ => Projector::from_basis(&uniform_matrix(rng, d, config.u))?,
    };
    let env = Environment::synthetic(theta, projector, config.vartheta, s_bound)?;
    finish_instance(env, set)
}

/// Draw a synthetic instance (settings a, b, c), redrawing when the sample
/// violates an assumption (zero projected parameter, degenerate basis).
pub fn generate_setting<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Result<Instance> {
    if config.setting == Setting::Wine {
        return Err(Error::invalid("the wine setting is generated from data, see Experiment"));
    }
    let mut last = None;
    for _ in 0..MAX_REDRAWS {
        match try_synthetic(config, rng) {
            Ok(inst) => return Ok(inst),
            Err(e @ (Error::AssumptionViolated(_) | Error::DegenerateBasis(_))) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(Error::AssumptionViolated(format!(
        "no valid instance after {MAX_REDRAWS} draws (last: {})",
        last.expect("at least one draw failed")
    )))
}

pub fn generate_wine_instance<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    records: &[WineRecord],
    rng: &mut R,
) -> Result<Instance> {
    let wine = build_wine_decision_set(
        records,
        rng,
        WineOptions {
            arms: config.num_arms,
            standardize: config.wine_standardize,
        },
    )?;
    let env = Environment::tabular(wine.arms, wine.projector, config.vartheta, config.wine_noise)?;
    finish_instance(env, DecisionSet::Finite(wine.set))
}

/// Arm identity in a step log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArmId {
    Index(usize),
    /// FNV-1a over the coordinate bit patterns of a point arm.
    Hash(u64),
}

impl ArmId {
    pub fn of_point(x: &DVector<f64>) -> Self {
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for v in x.iter() {
            for b in v.to_bits().to_le_bytes() {
                h = (h ^ b as u64).wrapping_mul(0x0100_0000_01b3);
            }
        }
        ArmId::Hash(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub arm: ArmId,
    pub explored: bool,
    pub observed_return: f64,
    pub projection_regret: f64,
    pub standard_regret: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub strategy: Strategy,
    pub trial_seed: u64,
    pub steps: Vec<StepRecord>,
    pub best_projection_value: f64,
    /// Index of the best projection arm on finite sets.
    pub best_projection_arm: Option<usize>,
    pub delta_dk: f64,
    pub k: usize,
    pub finite: bool,
}

/// The part of a trial the aggregates need.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub cum_projection_regret: Vec<f64>,
    pub final_standard_regret: f64,
    /// Whether an optimal arm took more than 90% of the final window (finite sets only).
    pub best_arm_found: Option<bool>,
    pub delta_dk: f64,
    pub k: usize,
}

impl TrialRecord {
    pub fn cumulative_projection_regret(&self) -> Vec<f64> {
        self.steps
            .iter()
            .scan(0.0, |acc, s| {
                *acc += s.projection_regret;
                Some(*acc)
            })
            .collect()
    }

    /// Whether an optimal arm was pulled in more than 90% of the last
    /// `min(200, n)` steps. `None` for infinite sets.
    pub fn best_arm_found(&self) -> Option<bool> {
        if !self.finite {
            return None;
        }
        let window = BEST_ARM_WINDOW.min(self.steps.len());
        let hits = self.steps[self.steps.len() - window..]
            .iter()
            .filter(|s| s.projection_regret <= OPTIMAL_ARM_TOL)
            .count();
        Some(hits as f64 > BEST_ARM_FRACTION * window as f64)
    }

    pub fn outcome(&self) -> TrialOutcome {
        TrialOutcome {
            cum_projection_regret: self.cumulative_projection_regret(),
            final_standard_regret: self.steps.iter().map(|s| s.standard_regret).sum(),
            best_arm_found: self.best_arm_found(),
            delta_dk: self.delta_dk,
            k: self.k,
        }
    }
}

/// A configuration with any data it needs loaded.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    wine: Option<Arc<Vec<WineRecord>>>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let wine = match config.setting {
            Setting::Wine => {
                let path = config.wine_csv.as_ref().expect("validated");
                Some(Arc::new(load_wine_csv(path)?))
            }
            _ => None,
        };
        Ok(Experiment { config, wine })
    }

    /// Use already-loaded wine records instead of reading `wine_csv`.
    pub fn with_wine_records(config: ExperimentConfig, records: Arc<Vec<WineRecord>>) -> Result<Self> {
        config.validate()?;
        Ok(Experiment {
            config,
            wine: Some(records),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn wine_records(&self) -> Option<&[WineRecord]> {
        self.wine.as_deref().map(Vec::as_slice)
    }

    /// The instance of a trial; identical for every strategy.
    pub fn instance(&self, trial_seed: u64) -> Result<Instance> {
        let mut rng = TrialStreams::instance_only(trial_seed);
        self.instance_from(&mut rng)
    }

    fn instance_from<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Instance> {
        match &self.wine {
            Some(records) => generate_wine_instance(&self.config, records, rng),
            None => generate_setting(&self.config, rng),
        }
    }

    pub fn policy_config(&self, strategy: Strategy) -> PolicyConfig {
        PolicyConfig {
            strategy,
            alpha: self.config.alpha_per_strategy.get(strategy),
            lambda: self.config.lambda,
            schedule: self.config.schedule,
            ue_exploit: self.config.ue_exploit,
            ue_pool_size: self.config.ue_candidate_pool,
        }
    }

    /// Run one trial; a pure function of `(config, strategy, trial_seed)`.
    pub fn run_trial(&self, strategy: Strategy, trial_seed: u64) -> Result<TrialRecord> {
        let mut streams = TrialStreams::new(trial_seed, strategy);
        let instance = self.instance_from(&mut streams.instance)?;
        run_on_instance(
            &instance,
            self.policy_config(strategy),
            self.config.horizon,
            trial_seed,
            &mut streams,
        )
    }
}

/// Aggregated curves of every configured strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub trial_seeds: Vec<u64>,
    pub curves: Vec<AggregateCurve>,
}

impl ExperimentResults {
    pub fn curve(&self, strategy: Strategy) -> Option<&AggregateCurve> {
        self.curves.iter().find(|c| c.strategy == strategy)
    }
}

impl Experiment {
    /// Per-trial seeds derived from `base_seed`.
    pub fn trial_seeds(&self) -> Vec<u64> {
        (0..self.config.trials)
            .map(|i| trial_seed(self.config.base_seed, i))
            .collect()
    }

    /// Run all trials of one strategy on the current rayon pool and reduce
    /// them in seed order, so the result does not depend on the pool width.
    pub fn run_strategy(&self, strategy: Strategy, seeds: &[u64]) -> Result<AggregateCurve> {
        let chunk = (rayon::current_num_threads() * 4).max(16);
        let mut acc = Accumulator::new(strategy);
        for block in seeds.chunks(chunk) {
            let outcomes = block
                .par_iter()
                .map(|&s| self.run_trial(strategy, s).map(|r| r.outcome()))
                .collect::<Result<Vec<_>>>()?;
            for o in &outcomes {
                acc.push(o)?;
            }
        }
        acc.finish()
    }

    pub fn run(&self) -> Result<ExperimentResults> {
        self.run_with_seeds(self.trial_seeds())
    }

    /// Run with explicit trial seeds, e.g. the ones recorded in a manifest.
    pub fn run_with_seeds(&self, trial_seeds: Vec<u64>) -> Result<ExperimentResults> {
        if trial_seeds.is_empty() {
            return Err(Error::invalid("no trial seeds"));
        }
        let curves = self
            .config
            .strategies
            .iter()
            .map(|&s| self.run_strategy(s, &trial_seeds))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentResults {
            config: self.config.clone(),
            trial_seeds,
            curves,
        })
    }
}

/// Run a policy for `horizon` steps on a fixed instance.
pub fn run_on_instance(
    instance: &Instance,
    policy_config: PolicyConfig,
    horizon: u64,
    trial_seed: u64,
    streams: &mut TrialStreams,
) -> Result<TrialRecord> {
    let env = &instance.env;
    let set = &instance.set;
    let projector = env.projector();
    let oracle: Oracle = env.oracle(set)?;
    let mut policy = PolicyState::new(policy_config, set, &mut streams.policy)?;

    let mut steps = Vec::with_capacity(horizon as usize);
    for t in 1..=horizon {
        let choice = policy.select(set, projector, &mut streams.policy, t)?;
        let r = env.observe_return(&choice.arm, &mut streams.noise);
        let (projection_regret, standard_regret) = env.step_regrets(&oracle, &choice.arm);
        policy.update(&choice, projector, r);
        steps.push(StepRecord {
            arm: match choice.arm.index {
                Some(i) => ArmId::Index(i),
                None => ArmId::of_point(&choice.arm.vector),
            },
            explored: choice.explored,
            observed_return: r,
            projection_regret,
            standard_regret,
        });
    }
    Ok(TrialRecord {
        strategy: policy_config.strategy,
        trial_seed,
        steps,
        best_projection_value: oracle.best_projection_value,
        best_projection_arm: oracle.best_projection_arm.index,
        delta_dk: instance.delta_dk,
        k: set.span_dim(),
        finite: set.is_finite(),
    })
}

/// Free-function form of [`Experiment::run_trial`]; loads data if needed.
pub fn run_trial(config: &ExperimentConfig, strategy: Strategy, trial_seed: u64) -> Result<TrialRecord> {
    Experiment::new(config.clone())?.run_trial(strategy, trial_seed)
}
