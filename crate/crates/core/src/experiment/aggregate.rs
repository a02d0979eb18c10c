//! Order-stable reduction of trial outcomes into mean regret curves.

use crate::error::{Error, Result};
use crate::experiment::runner::TrialOutcome;
use crate::policy::Strategy;

/// Mean cumulative projection regret per step with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub strategy: Strategy,
    pub trials: u64,
    /// `mean[t-1]` is the mean cumulative projection regret after step `t`.
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Percentage of trials that settled on an optimal arm (finite sets only).
    pub best_arm_pct: Option<f64>,
    pub final_standard_regret: f64,
    pub k: usize,
    pub delta_dk: DeltaStats,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl AggregateCurve {
    pub fn horizon(&self) -> usize {
        self.mean.len()
    }

    /// Mean cumulative regret at step `t` (1-based).
    pub fn at(&self, t: usize) -> Option<f64> {
        t.checked_sub(1).and_then(|i| self.mean.get(i).copied())
    }

    pub fn final_mean(&self) -> f64 {
        *self.mean.last().expect("curves are nonempty")
    }

    pub fn final_stderr(&self) -> f64 {
        *self.stderr.last().expect("curves are nonempty")
    }
}

/// Streaming accumulator. Folding the same outcomes in the same order gives
/// bit-identical results regardless of how they were produced.
#[derive(Debug, Clone)]
pub struct Accumulator {
    strategy: Strategy,
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
    best_hits: u64,
    best_eligible: u64,
    std_regret_sum: f64,
    k: usize,
    delta_min: f64,
    delta_max: f64,
    delta_sum: f64,
}

impl Accumulator {
    pub fn new(strategy: Strategy) -> Self {
        Accumulator {
            strategy,
            n: 0,
            mean: Vec::new(),
            m2: Vec::new(),
            best_hits: 0,
            best_eligible: 0,
            std_regret_sum: 0.0,
            k: 0,
            delta_min: f64::INFINITY,
            delta_max: f64::NEG_INFINITY,
            delta_sum: 0.0,
        }
    }

    pub fn push(&mut self, outcome: &TrialOutcome) -> Result<()> {
        let curve = &outcome.cum_projection_regret;
        if self.n == 0 {
            if curve.is_empty() {
                return Err(Error::invalid("trial outcome has an empty regret curve"));
            }
            self.mean = vec![0.0; curve.len()];
            self.m2 = vec![0.0; curve.len()];
        } else if curve.len() != self.mean.len() {
            return Err(Error::invalid(format!(
                "trial horizon {} differs from {}",
                curve.len(),
                self.mean.len()
            )));
        }
        self.n += 1;
        let n = self.n as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(curve) {
            let delta = x - *m;
            *m += delta / n;
            *s += delta * (x - *m);
        }
        if let Some(found) = outcome.best_arm_found {
            self.best_eligible += 1;
            self.best_hits += found as u64;
        }
        self.std_regret_sum += outcome.final_standard_regret;
        self.k = self.k.max(outcome.k);
        self.delta_min = self.delta_min.min(outcome.delta_dk);
        self.delta_max = self.delta_max.max(outcome.delta_dk);
        self.delta_sum += outcome.delta_dk;
        Ok(())
    }

    pub fn finish(self) -> Result<AggregateCurve> {
        if self.n == 0 {
            return Err(Error::invalid("aggregate needs at least one trial"));
        }
        let n = self.n as f64;
        let stderr = if self.n < 2 {
            vec![0.0; self.mean.len()]
        } else {
            self.m2
                .iter()
                .map(|&s| (s.max(0.0) / (n - 1.0)).sqrt() / n.sqrt())
                .collect()
        };
        let best_arm_pct = (self.best_eligible > 0)
            .then(|| 100.0 * self.best_hits as f64 / self.best_eligible as f64);
        Ok(AggregateCurve {
            strategy: self.strategy,
            trials: self.n,
            mean: self.mean,
            stderr,
            best_arm_pct,
            final_standard_regret: self.std_regret_sum / n,
            k: self.k,
            delta_dk: DeltaStats {
                min: self.delta_min,
                mean: self.delta_sum / n,
                max: self.delta_max,
            },
        })
    }
}

/// Aggregate outcomes in the given (trial) order.
pub fn aggregate<'a>(
    strategy: Strategy,
    outcomes: impl IntoIterator<Item = &'a TrialOutcome>,
) -> Result<AggregateCurve> {
    let mut acc = Accumulator::new(strategy);
    for o in outcomes {
        acc.push(o)?;
    }
    acc.finish()
}
