use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{ScheduleKind, Strategy, UeExploit};

/// Key under which a manifest records the per-trial seeds it resolved.
pub const RESOLVED_SEEDS_KEY: &str = "resolved_trial_seeds";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    /// Finite arms, projector from a random basis.
    A,
    /// Finite arms, diagonal projector dropping the last `d - u` coordinates.
    B,
    /// Entropy-ball decision set, projector from a random basis.
    C,
    /// Wine-quality arms with a corrupted rating.
    Wine,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Setting::A => "a",
            Setting::B => "b",
            Setting::C => "c",
            Setting::Wine => "wine",
        }
    }

    pub fn is_finite(self) -> bool {
        !matches!(self, Setting::C)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Ok(Setting::A),
            "b" => Ok(Setting::B),
            "c" => Ok(Setting::C),
            "wine" => Ok(Setting::Wine),
            other => Err(Error::Config(format!("unknown setting `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaPerStrategy {
    pub gentry: f64,
    pub curse: f64,
    pub regret: f64,
    pub ue: f64,
}

impl AlphaPerStrategy {
    pub fn get(&self, s: Strategy) -> f64 {
        match s {
            Strategy::Gentry => self.gentry,
            Strategy::Curse => self.curse,
            Strategy::Regret => self.regret,
            Strategy::Ue => self.ue,
        }
    }

    pub fn set(&mut self, s: Strategy, value: f64) {
        match s {
            Strategy::Gentry => self.gentry = value,
            Strategy::Curse => self.curse = value,
            Strategy::Regret => self.regret = value,
            Strategy::Ue => self.ue = value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label used in the summary file.
    pub name: String,
    pub setting: Setting,
    pub d: usize,
    /// Number of arms for the finite synthetic settings.
    #[serde(rename = "K")]
    pub num_arms: usize,
    pub u: usize,
    /// Standard deviation of the Gaussian return noise.
    pub vartheta: f64,
    pub alpha_per_strategy: AlphaPerStrategy,
    pub lambda: f64,
    pub horizon: u64,
    pub trials: u64,
    pub base_seed: u64,
    pub strategies: Vec<Strategy>,
    pub schedule: ScheduleKind,
    pub entropy_budget: f64,
    pub ue_candidate_pool: usize,
    pub ue_exploit: UeExploit,
    pub slope_t_min: u64,
    pub slope_t_max: u64,
    pub out_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wine_csv: Option<PathBuf>,
    #[serde(default)]
    pub wine_noise: bool,
    #[serde(default)]
    pub wine_standardize: bool,
}

impl ExperimentConfig {
    /// Defaults for one of the shipped experiments.
    pub fn preset(setting: Setting) -> Self {
        let finite_alpha = AlphaPerStrategy {
            gentry: 1.0,
            curse: 1.0,
            regret: 1.0,
            ue: 0.1,
        };
        let base = ExperimentConfig {
            name: format!("setting-{}", setting.name()),
            setting,
            d: 10,
            num_arms: 45,
            u: 5,
            vartheta: 0.5,
            alpha_per_strategy: finite_alpha,
            lambda: 1.0,
            horizon: 10_000,
            trials: 2000,
            base_seed: 20_200_101,
            strategies: Strategy::ALL.to_vec(),
            schedule: ScheduleKind::Finite,
            entropy_budget: 5.0,
            ue_candidate_pool: 64,
            ue_exploit: UeExploit::Projected,
            slope_t_min: 1000,
            slope_t_max: 10_000,
            out_dir: PathBuf::from(format!("results/{}", setting.name())),
            wine_csv: None,
            wine_noise: false,
            wine_standardize: false,
        };
        match setting {
            Setting::A | Setting::B => base,
            Setting::C => ExperimentConfig {
                d: 4,
                num_arms: 0,
                u: 2,
                alpha_per_strategy: AlphaPerStrategy {
                    gentry: 0.01,
                    curse: 0.01,
                    regret: 0.1,
                    ue: 0.01,
                },
                schedule: ScheduleKind::Infinite,
                ..base
            },
            Setting::Wine => ExperimentConfig {
                name: "wine".into(),
                d: crate::wine::WINE_ARM_DIM,
                num_arms: crate::wine::DEFAULT_WINE_ARMS,
                u: crate::wine::WINE_ARM_DIM - 1,
                wine_csv: Some(PathBuf::from("data/winequality-white.csv")),
                ..base
            },
        }
    }

    /// Desk-scale variant: 200 trials.
    pub fn quick(mut self) -> Self {
        self.trials = 200;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.horizon == 0 {
            return fail("horizon must be >= 1".into());
        }
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if self.strategies.is_empty() {
            return fail("at least one strategy is required".into());
        }
        for s in &self.strategies {
            let a = self.alpha_per_strategy.get(*s);
            if !(a > 0.0) || !a.is_finite() {
                return fail(format!("alpha for {s} must be positive, got {a}"));
            }
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return fail(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.vartheta >= 0.0) || !self.vartheta.is_finite() {
            return fail(format!("vartheta must be >= 0, got {}", self.vartheta));
        }
        if self.d == 0 || self.u == 0 || self.u > self.d {
            return fail(format!("need 1 <= u <= d, got u={}, d={}", self.u, self.d));
        }
        match self.setting {
            Setting::A | Setting::B if self.num_arms == 0 => {
                return fail("K must be >= 1 for finite settings".into());
            }
            Setting::C if !(self.entropy_budget >= 0.0) => {
                return fail("entropy_budget must be >= 0".into());
            }
            Setting::C if self.strategies.contains(&Strategy::Ue) && self.ue_candidate_pool == 0 => {
                return fail("ue_candidate_pool must be >= 1 on the entropy ball".into());
            }
            Setting::Wine => {
                if self.d != crate::wine::WINE_ARM_DIM || self.u != crate::wine::WINE_ARM_DIM - 1 {
                    return fail(format!(
                        "wine arms have d={} and u={}",
                        crate::wine::WINE_ARM_DIM,
                        crate::wine::WINE_ARM_DIM - 1
                    ));
                }
                if self.num_arms == 0 {
                    return fail("K must be >= 1 for the wine setting".into());
                }
                if self.wine_csv.is_none() {
                    return fail("wine setting needs wine_csv".into());
                }
            }
            _ => {}
        }
        if self.slope_t_min == 0 || self.slope_t_max <= self.slope_t_min {
            return fail("slope window needs 1 <= slope_t_min < slope_t_max".into());
        }
        Ok(())
    }

    /// Parse a config (or a manifest, whose resolved seeds are returned too).
    pub fn from_toml_str(text: &str) -> Result<(Self, Option<Vec<u64>>)> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let seeds = match table.remove(RESOLVED_SEEDS_KEY) {
            None => None,
            Some(v) => Some(
                v.try_into::<Vec<i64>>()
                    .map_err(|e| Error::Config(format!("{RESOLVED_SEEDS_KEY}: {e}")))?
                    .into_iter()
                    .map(|s| s as u64)
                    .collect(),
            ),
        };
        let config: ExperimentConfig =
            table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok((config, seeds))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Self, Option<Vec<u64>>)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Manifest text: the config plus the per-trial seeds it resolves to.
    pub fn manifest_string(&self, trial_seeds: &[u64]) -> String {
        let mut table = toml::Table::try_from(self).expect("config serializes to TOML");
        // TOML integers are signed 64-bit; store the bit pattern.
        table.insert(
            RESOLVED_SEEDS_KEY.into(),
            toml::Value::Array(
                trial_seeds
                    .iter()
                    .map(|&s| toml::Value::Integer(s as i64))
                    .collect(),
            ),
        );
        toml::to_string(&table).expect("manifest serializes to TOML")
    }
}
