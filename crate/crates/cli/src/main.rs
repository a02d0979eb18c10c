use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use projection_bandits::experiment::{
    emit_results, fit_regret_slope, log_log_slope, read_curve_csv, Experiment, ExperimentConfig,
    ExperimentResults, Setting,
};
use projection_bandits::validate::run_self_checks;
use projection_bandits::wine::load_wine_csv;
use projection_bandits::{ScheduleKind, Strategy};

#[derive(Parser)]
#[command(name = "pbandit", version, about = "Projection-reward linear bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a preset or a config/manifest file.
    Run(RunArgs),
    /// Fit the log-log slope of a curve CSV.
    Slope {
        curve: PathBuf,
        #[arg(long, default_value_t = 1000)]
        t_min: u64,
        #[arg(long, default_value_t = 10_000)]
        t_max: u64,
    },
    /// Numerical self-checks of the projector, estimator and optimizer.
    Validate {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Run one strategy over a list of exploration constants.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
    },
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, conflicts_with = "setting")]
    config: Option<PathBuf>,
    #[arg(long)]
    setting: Option<Setting>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<Strategy>>,
    #[arg(long)]
    schedule: Option<ScheduleKind>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// 200 trials instead of 2000.
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    wine_csv: Option<PathBuf>,
}

impl RunArgs {
    /// The config plus, for manifests whose trial set is unchanged, the recorded seeds.
    fn resolve(&self) -> Result<(ExperimentConfig, Option<Vec<u64>>)> {
        let (mut config, mut seeds) = match (&self.config, self.setting) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(setting)) => (ExperimentConfig::preset(setting), None),
            (None, None) => bail!("pass --setting or --config"),
        };
        if self.quick {
            config = config.quick();
        }
        if let Some(n) = self.trials {
            config.trials = n;
        }
        if let Some(n) = self.horizon {
            config.horizon = n;
        }
        if let Some(s) = self.seed {
            config.base_seed = s;
        }
        if let Some(list) = &self.strategies {
            config.strategies = list.clone();
        }
        if let Some(kind) = self.schedule {
            config.schedule = kind;
        }
        if let Some(out) = &self.out {
            config.out_dir = out.clone();
        }
        if let Some(path) = &self.wine_csv {
            config.wine_csv = Some(path.clone());
        }
        if self.quick || self.trials.is_some() || self.seed.is_some() {
            seeds = None;
        }
        if let Some(s) = &seeds {
            if s.len() as u64 != config.trials {
                bail!("manifest lists {} seeds for {} trials", s.len(), config.trials);
            }
        }
        config.validate()?;
        Ok((config, seeds))
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            b = b.num_threads(n);
        }
        b.build().context("building worker pool")
    }
}

fn experiment_for(config: ExperimentConfig, records: Option<&Arc<Vec<projection_bandits::wine::WineRecord>>>) -> Result<Experiment> {
    Ok(match records {
        Some(r) => Experiment::with_wine_records(config, r.clone())?,
        None => Experiment::new(config)?,
    })
}

fn print_summary(results: &ExperimentResults) {
    let c = &results.config;
    println!(
        "{} ({} trials, horizon {}):",
        c.name, results.trial_seeds.len(), c.horizon
    );
    for curve in &results.curves {
        let slope = fit_regret_slope(curve, c.slope_t_min, c.slope_t_max)
            .map(|s| format!("{s:.3}"))
            .unwrap_or_else(|_| "-".into());
        let best = curve
            .best_arm_pct
            .map(|p| format!("{p:.1}%"))
            .unwrap_or_else(|| "-".into());
        println!(
            "  {:<7} regret {:>10.3} ± {:<8.3} slope {:>6}  best-arm {:>6}",
            curve.strategy.name(),
            curve.final_mean(),
            curve.final_stderr(),
            slope,
            best
        );
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let (config, seeds) = args.resolve()?;
    let out = config.out_dir.clone();
    let experiment = Experiment::new(config)?;
    let results = args.pool()?.install(|| match seeds {
        Some(s) => experiment.run_with_seeds(s),
        None => experiment.run(),
    })?;
    emit_results(&results, &out)?;
    print_summary(&results);
    println!("wrote {}", out.display());
    Ok(())
}

fn sweep(args: &RunArgs, strategy: Strategy, alphas: &[f64]) -> Result<()> {
    let (mut base, seeds) = args.resolve()?;
    base.strategies = vec![strategy];
    let pool = args.pool()?;
    let records = match base.setting {
        Setting::Wine => {
            let path = base.wine_csv.as_ref().context("wine setting needs --wine-csv")?;
            Some(Arc::new(load_wine_csv(path)?))
        }
        _ => None,
    };
    println!("alpha,final_mean_cum_proj_regret,final_stderr");
    for &alpha in alphas {
        let mut config = base.clone();
        config.alpha_per_strategy.set(strategy, alpha);
        config.name = format!("{}-{}-alpha{alpha}", base.name, strategy.name());
        config.out_dir = base.out_dir.join(format!("alpha_{alpha}"));
        let experiment = experiment_for(config.clone(), records.as_ref())?;
        let results = pool.install(|| match &seeds {
            Some(s) => experiment.run_with_seeds(s.clone()),
            None => experiment.run(),
        })?;
        emit_results(&results, &config.out_dir)?;
        let curve = &results.curves[0];
        println!("{alpha},{},{}", curve.final_mean(), curve.final_stderr());
    }
    Ok(())
}

fn slope(path: &Path, t_min: u64, t_max: u64) -> Result<()> {
    let points = read_curve_csv(path)?;
    let window: Vec<_> = points
        .into_iter()
        .filter(|&(t, _)| (t_min..=t_max).contains(&t))
        .map(|(t, m)| (t as f64, m))
        .collect();
    if window.is_empty() {
        bail!("{} has no rows in [{t_min}, {t_max}]", path.display());
    }
    let s = log_log_slope(window)?;
    println!("{s}");
    Ok(())
}

fn validate(seed: u64) -> Result<()> {
    let checks = run_self_checks(seed);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        bail!("{failed} self-check(s) failed");
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => run(&args),
        Command::Slope { curve, t_min, t_max } => slope(&curve, t_min, t_max),
        Command::Validate { seed } => validate(seed),
        Command::Sweep {
            run,
            strategy,
            alphas,
        } => sweep(&run, strategy, &alphas),
    }
}
