//! CSV and manifest emission.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::experiment::runner::ExperimentResults;
use crate::experiment::slope::fit_regret_slope;

pub const CURVE_HEADER: [&str; 4] = ["strategy", "t", "mean_cum_proj_regret", "stderr"];

pub const SUMMARY_HEADER: [&str; 15] = [
    "experiment",
    "strategy",
    "trials",
    "horizon",
    "final_mean_cum_proj_regret",
    "final_stderr",
    "slope",
    "slope_t_min",
    "slope_t_max",
    "best_arm_pct",
    "final_mean_cum_std_regret",
    "k",
    "delta_dk_min",
    "delta_dk_mean",
    "delta_dk_max",
];

pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFiles {
    pub curves: Vec<PathBuf>,
    pub summary: PathBuf,
    pub manifest: PathBuf,
}

pub fn curve_file_name(strategy: crate::policy::Strategy) -> String {
    format!("curve_{}.csv", strategy.name())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::Csv {
        path: path.to_path_buf(),
        source: e,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write `curve_<strategy>.csv`, `summary.csv` and `manifest.toml` into `out_dir`.
pub fn emit_results(results: &ExperimentResults, out_dir: &Path) -> Result<EmittedFiles> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let config = &results.config;

    let mut curves = Vec::new();
    for curve in &results.curves {
        let path = out_dir.join(curve_file_name(curve.strategy));
        let mut w = csv_writer(&path)?;
        w.write_record(CURVE_HEADER).map_err(csv_err(&path))?;
        for (i, (m, s)) in curve.mean.iter().zip(&curve.stderr).enumerate() {
            w.write_record([
                curve.strategy.name().to_string(),
                (i + 1).to_string(),
                m.to_string(),
                s.to_string(),
            ])
            .map_err(csv_err(&path))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        curves.push(path);
    }

    let summary = out_dir.join(SUMMARY_FILE);
    let mut w = csv_writer(&summary)?;
    w.write_record(SUMMARY_HEADER).map_err(csv_err(&summary))?;
    for curve in &results.curves {
        // windows beyond the horizon leave the slope blank
        let slope = fit_regret_slope(curve, config.slope_t_min, config.slope_t_max).ok();
        w.write_record([
            config.name.clone(),
            curve.strategy.name().to_string(),
            curve.trials.to_string(),
            curve.horizon().to_string(),
            curve.final_mean().to_string(),
            curve.final_stderr().to_string(),
            opt(slope),
            config.slope_t_min.to_string(),
            config.slope_t_max.to_string(),
            opt(curve.best_arm_pct),
            curve.final_standard_regret.to_string(),
            curve.k.to_string(),
            curve.delta_dk.min.to_string(),
            curve.delta_dk.mean.to_string(),
            curve.delta_dk.max.to_string(),
        ])
        .map_err(csv_err(&summary))?;
    }
    w.flush().map_err(|e| Error::io(&summary, e))?;

    let manifest = out_dir.join(MANIFEST_FILE);
    fs::write(&manifest, config.manifest_string(&results.trial_seeds))
        .map_err(|e| Error::io(&manifest, e))?;

    Ok(EmittedFiles {
        curves,
        summary,
        manifest,
    })
}

/// Read a curve CSV back as `(t, mean)` pairs.
pub fn read_curve_csv(path: &Path) -> Result<Vec<(u64, f64)>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    if headers.iter().collect::<Vec<_>>() != CURVE_HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}", CURVE_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err(path))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |what: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("bad {what}"),
        };
        let t = rec[1].trim().parse::<u64>().map_err(|_| parse_err("t"))?;
        let m = rec[2].trim().parse::<f64>().map_err(|_| parse_err("mean_cum_proj_regret"))?;
        out.push((t, m));
    }
    Ok(out)
}
