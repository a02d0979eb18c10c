//! White-wine quality data: loading the semicolon-separated file and turning
//! a random sample of it into a corrupted-rating decision set.
//!
//! Each arm is the 11 physicochemical features, then a constant `1`, then a
//! protected feature `p ~ U(0,1)` in the last slot. The observed return is
//! `quality - 4p`; the projection reward is `quality`; the projector keeps the
//! first 12 coordinates.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::seq::index;
use rand::Rng;

use crate::decision_set::FiniteSet;
use crate::environment::TabularArm;
use crate::error::{Error, Result};
use crate::linalg::Projector;

pub const PHYSICOCHEMICAL_FEATURES: usize = 11;
pub const WINE_COLUMNS: usize = PHYSICOCHEMICAL_FEATURES + 1;
/// Arm dimension after appending the constant and the protected feature.
pub const WINE_ARM_DIM: usize = PHYSICOCHEMICAL_FEATURES + 2;
pub const CONSTANT_FEATURE_INDEX: usize = PHYSICOCHEMICAL_FEATURES;
pub const PROTECTED_FEATURE_INDEX: usize = PHYSICOCHEMICAL_FEATURES + 1;
pub const CORRUPTION_WEIGHT: f64 = 4.0;
pub const DEFAULT_WINE_ARMS: usize = 200;
pub const MIN_ELIGIBLE_QUALITY: u8 = 4;
pub const MAX_ELIGIBLE_QUALITY: u8 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct WineRecord {
    pub features: [f64; PHYSICOCHEMICAL_FEATURES],
    pub quality: u8,
}

pub fn load_wine_csv(path: impl AsRef<Path>) -> Result<Vec<WineRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_wine_csv(file, path)
}

/// Parse wine records from any reader; `source` names it in errors.
pub fn read_wine_csv<R: Read>(reader: R, source: impl Into<PathBuf>) -> Result<Vec<WineRecord>> {
    let source = source.into();
    let parse_err = |line: u64, message: String| Error::Parse {
        path: source.clone(),
        line,
        message,
    };

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers().map_err(|e| Error::Csv {
        path: source.clone(),
        source: e,
    })?;
    if headers.len() != WINE_COLUMNS {
        return Err(parse_err(
            1,
            format!("header has {} columns, expected {WINE_COLUMNS}", headers.len()),
        ));
    }
    if headers.get(WINE_COLUMNS - 1) != Some("quality") {
        return Err(parse_err(1, "last column must be `quality`".into()));
    }

    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != WINE_COLUMNS {
            return Err(parse_err(
                line,
                format!("row has {} columns, expected {WINE_COLUMNS}", row.len()),
            ));
        }
        let mut features = [0.0; PHYSICOCHEMICAL_FEATURES];
        for (i, slot) in features.iter_mut().enumerate() {
            let raw = &row[i];
            *slot = raw
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("column {} is not a finite number: `{raw}`", i + 1)))?;
        }
        let raw_q = &row[WINE_COLUMNS - 1];
        let quality = raw_q
            .parse::<f64>()
            .ok()
            .filter(|q| q.fract() == 0.0 && (0.0..=10.0).contains(q))
            .ok_or_else(|| parse_err(line, format!("quality must be an integer in 0..=10, got `{raw_q}`")))?
            as u8;
        records.push(WineRecord { features, quality });
    }
    Ok(records)
}

/// Number of records rated strictly above and strictly below the eligible range.
pub fn rating_tails(records: &[WineRecord]) -> (usize, usize) {
    let above = records.iter().filter(|r| r.quality > MAX_ELIGIBLE_QUALITY).count();
    let below = records.iter().filter(|r| r.quality < MIN_ELIGIBLE_QUALITY).count();
    (above, below)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WineOptions {
    pub arms: usize,
    /// Standardize each physicochemical column over the sampled wines.
    pub standardize: bool,
}

impl Default for WineOptions {
    fn default() -> Self {
        WineOptions {
            arms: DEFAULT_WINE_ARMS,
            standardize: false,
        }
    }
}

/// One sampled decision set.
#[derive(Debug, Clone)]
pub struct WineInstance {
    pub set: FiniteSet,
    pub arms: Vec<TabularArm>,
    pub projector: Projector,
    /// Source row of each arm.
    pub source_rows: Vec<usize>,
}

pub fn build_wine_decision_set<R: Rng + ?Sized>(
    records: &[WineRecord],
    rng: &mut R,
    options: WineOptions,
) -> Result<WineInstance> {
    let eligible: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| (MIN_ELIGIBLE_QUALITY..=MAX_ELIGIBLE_QUALITY).contains(&r.quality))
        .map(|(i, _)| i)
        .collect();
    if options.arms == 0 {
        return Err(Error::invalid("wine decision set needs at least one arm"));
    }
    if eligible.len() < options.arms {
        return Err(Error::InsufficientData {
            needed: options.arms,
            available: eligible.len(),
        });
    }
    let source_rows: Vec<usize> = index::sample(rng, eligible.len(), options.arms)
        .into_iter()
        .map(|i| eligible[i])
        .collect();

    let mut columns = [(0.0, 1.0); PHYSICOCHEMICAL_FEATURES];
    if options.standardize {
        let n = source_rows.len() as f64;
        for (j, col) in columns.iter_mut().enumerate() {
            let mean = source_rows.iter().map(|&r| records[r].features[j]).sum::<f64>() / n;
            let var = source_rows
                .iter()
                .map(|&r| (records[r].features[j] - mean).powi(2))
                .sum::<f64>()
                / n;
            let sd = var.sqrt();
            *col = (mean, if sd > 0.0 { sd } else { 1.0 });
        }
    }

    let mut arms = Vec::with_capacity(source_rows.len());
    for &row in &source_rows {
        let rec = &records[row];
        let protected: f64 = rng.random();
        let mut features = DVector::zeros(WINE_ARM_DIM);
        for j in 0..PHYSICOCHEMICAL_FEATURES {
            let (mean, sd) = columns[j];
            features[j] = (rec.features[j] - mean) / sd;
        }
        features[CONSTANT_FEATURE_INDEX] = 1.0;
        features[PROTECTED_FEATURE_INDEX] = protected;
        let quality = rec.quality as f64;
        arms.push(TabularArm {
            features,
            observed_value: quality - CORRUPTION_WEIGHT * protected,
            projection_value: quality,
        });
    }
    let set = FiniteSet::new(arms.iter().map(|a| a.features.clone()).collect())?;
    let projector = Projector::diagonal(WINE_ARM_DIM, WINE_ARM_DIM - 1)?;
    Ok(WineInstance {
        set,
        arms,
        projector,
        source_rows,
    })
}
