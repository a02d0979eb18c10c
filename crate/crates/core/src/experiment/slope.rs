//! Log-log growth rate of a regret curve.

use crate::error::{Error, Result};
use crate::experiment::aggregate::AggregateCurve;

/// Least-squares slope of `ln y` against `ln t`.
pub fn log_log_slope(points: impl IntoIterator<Item = (f64, f64)>) -> Result<f64> {
    let mut n = 0.0;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for (t, y) in points {
        if !(t > 0.0) {
            return Err(Error::UndefinedSlope(format!("nonpositive abscissa t = {t}")));
        }
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::UndefinedSlope(format!("curve value {y} at t = {t} is not positive")));
        }
        let (x, y) = (t.ln(), y.ln());
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    if n < 2.0 {
        return Err(Error::UndefinedSlope("need at least two points".into()));
    }
    let denom = n * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(Error::UndefinedSlope("abscissae are all equal".into()));
    }
    Ok((n * sxy - sx * sy) / denom)
}

/// Slope of `curve[t-1]` over every integer `t` in `[t_min, t_max]`.
pub fn fit_slope(curve: &[f64], t_min: u64, t_max: u64) -> Result<f64> {
    if t_min < 1 || t_max <= t_min {
        return Err(Error::invalid(format!(
            "slope window needs 1 <= t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    if t_max as usize > curve.len() {
        return Err(Error::invalid(format!(
            "slope window ends at {t_max} but the curve has {} steps",
            curve.len()
        )));
    }
    log_log_slope((t_min..=t_max).map(|t| (t as f64, curve[t as usize - 1])))
}

pub fn fit_regret_slope(curve: &AggregateCurve, t_min: u64, t_max: u64) -> Result<f64> {
    fit_slope(&curve.mean, t_min, t_max)
}
