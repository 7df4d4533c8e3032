use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cohort::empirical_quantile;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub probability: f64,
    pub theoretical: f64,
    pub raw: f64,
    pub log: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqReport {
    pub points: Vec<QqPoint>,
    /// R² of a least-squares line through (theoretical, raw).
    pub r2_raw: f64,
    /// R² of a least-squares line through (theoretical, log).
    pub r2_log: f64,
}

/// Squared correlation, the R² of the least-squares line.
pub fn linear_r2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 1.0;
    }
    sxy * sxy / (sxx * syy)
}

/// Normal Q-Q points at probabilities `(i - 0.5) / k`, `k = min(n_points, n)`.
/// With `k = n` the sample side is the sorted data itself; otherwise it is
/// the interpolated empirical quantile.
pub fn qq_export(values: &[f64], n_points: usize) -> Result<QqReport> {
    if values.len() < 2 || n_points < 2 {
        return Err(Error::InvalidParameter(
            "a Q-Q plot needs at least two values and two points".into(),
        ));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter(
            "Q-Q export needs positive values for the log scale".into(),
        ));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = n_points.min(sorted.len());
    let normal = Normal::standard();
    let points = (1..=k)
        .map(|i| {
            let p = (i as f64 - 0.5) / k as f64;
            let raw = if k == sorted.len() {
                sorted[i - 1]
            } else {
                empirical_quantile(&sorted, p)?
            };
            Ok(QqPoint {
                probability: p,
                theoretical: normal.inverse_cdf(p),
                raw,
                log: raw.ln(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = points.iter().map(|p| p.theoretical).collect();
    let raw: Vec<f64> = points.iter().map(|p| p.raw).collect();
    let log: Vec<f64> = points.iter().map(|p| p.log).collect();
    Ok(QqReport {
        r2_raw: linear_r2(&x, &raw),
        r2_log: linear_r2(&x, &log),
        points,
    })
}

pub fn write_qq_csv<W: std::io::Write>(writer: W, report: &QqReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["probability", "theoretical", "raw", "log"])?;
    for p in &report.points {
        w.write_record([p.probability, p.theoretical, p.raw, p.log].map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
