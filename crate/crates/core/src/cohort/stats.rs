use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quantile of ascending-sorted data by linear interpolation between order
/// statistics: with `h = (n - 1) p + 1` (1-indexed),
/// `x[floor h] + (h - floor h) (x[ceil h] - x[floor h])`.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadFraction(p));
    }
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Low end, median and high end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p10: f64,
    pub median: f64,
    pub p90: f64,
}

impl Percentiles {
    /// Empirical p10 / median / p90 of unsorted data.
    pub fn empirical(values: &[f64]) -> Result<Self> {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Percentiles {
            p10: empirical_quantile(&sorted, 0.1)?,
            median: empirical_quantile(&sorted, 0.5)?,
            p90: empirical_quantile(&sorted, 0.9)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

pub type Histogram = Vec<Bucket>;

/// Equal-width bins over `[p10, p90]`. Values outside the window land in the
/// end bins; the upper edge is inclusive in the last bin.
pub fn build_histogram(values: &[f64], p10: f64, p90: f64, buckets: usize) -> Histogram {
    let buckets = buckets.max(1);
    if p90 <= p10 || buckets == 1 {
        return vec![Bucket {
            lower: p10,
            upper: p90.max(p10),
            count: values.len(),
        }];
    }
    let width = (p90 - p10) / buckets as f64;
    let mut hist: Histogram = (0..buckets)
        .map(|i| Bucket {
            lower: p10 + width * i as f64,
            upper: if i + 1 == buckets {
                p90
            } else {
                p10 + width * (i + 1) as f64
            },
            count: 0,
        })
        .collect();
    for &v in values {
        let idx = ((v - p10) / width).floor();
        let idx = if idx.is_nan() || idx < 0.0 {
            0
        } else {
            (idx as usize).min(buckets - 1)
        };
        hist[idx].count += 1;
    }
    hist
}
