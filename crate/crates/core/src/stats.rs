//! Descriptive statistics for trial ensembles: box-plot summaries with the
//! linear-interpolation quantile rule, and Spearman rank correlation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::normal_sf;

/// Box-plot summary of one sample set. Whiskers sit on the most extreme data
/// within 1.5 IQR of the quartiles; everything beyond is listed as outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub lo_whisker: f64,
    pub hi_whisker: f64,
    pub outliers: Vec<f64>,
}

/// Quantile by linear interpolation between order statistics:
/// `h = (n - 1) * p`, interpolating between `x[floor(h)]` and `x[floor(h)+1]`.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    debug_assert!((0.0..=1.0).contains(&p));
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::config("box statistics need at least one value"));
    }
    let n = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));

    let mean = sorted.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };

    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;

    let lo_whisker = *sorted.iter().find(|&&v| v >= lo_fence).unwrap_or(&sorted[0]);
    let hi_whisker = *sorted.iter().rev().find(|&&v| v <= hi_fence).unwrap_or(&sorted[n - 1]);
    let outliers = sorted.iter().copied().filter(|&v| v < lo_fence || v > hi_fence).collect();

    Ok(BoxStats { n, mean, std_error, q1, median, q3, lo_whisker, hi_whisker, outliers })
}

/// Ranks with ties assigned their average rank (1-based).
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties, plus a one-sided
/// p-value for rho > 0 from the large-sample normal approximation
/// `z = rho * sqrt(n - 1)`.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() {
        return Err(Error::config("spearman inputs must have equal length"));
    }
    if x.len() < 3 {
        return Err(Error::config("spearman needs at least 3 points"));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::numerical("spearman undefined for constant input"));
    }
    let rho = sxy / (sxx * syy).sqrt();
    let z = rho * (n - 1.0).sqrt();
    Ok((rho, normal_sf(z)))
}
