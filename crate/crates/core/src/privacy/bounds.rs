//! Information-theoretic lower bounds: KL divergence, total variation,
//! Le Cam's two-point method and Fano's inequality.

use crate::error::{Error, Result};
use crate::math::normal_cdf;

use super::{BoundMethod, BoundResult, Diagnostics, TypePrior};

/// KL divergence (nats) between two log-normals with a shared scale:
/// `(mu_i - mu_j)^2 / (2 sigma^2)`. Equal-scale log-normals reduce to
/// equal-variance normals in the log domain.
pub fn kl_lognormal_shared_scale(mu_i: f64, mu_j: f64, sigma: f64) -> Result<f64> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::config(format!("sigma must be positive, got {sigma}")));
    }
    let d = mu_i - mu_j;
    Ok(d * d / (2.0 * sigma * sigma))
}

/// KL of `t` i.i.d. samples: the chain rule makes it `t` times the
/// per-sample divergence.
pub fn kl_iid(kl_per_sample: f64, t: usize) -> f64 {
    t as f64 * kl_per_sample
}

/// Pinsker's inequality: `TV <= sqrt(KL / 2)`, clamped at the trivial
/// bound of 1.
pub fn tv_pinsker(kl: f64) -> f64 {
    debug_assert!(kl >= 0.0);
    (kl / 2.0).sqrt().min(1.0)
}

/// Exact total variation between the `t`-fold products of two shared-scale
/// log-normals. The sufficient statistic `S = sum(ln y)` is normal with
/// variance `t sigma^2` under both, so
/// `TV = 2 Phi(sqrt(t) |mu_i - mu_j| / (2 sigma)) - 1`.
pub fn tv_exact_shared_scale(mu_i: f64, mu_j: f64, sigma: f64, t: usize) -> Result<f64> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::config(format!("sigma must be positive, got {sigma}")));
    }
    if t < 1 {
        return Err(Error::config("tv_exact_shared_scale needs t >= 1"));
    }
    let sep = (t as f64).sqrt() * (mu_i - mu_j).abs() / (2.0 * sigma);
    Ok((2.0 * normal_cdf(sep) - 1.0).clamp(0.0, 1.0))
}

fn validate_matrix(m: &[Vec<f64>], r: usize, name: &str, max: f64) -> Result<()> {
    if m.len() != r || m.iter().any(|row| row.len() != r) {
        return Err(Error::config(format!("{name} matrix must be {r}x{r}")));
    }
    for (i, row) in m.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(0.0..=max).contains(&v) || !v.is_finite() {
                return Err(Error::config(format!("{name}[{i}][{j}] = {v} out of range")));
            }
        }
        if row[i] != 0.0 {
            return Err(Error::config(format!("{name} diagonal must be zero")));
        }
    }
    Ok(())
}

/// Le Cam's two-point bound:
/// `alpha = max_{i != j} min(pi_i, pi_j) * (1 - TV_ij)`.
pub fn lecam_bound(prior: &TypePrior, tv_matrix: &[Vec<f64>]) -> Result<BoundResult> {
    let r = prior.len();
    validate_matrix(tv_matrix, r, "tv", 1.0)?;
    for (i, row) in tv_matrix.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if (v - tv_matrix[j][i]).abs() > 1e-12 {
                return Err(Error::config("tv matrix must be symmetric"));
            }
        }
    }
    let pi = prior.probabilities();
    let mut alpha = f64::NEG_INFINITY;
    let mut best = (0usize, 1usize);
    for i in 0..r {
        for j in (i + 1)..r {
            let v = pi[i].min(pi[j]) * (1.0 - tv_matrix[i][j]);
            if v > alpha {
                alpha = v;
                best = (i, j);
            }
        }
    }
    Ok(BoundResult {
        alpha: alpha.clamp(0.0, 1.0),
        method: BoundMethod::LecamExactTv,
        diagnostics: Diagnostics {
            tv_matrix: Some(tv_matrix.to_vec()),
            argmax_pair: Some(best),
            ..Diagnostics::default()
        },
    })
}

/// Fano's inequality:
/// `alpha = (ln r - (1/r^2) sum_{i,j} KL_ij - ln 2) / ln(r - 1)`,
/// clamped to [0, 1]. The sum runs over all ordered pairs including the zero
/// diagonal. Undefined at `r = 2` (division by `ln 1`).
pub fn fano_bound(kl_matrix: &[Vec<f64>], r: usize) -> Result<BoundResult> {
    if r < 3 {
        return Err(Error::unsupported(format!(
            "Fano's bound needs r >= 3 (ln(r-1) vanishes at r = 2), got r = {r}"
        )));
    }
    validate_matrix(kl_matrix, r, "kl", f64::INFINITY)?;
    let sum: f64 = kl_matrix.iter().flatten().sum();
    let rf = r as f64;
    let raw = (rf.ln() - sum / (rf * rf) - 2f64.ln()) / (rf - 1.0).ln();
    Ok(BoundResult {
        alpha: raw.clamp(0.0, 1.0),
        method: BoundMethod::Fano,
        diagnostics: Diagnostics {
            kl_matrix: Some(kl_matrix.to_vec()),
            note: Some("classical form; assumes a uniform prior over types".into()),
            ..Diagnostics::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::super::recs_prior;
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn kl_closed_form_values() {
        assert_eq!(kl_lognormal_shared_scale(0.5, 0.5, 0.3).unwrap(), 0.0);
        // (0.17)^2 / (2 * 0.49^2), frozen from a hand evaluation.
        let kl = kl_lognormal_shared_scale(0.82, 0.99, 0.49).unwrap();
        assert!((kl - 0.060183256976259925).abs() < 1e-15);
        // Shift invariance.
        let shifted = kl_lognormal_shared_scale(0.82 + 5.0, 0.99 + 5.0, 0.49).unwrap();
        assert!((kl - shifted).abs() < 1e-12);
        assert!(kl_lognormal_shared_scale(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn kl_iid_scales_linearly() {
        assert_eq!(kl_iid(0.7, 0), 0.0);
        assert_eq!(kl_iid(0.7, 1), 0.7);
        let kl = kl_lognormal_shared_scale(0.82, 0.99, 0.49).unwrap();
        assert!((kl_iid(kl, 60) - 3.6109954185755955).abs() < 1e-12);
    }

    #[test]
    fn pinsker_values() {
        assert_eq!(tv_pinsker(0.0), 0.0);
        assert!((tv_pinsker(0.060183256976259925) - 0.1734693877551021).abs() < 1e-15);
        assert_eq!(tv_pinsker(10.0), 1.0);
    }

    #[test]
    fn tv_exact_values() {
        assert_eq!(tv_exact_shared_scale(0.7, 0.7, 0.2, 5).unwrap(), 0.0);
        let tv = tv_exact_shared_scale(0.82, 0.99, 0.49, 1).unwrap();
        assert!((tv - 0.13771751188911718).abs() < 1e-12);
        assert!(tv_exact_shared_scale(0.0, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn tv_exact_never_exceeds_pinsker() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(404);
        for _ in 0..10_000 {
            let dmu: f64 = rng.random_range(0.0..5.0);
            let sigma: f64 = rng.random_range(0.05..3.0);
            let t: usize = rng.random_range(1..=60);
            let exact = tv_exact_shared_scale(0.0, dmu, sigma, t).unwrap();
            let kl = kl_iid(kl_lognormal_shared_scale(0.0, dmu, sigma).unwrap(), t);
            assert!(
                exact <= tv_pinsker(kl) + 1e-12,
                "exact {exact} > pinsker {} at dmu={dmu} sigma={sigma} t={t}",
                tv_pinsker(kl)
            );
        }
    }

    fn square(r: usize, f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
        (0..r).map(|i| (0..r).map(|j| f(i, j)).collect()).collect()
    }

    #[test]
    fn lecam_fully_distinguishable_is_zero() {
        let tv = square(3, |i, j| if i == j { 0.0 } else { 1.0 });
        assert_eq!(lecam_bound(&recs_prior(), &tv).unwrap().alpha, 0.0);
    }

    #[test]
    fn lecam_identical_distributions_hits_prior_pair() {
        let tv = square(3, |_, _| 0.0);
        let b = lecam_bound(&recs_prior(), &tv).unwrap();
        // max over pairs of min(pi_i, pi_j) = min(pi_M, pi_U).
        assert!((b.alpha - 0.3626760563380282).abs() < 1e-15);
        assert_eq!(b.diagnostics.argmax_pair, Some((1, 2)));
    }

    #[test]
    fn lecam_recs_hourly_pinsker() {
        // mu = (0.82, 0.99, 1.26), sigma = 0.49, T = 1, Pinsker TV; frozen
        // from an independent spreadsheet evaluation.
        let mus = [0.82, 0.99, 1.26];
        let tv = square(3, |i, j| {
            if i == j {
                0.0
            } else {
                tv_pinsker(kl_lognormal_shared_scale(mus[i], mus[j], 0.49).unwrap())
            }
        });
        let b = lecam_bound(&recs_prior(), &tv).unwrap();
        assert!((b.alpha - 0.26275510204081637).abs() < 1e-12);
        assert_eq!(b.diagnostics.argmax_pair, Some((1, 2)));
    }

    #[test]
    fn lecam_rejects_bad_matrices() {
        let tv = square(3, |i, j| if i == j { 0.0 } else { 1.5 });
        assert!(lecam_bound(&recs_prior(), &tv).is_err());
        let asym = square(3, |i, j| if i < j { 0.1 } else if i > j { 0.2 } else { 0.0 });
        assert!(lecam_bound(&recs_prior(), &asym).is_err());
        assert!(lecam_bound(&recs_prior(), &square(2, |_, _| 0.0)).is_err());
    }

    #[test]
    fn fano_zero_kl_value() {
        let kl = square(3, |_, _| 0.0);
        let b = fano_bound(&kl, 3).unwrap();
        // (ln 3 - ln 2) / ln 2, frozen from a hand evaluation.
        assert!((b.alpha - 0.5849625007211564).abs() < 1e-12);
    }

    #[test]
    fn fano_recs_hourly_value() {
        let mus = [0.82, 0.99, 1.26];
        let kl = square(3, |i, j| kl_lognormal_shared_scale(mus[i], mus[j], 0.49).unwrap());
        let b = fano_bound(&kl, 3).unwrap();
        assert!((b.alpha - 0.38774277047977557).abs() < 1e-12);
    }

    #[test]
    fn fano_clamps_and_rejects_r2() {
        let huge = square(3, |i, j| if i == j { 0.0 } else { 100.0 });
        assert_eq!(fano_bound(&huge, 3).unwrap().alpha, 0.0);
        let kl2 = square(2, |_, _| 0.0);
        assert!(matches!(fano_bound(&kl2, 2), Err(Error::Unsupported(_))));
    }
}
