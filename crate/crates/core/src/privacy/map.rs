//! The MAP estimator: classification, exact error for shared-scale
//! point-mass families, and the general Monte Carlo estimate.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::normal_cdf;
use crate::rng::StreamPlan;

use super::{BoundMethod, BoundResult, Diagnostics, ObservationFamily, TypePrior};

/// MAP classification of a sample window: `argmax_i ln pi_i + sum_t ln
/// p(y_t | i)`, ties broken toward the lower type index.
pub fn map_classify(prior: &TypePrior, family: &ObservationFamily, y: &[f64]) -> Result<usize> {
    if prior.len() != family.len() {
        return Err(Error::config("prior and family disagree on the number of types"));
    }
    for &v in y {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::config(format!("samples must be positive, got {v}")));
        }
    }
    let r = prior.len();
    let mut scores: Vec<f64> = prior.probabilities().iter().map(|p| p.ln()).collect();
    for &v in y {
        let ln_y = v.ln();
        for (i, s) in scores.iter_mut().enumerate().take(r) {
            *s += family.log_density_ln(i, ln_y);
        }
    }
    let mut best = 0;
    for i in 1..r {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    Ok(best)
}

/// Exact MAP error for the shared-scale point-mass family.
///
/// The sufficient statistic `S = sum(ln y_t)` is `N(T mu_i, T sigma^2)` under
/// type `i`, and the per-type posterior scores are affine in `S` with slopes
/// increasing in `mu`. The decision regions are therefore the intervals of
/// the upper envelope of those lines; adjacent boundaries sit at
/// `T (mu_i + mu_j)/2 + sigma^2 ln(pi_i / pi_j) / (mu_j - mu_i)`. Types whose
/// line never reaches the envelope (prior-dominated) are never chosen and
/// contribute their whole prior mass to the error.
pub fn map_error_exact_shared_scale(
    prior: &TypePrior,
    locations: &[f64],
    sigma: f64,
    t: usize,
) -> Result<BoundResult> {
    let r = prior.len();
    if locations.len() != r {
        return Err(Error::config("one location per type required"));
    }
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::config(format!("sigma must be positive, got {sigma}")));
    }
    if t < 1 {
        return Err(Error::unsupported("exact MAP error needs t >= 1 (no data at t = 0)"));
    }
    for w in locations.windows(2) {
        if w[0].is_nan() || w[1].is_nan() || w[0] >= w[1] {
            return Err(Error::config("locations must be strictly increasing"));
        }
    }

    let tf = t as f64;
    let sig2 = sigma * sigma;
    let pi = prior.probabilities();

    // Upper envelope of score_i(S) = (mu_i / sigma^2) S + ln pi_i
    // - T mu_i^2 / (2 sigma^2), slopes strictly increasing with i.
    let slope = |i: usize| locations[i] / sig2;
    let intercept =
        |i: usize| pi[i].ln() - tf * locations[i] * locations[i] / (2.0 * sig2);
    let cross = |i: usize, j: usize| -> f64 {
        // Where line j overtakes line i (slope_j > slope_i).
        (intercept(i) - intercept(j)) / (slope(j) - slope(i))
    };

    // Convex-hull sweep in slope order: stack of (type, left edge of its
    // winning interval).
    let mut hull: Vec<(usize, f64)> = Vec::with_capacity(r);
    for (i, &p) in pi.iter().enumerate() {
        if p == 0.0 {
            continue; // ln 0 line never wins, and carries no error mass
        }
        loop {
            match hull.last() {
                None => {
                    hull.push((i, f64::NEG_INFINITY));
                    break;
                }
                Some(&(j, left_j)) => {
                    let s = cross(j, i);
                    if s <= left_j {
                        hull.pop();
                    } else {
                        hull.push((i, s));
                        break;
                    }
                }
            }
        }
    }

    let sqrt_t_sigma = tf.sqrt() * sigma;
    let mut correct = 0.0;
    let mut chosen = vec![false; r];
    for (k, &(i, left)) in hull.iter().enumerate() {
        let right = if k + 1 < hull.len() { hull[k + 1].1 } else { f64::INFINITY };
        let mean = tf * locations[i];
        let hi = if right.is_finite() { normal_cdf((right - mean) / sqrt_t_sigma) } else { 1.0 };
        let lo = if left.is_finite() { normal_cdf((left - mean) / sqrt_t_sigma) } else { 0.0 };
        correct += pi[i] * (hi - lo);
        chosen[i] = true;
    }
    let dominated: Vec<usize> =
        (0..r).filter(|&i| !chosen[i] && pi[i] > 0.0).collect();

    let alpha = (1.0 - correct).clamp(0.0, 1.0);
    let note = if dominated.is_empty() {
        None
    } else {
        Some(format!("prior-dominated types never chosen: {dominated:?}"))
    };
    Ok(BoundResult {
        alpha,
        method: BoundMethod::MapExact,
        diagnostics: Diagnostics { note, ..Diagnostics::default() },
    })
}

/// Monte Carlo estimate of the MAP error for any finite-mixture family.
///
/// Draws `theta ~ prior`, a mixture component, then `t` log-normal samples,
/// classifies with [`map_classify`]'s rule, and reports the error frequency
/// with its binomial standard error. Chunks run in parallel on per-chunk
/// substreams and reduce by exact integer counts, so the result is identical
/// for any worker count. `t = 0` is the no-data case: the MAP decision is
/// the prior argmax and the error is exactly `1 - max pi`.
pub fn map_error_monte_carlo(
    prior: &TypePrior,
    family: &ObservationFamily,
    t: usize,
    n_mc: usize,
    plan: &StreamPlan,
) -> Result<BoundResult> {
    if prior.len() != family.len() {
        return Err(Error::config("prior and family disagree on the number of types"));
    }
    if n_mc < 1 {
        return Err(Error::config("n_mc must be >= 1"));
    }
    if t == 0 {
        let alpha = 1.0 - prior.probabilities()[prior.argmax()];
        return Ok(BoundResult {
            alpha,
            method: BoundMethod::MapMc,
            diagnostics: Diagnostics {
                mc_std_error: Some(0.0),
                note: Some("t = 0: decision is the prior argmax; error is exact".into()),
                ..Diagnostics::default()
            },
        });
    }

    const CHUNK: usize = 1 << 14;
    let n_chunks = n_mc.div_ceil(CHUNK);
    let pi = prior.probabilities();
    let r = prior.len();

    let errors: u64 = (0..n_chunks as u64)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = plan.mc_chunk(chunk);
            let lo = chunk as usize * CHUNK;
            let hi = ((chunk as usize + 1) * CHUNK).min(n_mc);
            let mut scores = vec![0.0f64; r];
            let mut errs = 0u64;
            for _ in lo..hi {
                // theta ~ prior.
                let u: f64 = rng.random();
                let mut theta = r - 1;
                let mut acc = 0.0;
                for (i, &p) in pi.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        theta = i;
                        break;
                    }
                }
                // Score every type over the window without materializing y:
                // draw y_t, classify on ln y_t exactly as map_classify does.
                for (i, s) in scores.iter_mut().enumerate() {
                    *s = pi[i].ln();
                }
                let comps = &family.types()[theta].components;
                for _ in 0..t {
                    let c = if comps.len() == 1 {
                        &comps[0]
                    } else {
                        let v: f64 = rng.random();
                        let mut acc = 0.0;
                        let mut pick = comps.len() - 1;
                        for (j, comp) in comps.iter().enumerate() {
                            acc += comp.weight;
                            if v < acc {
                                pick = j;
                                break;
                            }
                        }
                        &comps[pick]
                    };
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let y = (c.mu + c.sigma * z).exp();
                    let ln_y = y.ln();
                    for (i, s) in scores.iter_mut().enumerate() {
                        *s += family.log_density_ln(i, ln_y);
                    }
                }
                let mut best = 0;
                for i in 1..r {
                    if scores[i] > scores[best] {
                        best = i;
                    }
                }
                if best != theta {
                    errs += 1;
                }
            }
            errs
        })
        .sum();

    let alpha = errors as f64 / n_mc as f64;
    let std_error = (alpha * (1.0 - alpha) / n_mc as f64).sqrt();
    Ok(BoundResult {
        alpha,
        method: BoundMethod::MapMc,
        diagnostics: Diagnostics { mc_std_error: Some(std_error), ..Diagnostics::default() },
    })
}

#[cfg(test)]
mod tests {
    use super::super::recs_prior;
    use super::*;

    fn uniform_prior(r: usize) -> TypePrior {
        TypePrior::new(
            (0..r).map(|i| format!("t{i}")).collect(),
            vec![1.0; r],
        )
        .unwrap()
    }

    #[test]
    fn classify_picks_dominating_density() {
        let prior = uniform_prior(2);
        let family = ObservationFamily::shared_scale(&[0.0, 5.0], 0.3).unwrap();
        assert_eq!(map_classify(&prior, &family, &[1.0]).unwrap(), 0);
        assert_eq!(map_classify(&prior, &family, &[150.0]).unwrap(), 1);
    }

    #[test]
    fn classify_no_data_returns_prior_argmax() {
        let family = ObservationFamily::shared_scale(&[0.82, 0.99, 1.26], 0.49).unwrap();
        assert_eq!(map_classify(&recs_prior(), &family, &[]).unwrap(), 1);
    }

    #[test]
    fn classify_rejects_nonpositive_samples() {
        let family = ObservationFamily::shared_scale(&[0.0, 1.0], 0.5).unwrap();
        assert!(map_classify(&uniform_prior(2), &family, &[1.0, 0.0]).is_err());
        assert!(map_classify(&uniform_prior(2), &family, &[-2.0]).is_err());
    }

    #[test]
    fn classify_depends_only_on_sufficient_statistic() {
        // Shared-scale point-mass: the decision is a function of sum(ln y).
        let prior = recs_prior();
        let family = ObservationFamily::shared_scale(&[0.82, 0.99, 1.26], 0.49).unwrap();
        let y1 = [1.2, 3.0, 0.7, 2.2];
        let mut y2 = y1;
        y2.reverse();
        assert_eq!(
            map_classify(&prior, &family, &y1).unwrap(),
            map_classify(&prior, &family, &y2).unwrap()
        );
        // Same sum of logs, different samples.
        let s: f64 = y1.iter().map(|v| v.ln()).sum();
        let y3 = [(s / 4.0).exp(); 4];
        assert_eq!(
            map_classify(&prior, &family, &y1).unwrap(),
            map_classify(&prior, &family, &y3).unwrap()
        );
    }

    #[test]
    fn classify_log_and_linear_domains_agree() {
        // Small windows where the linear-domain product is representable.
        let prior = recs_prior();
        let family = ObservationFamily::shared_scale(&[0.82, 0.99, 1.26], 0.49).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for _ in 0..200 {
            let y: Vec<f64> = (0..3).map(|_| rng.random_range(0.2..8.0)).collect();
            let by_log = map_classify(&prior, &family, &y).unwrap();
            // Linear domain: pi_i * prod p(y_t | i).
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for i in 0..3 {
                let mut v = prior.probabilities()[i];
                for &s in &y {
                    v *= family.log_density(i, s).unwrap().exp();
                }
                if v > best_v {
                    best_v = v;
                    best = i;
                }
            }
            assert_eq!(by_log, best);
        }
    }

    #[test]
    fn exact_error_limits() {
        let prior = uniform_prior(2);
        // Far-separated types: error vanishes.
        let b = map_error_exact_shared_scale(&prior, &[0.0, 30.0], 1.0, 4).unwrap();
        assert!(b.alpha < 1e-9, "alpha = {}", b.alpha);
        // Nearly indistinguishable: coin flip.
        let b = map_error_exact_shared_scale(&prior, &[0.0, 1e-3], 1.0, 1).unwrap();
        assert!((b.alpha - 0.5).abs() < 1e-3, "alpha = {}", b.alpha);
        // Equal locations violate the strict ordering.
        assert!(map_error_exact_shared_scale(&prior, &[1.0, 1.0], 1.0, 1).is_err());
        // t = 0 is the no-data case and unsupported here.
        assert!(matches!(
            map_error_exact_shared_scale(&prior, &[0.0, 1.0], 1.0, 0),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn exact_error_two_types_closed_form() {
        // r = 2 equal priors: alpha = 1 - Phi(sqrt(t) dmu / (2 sigma)).
        let prior = uniform_prior(2);
        for (dmu, sigma, t) in [(0.4, 0.7, 1usize), (0.2, 0.5, 9), (1.1, 0.9, 3)] {
            let b = map_error_exact_shared_scale(&prior, &[0.0, dmu], sigma, t).unwrap();
            let expect = 1.0 - normal_cdf((t as f64).sqrt() * dmu / (2.0 * sigma));
            assert!((b.alpha - expect).abs() < 1e-12, "dmu={dmu} sigma={sigma} t={t}");
        }
    }

    #[test]
    fn exact_error_reports_dominated_types() {
        // Middle type with negligible prior: its region is empty.
        let prior = TypePrior::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![0.499, 1e-9, 0.501],
        )
        .unwrap();
        let b = map_error_exact_shared_scale(&prior, &[0.0, 0.05, 0.1], 1.0, 1).unwrap();
        let note = b.diagnostics.note.unwrap();
        assert!(note.contains('1'), "note: {note}");
    }

    #[test]
    fn exact_matches_monte_carlo_on_recs_hourly() {
        let prior = recs_prior();
        let exact =
            map_error_exact_shared_scale(&prior, &[0.82, 0.99, 1.26], 0.49, 1).unwrap();
        let family = ObservationFamily::shared_scale(&[0.82, 0.99, 1.26], 0.49).unwrap();
        let mc =
            map_error_monte_carlo(&prior, &family, 1, 200_000, &StreamPlan::new(7)).unwrap();
        let tol = 3.0 * mc.diagnostics.mc_std_error.unwrap();
        assert!(
            (exact.alpha - mc.alpha).abs() <= tol,
            "exact {} vs mc {} ± {tol}",
            exact.alpha,
            mc.alpha
        );
    }

    #[test]
    fn monte_carlo_identical_family_error_is_one_minus_max_prior() {
        // Identical distributions across types: the decision is always the
        // prior argmax, so the error frequency is exactly the frequency of
        // the other types; its mean is 1 - max pi = 0.5713 under the RECS
        // prior.
        let prior = recs_prior();
        let family = ObservationFamily::shared_scale(&[1.0, 1.0, 1.0], 0.5).unwrap();
        let mc =
            map_error_monte_carlo(&prior, &family, 4, 100_000, &StreamPlan::new(3)).unwrap();
        let tol = 3.0 * (0.5713 * (1.0 - 0.5713) / 100_000f64).sqrt();
        assert!((mc.alpha - 0.5713028169014085).abs() <= tol, "alpha {}", mc.alpha);
    }

    #[test]
    fn monte_carlo_no_data_is_exact() {
        let prior = recs_prior();
        let family = ObservationFamily::shared_scale(&[0.82, 0.99, 1.26], 0.49).unwrap();
        let mc = map_error_monte_carlo(&prior, &family, 0, 10, &StreamPlan::new(3)).unwrap();
        assert_eq!(mc.alpha, 1.0 - 0.42869718309859156);
        assert_eq!(mc.diagnostics.mc_std_error, Some(0.0));
    }

    #[test]
    fn monte_carlo_is_schedule_independent() {
        let prior = recs_prior();
        let family = ObservationFamily::shared_scale(&[0.82, 0.99, 1.26], 0.49).unwrap();
        let plan = StreamPlan::new(11);
        let a = map_error_monte_carlo(&prior, &family, 3, 50_000, &plan).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(7).build().unwrap();
        let b = pool
            .install(|| map_error_monte_carlo(&prior, &family, 3, 50_000, &plan))
            .unwrap();
        assert_eq!(a.alpha, b.alpha);
    }

    #[test]
    fn monte_carlo_handles_mixture_families() {
        use super::super::{LogNormalComponent, TypeObservation};
        let prior = uniform_prior(2);
        let family = ObservationFamily::new(vec![
            TypeObservation {
                components: vec![
                    LogNormalComponent { weight: 0.5, mu: -1.0, sigma: 0.4 },
                    LogNormalComponent { weight: 0.5, mu: 1.0, sigma: 0.4 },
                ],
            },
            TypeObservation {
                components: vec![LogNormalComponent { weight: 1.0, mu: 0.0, sigma: 0.4 }],
            },
        ])
        .unwrap();
        let mc =
            map_error_monte_carlo(&prior, &family, 2, 50_000, &StreamPlan::new(21)).unwrap();
        // Bimodal vs central: well separated, so the error is clearly below
        // the no-data level of 0.5 but not zero.
        assert!(mc.alpha > 0.005 && mc.alpha < 0.4, "alpha {}", mc.alpha);
    }
}
