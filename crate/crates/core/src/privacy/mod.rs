//! Inferential-privacy bounds under a hierarchical Bayes consumption model.
//!
//! A consumer has a private type drawn from a finite prior; the type selects
//! a log-normal (mixture) law for each metered sample, and a window of `T`
//! samples is observed i.i.d. A sampling policy is `alpha` inferentially
//! private when *every* estimator of the type errs with probability at least
//! `alpha`. Four routes compute such guarantees: the exact MAP error (tight),
//! its Monte Carlo estimate (general families), Le Cam's two-point method
//! (with exact total variation or Pinsker's inequality), and Fano's
//! inequality. All logarithms are natural; densities are evaluated in the
//! log domain so `T = 60` windows cannot underflow.

pub mod bounds;
pub mod map;
pub mod scenario;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::log_sum_exp;

pub use bounds::{
    fano_bound, kl_iid, kl_lognormal_shared_scale, lecam_bound, tv_exact_shared_scale, tv_pinsker,
};
pub use map::{map_classify, map_error_exact_shared_scale, map_error_monte_carlo};
pub use scenario::{
    fit_lognormal_shared_scale, privacy_sweep, recs_income_scenario, scale_parameters,
    PrivacyScenario, PrivacySweepRow, ScaleRow, ScalingRule, MINUTES_PER_YEAR,
};

/// Prior over the finite private-type set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypePrior {
    labels: Vec<String>,
    pi: Vec<f64>,
}

impl TypePrior {
    /// Build from unnormalized non-negative weights; at least two types.
    pub fn new(labels: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if labels.len() != weights.len() {
            return Err(Error::config("prior labels and weights must have equal length"));
        }
        if labels.len() < 2 {
            return Err(Error::config("prior needs at least two types"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::config("prior weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::config("prior weights must not all be zero"));
        }
        let pi: Vec<f64> = weights.iter().map(|w| w / total).collect();
        debug_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        Ok(TypePrior { labels, pi })
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.pi
    }

    /// Index of the largest prior mass; ties go to the lower index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.pi.len() {
            if self.pi[i] > self.pi[best] {
                best = i;
            }
        }
        best
    }
}

/// One log-normal mixture component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalComponent {
    pub weight: f64,
    pub mu: f64,
    pub sigma: f64,
}

/// The observation law of one type: a finite log-normal mixture. A point
/// mass on the usage layer is the single-component case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeObservation {
    pub components: Vec<LogNormalComponent>,
}

/// Per-type observation families for a single metered sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationFamily {
    types: Vec<TypeObservation>,
}

impl ObservationFamily {
    pub fn new(types: Vec<TypeObservation>) -> Result<Self> {
        if types.len() < 2 {
            return Err(Error::config("observation family needs at least two types"));
        }
        for (i, t) in types.iter().enumerate() {
            if t.components.is_empty() {
                return Err(Error::config(format!("type {i} has no mixture components")));
            }
            let mut total = 0.0;
            for c in &t.components {
                if !c.sigma.is_finite() || c.sigma <= 0.0 {
                    return Err(Error::config(format!("type {i}: sigma must be positive")));
                }
                if !c.weight.is_finite() || c.weight < 0.0 {
                    return Err(Error::config(format!("type {i}: weights must be non-negative")));
                }
                if !c.mu.is_finite() {
                    return Err(Error::config(format!("type {i}: mu must be finite")));
                }
                total += c.weight;
            }
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::config(format!(
                    "type {i}: mixture weights sum to {total}, expected 1"
                )));
            }
        }
        Ok(ObservationFamily { types })
    }

    /// Convenience constructor for the shared-scale point-mass family.
    pub fn shared_scale(locations: &[f64], sigma: f64) -> Result<Self> {
        ObservationFamily::new(
            locations
                .iter()
                .map(|&mu| TypeObservation {
                    components: vec![LogNormalComponent { weight: 1.0, mu, sigma }],
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn types(&self) -> &[TypeObservation] {
        &self.types
    }

    /// `Some((locations, sigma))` when every type is a single unit-weight
    /// component and all scales coincide — the family the closed forms need.
    pub fn point_mass_shared_scale(&self) -> Option<(Vec<f64>, f64)> {
        let sigma = self.types[0].components[0].sigma;
        let mut locations = Vec::with_capacity(self.types.len());
        for t in &self.types {
            if t.components.len() != 1 {
                return None;
            }
            let c = &t.components[0];
            if (c.weight - 1.0).abs() > 1e-12 || c.sigma != sigma {
                return None;
            }
            locations.push(c.mu);
        }
        Some((locations, sigma))
    }

    /// Log density of one sample under one type, taking `ln y` directly.
    pub fn log_density_ln(&self, type_idx: usize, ln_y: f64) -> f64 {
        const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;
        let comps = &self.types[type_idx].components;
        if comps.len() == 1 {
            let c = &comps[0];
            let z = (ln_y - c.mu) / c.sigma;
            return -ln_y - c.sigma.ln() - HALF_LN_2PI - 0.5 * z * z;
        }
        let terms: Vec<f64> = comps
            .iter()
            .map(|c| {
                let z = (ln_y - c.mu) / c.sigma;
                c.weight.ln() - ln_y - c.sigma.ln() - HALF_LN_2PI - 0.5 * z * z
            })
            .collect();
        log_sum_exp(&terms)
    }

    /// Log density of one positive sample under one type.
    pub fn log_density(&self, type_idx: usize, y: f64) -> Result<f64> {
        if !y.is_finite() || y <= 0.0 {
            return Err(Error::config(format!(
                "log-normal support is positive reals, got sample {y}"
            )));
        }
        Ok(self.log_density_ln(type_idx, y.ln()))
    }

    /// Shift every component location by the same constant (the exact law of
    /// `X / c` for log-normal `X` with `shift = -ln c`).
    pub fn shift_locations(&self, shift: f64) -> ObservationFamily {
        ObservationFamily {
            types: self
                .types
                .iter()
                .map(|t| TypeObservation {
                    components: t
                        .components
                        .iter()
                        .map(|c| LogNormalComponent { mu: c.mu + shift, ..*c })
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Which computation produced a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMethod {
    MapExact,
    MapMc,
    LecamExactTv,
    LecamPinsker,
    Fano,
}

impl BoundMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BoundMethod::MapExact => "map-exact",
            BoundMethod::MapMc => "map-mc",
            BoundMethod::LecamExactTv => "lecam-exact-tv",
            BoundMethod::LecamPinsker => "lecam-pinsker",
            BoundMethod::Fano => "fano",
        }
    }
}

/// Supporting detail attached to a bound.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kl_matrix: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tv_matrix: Option<Vec<Vec<f64>>>,
    /// Pair attaining a pairwise maximum (Le Cam).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax_pair: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// An `alpha` value in [0, 1] plus the method that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub alpha: f64,
    pub method: BoundMethod,
    pub diagnostics: Diagnostics,
}

#[cfg(test)]
pub(crate) fn recs_prior() -> TypePrior {
    TypePrior::new(
        vec!["low".into(), "middle".into(), "upper".into()],
        vec![23.7, 48.7, 41.2],
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_normalizes_and_validates() {
        let p = recs_prior();
        assert_eq!(p.len(), 3);
        assert!((p.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((p.probabilities()[0] - 0.20862676056338025).abs() < 1e-15);
        assert!((p.probabilities()[1] - 0.42869718309859156).abs() < 1e-15);
        assert!((p.probabilities()[2] - 0.3626760563380282).abs() < 1e-15);
        assert_eq!(p.argmax(), 1);
        assert!(TypePrior::new(vec!["a".into()], vec![1.0]).is_err());
        assert!(TypePrior::new(vec!["a".into(), "b".into()], vec![1.0, -0.1]).is_err());
        assert!(TypePrior::new(vec!["a".into(), "b".into()], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn family_detects_shared_scale_point_mass() {
        let f = ObservationFamily::shared_scale(&[0.82, 0.99, 1.26], 0.49).unwrap();
        let (mus, sigma) = f.point_mass_shared_scale().unwrap();
        assert_eq!(mus, vec![0.82, 0.99, 1.26]);
        assert_eq!(sigma, 0.49);

        // A two-component mixture is not point mass.
        let mixed = ObservationFamily::new(vec![
            TypeObservation {
                components: vec![
                    LogNormalComponent { weight: 0.5, mu: 0.0, sigma: 1.0 },
                    LogNormalComponent { weight: 0.5, mu: 1.0, sigma: 1.0 },
                ],
            },
            TypeObservation {
                components: vec![LogNormalComponent { weight: 1.0, mu: 2.0, sigma: 1.0 }],
            },
        ])
        .unwrap();
        assert!(mixed.point_mass_shared_scale().is_none());

        // Different scales are not shared scale.
        let f2 = ObservationFamily::new(vec![
            TypeObservation {
                components: vec![LogNormalComponent { weight: 1.0, mu: 0.0, sigma: 1.0 }],
            },
            TypeObservation {
                components: vec![LogNormalComponent { weight: 1.0, mu: 1.0, sigma: 2.0 }],
            },
        ])
        .unwrap();
        assert!(f2.point_mass_shared_scale().is_none());
    }

    #[test]
    fn family_rejects_bad_mixtures() {
        assert!(ObservationFamily::new(vec![
            TypeObservation {
                components: vec![LogNormalComponent { weight: 0.5, mu: 0.0, sigma: 1.0 }],
            },
            TypeObservation {
                components: vec![LogNormalComponent { weight: 1.0, mu: 1.0, sigma: 1.0 }],
            },
        ])
        .is_err());
        assert!(ObservationFamily::shared_scale(&[0.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn log_density_matches_closed_form() {
        let f = ObservationFamily::shared_scale(&[0.0, 1.0], 0.5).unwrap();
        let y: f64 = 1.7;
        // ln N(0, 0.5) density at y.
        let direct = (1.0 / (y * 0.5 * (2.0 * std::f64::consts::PI).sqrt()))
            * (-(y.ln() - 0.0_f64).powi(2) / (2.0 * 0.25)).exp();
        assert!((f.log_density(0, y).unwrap() - direct.ln()).abs() < 1e-12);
        assert!(f.log_density(0, 0.0).is_err());
        assert!(f.log_density(0, -1.0).is_err());
    }

    #[test]
    fn mixture_log_density_is_log_sum() {
        let f = ObservationFamily::new(vec![
            TypeObservation {
                components: vec![
                    LogNormalComponent { weight: 0.3, mu: 0.0, sigma: 1.0 },
                    LogNormalComponent { weight: 0.7, mu: 2.0, sigma: 0.5 },
                ],
            },
            TypeObservation {
                components: vec![LogNormalComponent { weight: 1.0, mu: 1.0, sigma: 1.0 }],
            },
        ])
        .unwrap();
        let narrow = ObservationFamily::shared_scale(&[2.0, 0.0], 0.5).unwrap();
        let wide = ObservationFamily::shared_scale(&[0.0, 2.0], 1.0).unwrap();
        let y = 2.3;
        let a = f.log_density(0, y).unwrap().exp();
        let b = 0.3 * wide.log_density(0, y).unwrap().exp()
            + 0.7 * narrow.log_density(0, y).unwrap().exp();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn location_shift_preserves_scale() {
        let f = ObservationFamily::shared_scale(&[8.88, 9.06, 9.31], 0.49).unwrap();
        let g = f.shift_locations(-2.0);
        let (mus, sigma) = g.point_mass_shared_scale().unwrap();
        assert_eq!(sigma, 0.49);
        assert!((mus[0] - 6.88).abs() < 1e-12);
    }
}
