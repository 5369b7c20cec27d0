//! Privacy scenarios: families specified at an annual reference scale, the
//! per-period rescaling rules, the bundled household-income example, the
//! alpha-versus-h sweep, and the shared-scale log-normal fit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamPlan;

use super::bounds::{
    fano_bound, kl_iid, kl_lognormal_shared_scale, lecam_bound, tv_exact_shared_scale, tv_pinsker,
};
use super::map::{map_error_exact_shared_scale, map_error_monte_carlo};
use super::{BoundMethod, BoundResult, ObservationFamily, TypePrior};

pub const MINUTES_PER_YEAR: f64 = 365.0 * 24.0 * 60.0;

/// A per-period parameter row of the explicit table: one location per type
/// and a shared scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub mu: Vec<f64>,
    pub sigma: f64,
}

/// How annual-scale parameters translate to one metered sample of period
/// `h`. In JSON: `"location-shift"`, or
/// `{"explicit-table": {"table": {"60": {"mu": [...], "sigma": ...}}}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingRule {
    /// Divide consumption by the number of periods per year: for a
    /// log-normal this shifts every location by `-ln(minutes_per_year / h)`
    /// and leaves scales untouched (the exact law of `X / c`).
    LocationShift,
    /// Look `h` up in a user-supplied table of per-period parameters
    /// (keys are periods in whole minutes).
    ExplicitTable { table: BTreeMap<u64, ScaleRow> },
}

/// A complete privacy question: prior, annual observation family, window and
/// scaling rule. `T = floor(window / h)` i.i.d. samples are observed.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyScenario {
    pub prior: TypePrior,
    pub annual_family: ObservationFamily,
    /// Observation window (minutes).
    pub window: f64,
    pub scaling: ScalingRule,
}

impl PrivacyScenario {
    pub fn validate(&self) -> Result<()> {
        if self.prior.len() != self.annual_family.len() {
            return Err(Error::config("prior and family disagree on the number of types"));
        }
        if !self.window.is_finite() || self.window <= 0.0 {
            return Err(Error::config("window must be positive"));
        }
        if let ScalingRule::ExplicitTable { table } = &self.scaling {
            for (h, row) in table {
                if row.mu.len() != self.prior.len() {
                    return Err(Error::config(format!(
                        "table row for h={h} has {} locations, expected {}",
                        row.mu.len(),
                        self.prior.len()
                    )));
                }
                if !row.sigma.is_finite() || row.sigma <= 0.0 {
                    return Err(Error::config(format!("table row for h={h}: sigma must be positive")));
                }
            }
        }
        Ok(())
    }

    pub fn with_scaling(&self, scaling: ScalingRule) -> PrivacyScenario {
        PrivacyScenario { scaling, ..self.clone() }
    }
}

/// Resolve the observation family for sampling period `h` (minutes) and the
/// window sample count `T = floor(window / h)`.
pub fn scale_parameters(
    scenario: &PrivacyScenario,
    h: f64,
) -> Result<(ObservationFamily, usize)> {
    scenario.validate()?;
    if !h.is_finite() || h <= 0.0 {
        return Err(Error::config("sampling period h must be positive"));
    }
    let t = (scenario.window / h).floor() as usize;
    let family = match &scenario.scaling {
        ScalingRule::LocationShift => {
            scenario.annual_family.shift_locations(-(MINUTES_PER_YEAR / h).ln())
        }
        ScalingRule::ExplicitTable { table } => {
            let key = h.round() as u64;
            if (h - key as f64).abs() > 1e-9 {
                return Err(Error::config(format!(
                    "explicit-table scaling needs whole-minute periods, got h = {h}"
                )));
            }
            let row = table.get(&key).ok_or_else(|| {
                Error::config(format!("explicit table has no row for h = {key} min"))
            })?;
            ObservationFamily::shared_scale(&row.mu, row.sigma)?
        }
    };
    Ok((family, t))
}

/// The bundled household-income scenario: three income classes with their
/// household-count prior, annual log-normal fits, and the published
/// per-minute and per-hour parameter rows as the explicit table.
pub fn recs_income_scenario() -> PrivacyScenario {
    let prior = TypePrior::new(
        vec!["low".into(), "middle".into(), "upper".into()],
        vec![23.7, 48.7, 41.2],
    )
    .expect("static prior");
    let annual_family =
        ObservationFamily::shared_scale(&[8.88, 9.06, 9.31], 0.49).expect("static family");
    let mut table = BTreeMap::new();
    table.insert(1, ScaleRow { mu: vec![0.014, 0.016, 0.017], sigma: 0.49 });
    table.insert(60, ScaleRow { mu: vec![0.82, 0.99, 1.26], sigma: 0.49 });
    PrivacyScenario {
        prior,
        annual_family,
        window: 60.0,
        scaling: ScalingRule::ExplicitTable { table },
    }
}

/// One row of the alpha-versus-h table. `None` means the method is not
/// applicable to this scenario/period (with the reason in `warnings`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacySweepRow {
    pub h: f64,
    pub t: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_exact: Option<BoundResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map_mc: Option<BoundResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lecam_pinsker: Option<BoundResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lecam_tv: Option<BoundResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fano: Option<BoundResult>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

fn pair_matrix(r: usize, f: impl Fn(usize, usize) -> Result<f64>) -> Result<Vec<Vec<f64>>> {
    let mut m = vec![vec![0.0; r]; r];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            if i != j {
                *v = f(i, j)?;
            }
        }
    }
    Ok(m)
}

/// Evaluate the requested bounds for every sampling period. Methods that do
/// not apply (closed forms on mixture families, Fano at r = 2, exact MAP at
/// T = 0, a missing table row) leave their cell empty and record a warning.
pub fn privacy_sweep(
    scenario: &PrivacyScenario,
    h_list: &[f64],
    methods: &[BoundMethod],
    mc_samples: usize,
    seed: u64,
) -> Result<Vec<PrivacySweepRow>> {
    scenario.validate()?;
    if h_list.is_empty() {
        return Err(Error::config("h_list must not be empty"));
    }
    let r = scenario.prior.len();
    let want = |m: BoundMethod| methods.contains(&m);
    let plan = StreamPlan::new(seed);

    let mut rows = Vec::with_capacity(h_list.len());
    for (row_idx, &h) in h_list.iter().enumerate() {
        let t_nominal = if h > 0.0 { (scenario.window / h).floor() as usize } else { 0 };
        let mut row = PrivacySweepRow {
            h,
            t: t_nominal,
            map_exact: None,
            map_mc: None,
            lecam_pinsker: None,
            lecam_tv: None,
            fano: None,
            warnings: Vec::new(),
        };
        let (family, t) = match scale_parameters(scenario, h) {
            Ok(ok) => ok,
            Err(e) => {
                row.warnings.push(format!("h = {h}: {e}"));
                rows.push(row);
                continue;
            }
        };
        row.t = t;

        let shared = family.point_mass_shared_scale();
        if let Some((locations, sigma)) = &shared {
            let kl = |i: usize, j: usize| {
                Ok(kl_iid(kl_lognormal_shared_scale(locations[i], locations[j], *sigma)?, t))
            };
            if want(BoundMethod::LecamPinsker) || want(BoundMethod::Fano) {
                let kl_matrix = pair_matrix(r, kl)?;
                if want(BoundMethod::LecamPinsker) {
                    let tv: Vec<Vec<f64>> = kl_matrix
                        .iter()
                        .map(|krow| krow.iter().map(|&k| tv_pinsker(k)).collect())
                        .collect();
                    let mut b = lecam_bound(&scenario.prior, &tv)?;
                    b.method = BoundMethod::LecamPinsker;
                    b.diagnostics.kl_matrix = Some(kl_matrix.clone());
                    row.lecam_pinsker = Some(b);
                }
                if want(BoundMethod::Fano) {
                    match fano_bound(&kl_matrix, r) {
                        Ok(b) => row.fano = Some(b),
                        Err(Error::Unsupported(msg)) => {
                            row.warnings.push(format!("fano: {msg}"));
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
            if want(BoundMethod::LecamExactTv) {
                if t >= 1 {
                    let tv = pair_matrix(r, |i, j| {
                        tv_exact_shared_scale(locations[i], locations[j], *sigma, t)
                    })?;
                    row.lecam_tv = Some(lecam_bound(&scenario.prior, &tv)?);
                } else {
                    // No data: the product laws coincide, TV = 0.
                    let tv = vec![vec![0.0; r]; r];
                    row.lecam_tv = Some(lecam_bound(&scenario.prior, &tv)?);
                }
            }
            if want(BoundMethod::MapExact) {
                let sorted = locations.windows(2).all(|w| w[0] < w[1]);
                if !sorted {
                    row.warnings.push("map-exact: locations are not strictly increasing".into());
                } else {
                    match map_error_exact_shared_scale(&scenario.prior, locations, *sigma, t) {
                        Ok(b) => row.map_exact = Some(b),
                        Err(Error::Unsupported(msg)) => {
                            row.warnings.push(format!("map-exact: {msg}"));
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        } else {
            for m in [
                BoundMethod::MapExact,
                BoundMethod::LecamPinsker,
                BoundMethod::LecamExactTv,
                BoundMethod::Fano,
            ] {
                if want(m) {
                    row.warnings.push(format!(
                        "{}: requires a shared-scale point-mass family",
                        m.name()
                    ));
                }
            }
        }

        if want(BoundMethod::MapMc) {
            let b = map_error_monte_carlo(
                &scenario.prior,
                &family,
                t,
                mc_samples,
                &plan.subplan(row_idx as u64),
            )?;
            row.map_mc = Some(b);
        }

        rows.push(row);
    }
    Ok(rows)
}

/// Shared-scale log-normal fit: per-group location = mean of the log data,
/// pooled scale from the group-centered logs with denominator `n - r`
/// (the unbiased pooled variance across groups).
pub fn fit_lognormal_shared_scale(groups: &[Vec<f64>]) -> Result<(Vec<f64>, f64)> {
    if groups.is_empty() {
        return Err(Error::config("fit needs at least one group"));
    }
    let mut n = 0usize;
    let mut mus = Vec::with_capacity(groups.len());
    for (g, samples) in groups.iter().enumerate() {
        if samples.len() < 2 {
            return Err(Error::config(format!("group {g} needs at least 2 samples")));
        }
        for &x in samples {
            if !x.is_finite() || x <= 0.0 {
                return Err(Error::config(format!("group {g}: samples must be positive, got {x}")));
            }
        }
        n += samples.len();
        mus.push(samples.iter().map(|x| x.ln()).sum::<f64>() / samples.len() as f64);
    }
    let dof = n - groups.len();
    let ss: f64 = groups
        .iter()
        .zip(&mus)
        .map(|(samples, &mu)| samples.iter().map(|x| (x.ln() - mu).powi(2)).sum::<f64>())
        .sum();
    Ok((mus, (ss / dof as f64).sqrt()))
}
