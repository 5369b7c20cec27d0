//! Heterogeneous TCL populations and initial conditions from seeded streams.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamPlan;
use crate::tcl::{Mode, TclParams, TclState};

/// Recipe for a population: a nominal TCL plus relative jitter on the
/// physical constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationSpec {
    pub n_tcls: usize,
    pub nominal: TclParams,
    /// Relative half-width of the uniform jitter applied to R, C and p_trans.
    pub jitter_fraction: f64,
    /// Bernoulli parameter for the initial ON state.
    pub init_on_probability: f64,
    /// Master seed of the scenario's stream plan.
    pub seed: u64,
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_tcls < 1 {
            return Err(Error::config("n_tcls must be >= 1"));
        }
        if !(0.0..0.5).contains(&self.jitter_fraction) {
            return Err(Error::config(format!(
                "jitter_fraction must be in [0, 0.5), got {}",
                self.jitter_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.init_on_probability) {
            return Err(Error::config(format!(
                "init_on_probability must be in [0, 1], got {}",
                self.init_on_probability
            )));
        }
        self.nominal.validate()
    }
}

/// Draw the population's parameters.
///
/// R, C and p_trans are drawn independently, uniform on
/// `nominal * (1 ± jitter_fraction)`; the remaining fields are copied from
/// the nominal. A draw that violates the TCL invariants rejects the whole
/// spec rather than silently resampling.
pub fn sample_population(spec: &PopulationSpec) -> Result<Vec<TclParams>> {
    spec.validate()?;
    let mut rng = StreamPlan::new(spec.seed).population();
    let mut out = Vec::with_capacity(spec.n_tcls);
    for i in 0..spec.n_tcls {
        // Draw order (r, c, p_trans) is part of the reproducibility contract.
        let params = TclParams {
            r: jittered(spec.nominal.r, spec.jitter_fraction, &mut rng),
            c: jittered(spec.nominal.c, spec.jitter_fraction, &mut rng),
            p_trans: jittered(spec.nominal.p_trans, spec.jitter_fraction, &mut rng),
            ..spec.nominal
        };
        params.validate().map_err(|e| {
            Error::config(format!("sampled TCL {i} violates invariants ({e}); reject the spec"))
        })?;
        out.push(params);
    }
    Ok(out)
}

fn jittered(nominal: f64, fraction: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    nominal * (1.0 + fraction * (2.0 * u - 1.0))
}

/// Draw initial states: temperature uniform across each TCL's deadband, mode
/// Bernoulli(init_on_probability), independent across TCLs.
pub fn sample_initial_states(
    params: &[TclParams],
    init_on_probability: f64,
    rng: &mut impl Rng,
) -> Vec<TclState> {
    params
        .iter()
        .map(|p| {
            let u: f64 = rng.random();
            let theta = p.deadband_floor() + u * p.delta;
            let on: f64 = rng.random();
            TclState {
                theta,
                mode: if on < init_on_probability { Mode::On } else { Mode::Off },
            }
        })
        .collect()
}
