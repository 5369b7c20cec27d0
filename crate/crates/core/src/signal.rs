//! Desired-power signal: uniform knots on a fixed grid, linearly
//! interpolated to the simulation step.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesiredSignalSpec {
    /// Minutes between independently drawn knots.
    pub knot_period: f64,
    /// Lower bound of the uniform knot draw (kW).
    pub low_kw: f64,
    /// Upper bound of the uniform knot draw (kW).
    pub high_kw: f64,
    /// Horizon (minutes); must be a multiple of the knot period.
    pub horizon: f64,
}

impl DesiredSignalSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.knot_period.is_finite() || self.knot_period <= 0.0 {
            return Err(Error::config("knot_period must be positive"));
        }
        if self.low_kw.is_nan() || self.high_kw.is_nan() || self.low_kw > self.high_kw {
            return Err(Error::config(format!(
                "desired signal bounds must satisfy low <= high, got [{}, {}]",
                self.low_kw, self.high_kw
            )));
        }
        if !self.horizon.is_finite() || self.horizon <= 0.0 {
            return Err(Error::config("horizon must be positive"));
        }
        let knots = self.horizon / self.knot_period;
        if (knots - knots.round()).abs() > 1e-9 {
            return Err(Error::config(format!(
                "horizon {} is not a multiple of knot_period {}",
                self.horizon, self.knot_period
            )));
        }
        Ok(())
    }
}

/// Generate the per-step desired-power series (kW), one value per step from
/// minute 0 through the horizon inclusive. Knot values are i.i.d. uniform on
/// `[low_kw, high_kw]`, drawn in time order; steps between knots are linear
/// interpolations.
pub fn generate_desired_signal(
    spec: &DesiredSignalSpec,
    h_step: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let per_knot = spec.knot_period / h_step;
    if (per_knot - per_knot.round()).abs() > 1e-9 || per_knot < 1.0 {
        return Err(Error::config(format!(
            "knot_period {} is not a positive multiple of h_step {h_step}",
            spec.knot_period
        )));
    }
    let steps_per_knot = per_knot.round() as usize;
    let n_steps = (spec.horizon / h_step).round() as usize;
    let n_knots = n_steps / steps_per_knot + 1;

    let span = spec.high_kw - spec.low_kw;
    let knots: Vec<f64> = (0..n_knots)
        .map(|_| {
            let u: f64 = rng.random();
            spec.low_kw + u * span
        })
        .collect();

    let mut series = Vec::with_capacity(n_steps + 1);
    for k in 0..=n_steps {
        let seg = k / steps_per_knot;
        let within = k % steps_per_knot;
        if within == 0 {
            series.push(knots[seg]);
        } else {
            let frac = within as f64 / steps_per_knot as f64;
            series.push(knots[seg] + frac * (knots[seg + 1] - knots[seg]));
        }
    }
    Ok(series)
}
