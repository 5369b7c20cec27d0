//! Centralized direct load controller: dead-reckoning estimator,
//! temperature-bin bookkeeping, fractional switch commands, and the TCL-side
//! probabilistic actuation rule.
//!
//! Between measurements the controller evolves its copy of every TCL's state
//! with the known dynamics and zero noise. Commands are issued per bin as a
//! fraction `c`; each TCL locates its own bin from its true state and toggles
//! with probability `c`, so the controller never needs to address individual
//! TCLs nor learn which ones switched. The estimator accounts for its own
//! commands in expectation: commanded bins move fraction `c` of their mode
//! mass, so the estimated mode becomes fractional until the next measurement
//! restores it to {0, 1}.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tcl::{compute_a, hysteresis_next_mode, Mode, TclParams, TclState};

/// Controller knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    /// Total number of bins across ON and OFF; must be even.
    pub n_bins: usize,
    /// Minutes between command rounds (default: every simulation step).
    pub command_period: f64,
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_bins < 2 || !self.n_bins.is_multiple_of(2) {
            return Err(Error::config(format!(
                "n_bins must be an even number >= 2, got {}",
                self.n_bins
            )));
        }
        if !self.command_period.is_finite() || self.command_period <= 0.0 {
            return Err(Error::config("command_period must be positive"));
        }
        Ok(())
    }
}

/// Position of a temperature within its deadband, clamped to [0, 1].
pub fn normalized_position(params: &TclParams, theta: f64) -> f64 {
    ((theta - params.deadband_floor()) / params.delta).clamp(0.0, 1.0)
}

/// Bin layout: OFF bins occupy indices `0..n_bins/2` ordered by increasing
/// position, ON bins occupy `n_bins/2..n_bins` ordered by decreasing
/// position. Indices then trace the natural duty cycle: an OFF TCL warms
/// through bins 0,1,...  switches ON near the ceiling into bin `n_bins/2`,
/// cools through increasing indices and switches OFF from bin `n_bins - 1`.
pub fn assign_bin(x: f64, mode: Mode, n_bins: usize) -> usize {
    let half = n_bins / 2;
    let j = ((x * half as f64) as usize).min(half - 1);
    match mode {
        Mode::Off => j,
        Mode::On => half + (half - 1 - j),
    }
}

/// A per-bin switch command: fraction of the bin asked to toggle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchCommand {
    pub bin: usize,
    pub fraction: f64,
}

/// The controller's dead-reckoned copy of the population state.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    params: Vec<TclParams>,
    decay: Vec<f64>,
    theta_hat: Vec<f64>,
    m_hat: Vec<f64>,
    n_bins: usize,
    /// Mismatches smaller than one average TCL are unactionable.
    deadzone_kw: f64,
}

impl EstimatorState {
    /// Build an estimator that knows every TCL's parameters. Estimates start
    /// at the setpoint with half ON mass; the first measurement replaces them.
    pub fn new(params: Vec<TclParams>, config: &ControllerConfig) -> Result<Self> {
        config.validate()?;
        if params.is_empty() {
            return Err(Error::config("estimator needs at least one TCL"));
        }
        let decay = params.iter().map(compute_a).collect::<Result<Vec<_>>>()?;
        let theta_hat = params.iter().map(|p| p.theta_set).collect();
        let m_hat = vec![0.5; params.len()];
        let deadzone_kw =
            params.iter().map(|p| p.p_elec).sum::<f64>() / params.len() as f64;
        Ok(EstimatorState {
            params,
            decay,
            theta_hat,
            m_hat,
            n_bins: config.n_bins,
            deadzone_kw,
        })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn m_hat(&self) -> &[f64] {
        &self.m_hat
    }

    /// Estimated aggregate power (kW).
    pub fn estimated_power_kw(&self) -> f64 {
        self.params
            .iter()
            .zip(&self.m_hat)
            .map(|(p, m)| p.p_elec * m)
            .sum()
    }

    /// Replace every estimate with a full-population snapshot.
    pub fn ingest_measurements(&mut self, observations: &[TclState]) -> Result<()> {
        if observations.len() != self.params.len() {
            return Err(Error::config(format!(
                "observation count {} != population size {}",
                observations.len(),
                self.params.len()
            )));
        }
        for (i, obs) in observations.iter().enumerate() {
            self.theta_hat[i] = obs.theta;
            self.m_hat[i] = obs.mode.as_f64();
        }
        Ok(())
    }

    /// Advance every estimate one step with the known dynamics and zero
    /// noise. Fractional ON mass evolves as the convex combination of the
    /// ON-branch and OFF-branch updates weighted by the mass; each branch's
    /// own hysteresis decides whether its mass switches, so integer masses
    /// reproduce the true dynamics exactly.
    pub fn predict(&mut self) {
        for i in 0..self.params.len() {
            let p = &self.params[i];
            let a = self.decay[i];
            let th = self.theta_hat[i];
            let m = self.m_hat[i];

            let th_off = a * th + (1.0 - a) * p.theta_a;
            let th_on = a * th + (1.0 - a) * (p.theta_a - p.theta_g());
            let m_off = hysteresis_next_mode(p, th_off, Mode::Off).as_f64();
            let m_on = hysteresis_next_mode(p, th_on, Mode::On).as_f64();

            self.theta_hat[i] = (1.0 - m) * th_off + m * th_on;
            self.m_hat[i] = (1.0 - m) * m_off + m * m_on;
        }
    }

    /// Greedy bin walk against the power mismatch.
    ///
    /// A positive mismatch (need more power) walks the OFF bins from warmest
    /// to coolest; a negative one walks the ON bins from coolest to warmest —
    /// in both cases starting with the TCLs whose own thermostat would switch
    /// them soonest. Full bins get `c = 1`, the last partial bin the
    /// remainder, so the expected switched power equals
    /// `min(|mismatch|, switchable power)`.
    pub fn compute_commands(&self, p_des_kw: f64) -> Vec<SwitchCommand> {
        let delta_p = p_des_kw - self.estimated_power_kw();
        if delta_p.abs() < self.deadzone_kw {
            return Vec::new();
        }
        let half = self.n_bins / 2;
        let mut weight = vec![0.0f64; self.n_bins];
        let to_on = delta_p > 0.0;
        for i in 0..self.params.len() {
            let p = &self.params[i];
            let x = normalized_position(p, self.theta_hat[i]);
            if to_on {
                weight[assign_bin(x, Mode::Off, self.n_bins)] += p.p_elec * (1.0 - self.m_hat[i]);
            } else {
                weight[assign_bin(x, Mode::On, self.n_bins)] += p.p_elec * self.m_hat[i];
            }
        }
        // Walk order by bin index: warmest OFF = half-1 down to 0; coolest ON
        // = n_bins-1 down to half.
        let order: Vec<usize> = if to_on {
            (0..half).rev().collect()
        } else {
            (half..self.n_bins).rev().collect()
        };
        let mut remaining = delta_p.abs();
        let mut cmds = Vec::new();
        for b in order {
            if remaining <= 0.0 {
                break;
            }
            if weight[b] <= 0.0 {
                continue;
            }
            if weight[b] <= remaining {
                cmds.push(SwitchCommand { bin: b, fraction: 1.0 });
                remaining -= weight[b];
            } else {
                cmds.push(SwitchCommand { bin: b, fraction: remaining / weight[b] });
                remaining = 0.0;
            }
        }
        cmds
    }

    /// Fold the issued commands into the estimates in expectation: a command
    /// `c` on a bin moves fraction `c` of each member's mode mass across;
    /// temperatures are untouched.
    pub fn apply_commands(&mut self, cmds: &[SwitchCommand]) {
        if cmds.is_empty() {
            return;
        }
        let half = self.n_bins / 2;
        let to_on = cmds[0].bin < half;
        let mut fraction = vec![0.0f64; self.n_bins];
        for c in cmds {
            fraction[c.bin] = c.fraction;
        }
        for i in 0..self.params.len() {
            let x = normalized_position(&self.params[i], self.theta_hat[i]);
            if to_on {
                let c = fraction[assign_bin(x, Mode::Off, self.n_bins)];
                self.m_hat[i] += c * (1.0 - self.m_hat[i]);
            } else {
                let c = fraction[assign_bin(x, Mode::On, self.n_bins)];
                self.m_hat[i] -= c * self.m_hat[i];
            }
        }
    }
}

/// TCL-side actuation: each TCL finds its bin from its true state; if that
/// bin carries a command it toggles with the commanded probability. Because
/// bin indices encode the mode, a command aimed at the opposite mode can
/// never match. One uniform draw per TCL per actuated step, in TCL order.
pub fn actuate(
    states: &[TclState],
    params: &[TclParams],
    n_bins: usize,
    cmds: &[SwitchCommand],
    rng: &mut impl Rng,
) -> Vec<bool> {
    if cmds.is_empty() {
        return vec![false; states.len()];
    }
    let mut fraction = vec![0.0f64; n_bins];
    for c in cmds {
        fraction[c.bin] = c.fraction;
    }
    states
        .iter()
        .zip(params)
        .map(|(s, p)| {
            let u: f64 = rng.random();
            let bin = assign_bin(normalized_position(p, s.theta), s.mode, n_bins);
            u < fraction[bin]
        })
        .collect()
}
