//! Scenario orchestration: closed-loop trials under a sampling policy, error
//! metrics, and Monte Carlo sweeps over sampling periods.
//!
//! Time axis: the series value at step `k` is the quantity in effect during
//! `[k, k+1)` — in particular the aggregate power at `k` reflects toggles
//! commanded at `k`, which take effect before that step's thermal update.

use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{actuate, ControllerConfig, EstimatorState};
use crate::error::{Error, Result};
use crate::population::{sample_initial_states, sample_population, PopulationSpec};
use crate::rng::StreamPlan;
use crate::signal::{generate_desired_signal, DesiredSignalSpec};
use crate::stats::{box_stats, BoxStats};
use crate::tcl::{compute_a, step_thermal_with_decay, NoiseModel, TclParams, TclState};

/// When and how often the controller receives full-population snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingPolicy {
    /// Observation period (minutes); a positive multiple of the step.
    pub h_obs: f64,
    /// Offset of the first observation (minutes).
    pub phase: f64,
}

/// Everything one closed-loop trial needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub population: PopulationSpec,
    pub controller: ControllerConfig,
    pub sampling: SamplingPolicy,
    pub desired_signal: DesiredSignalSpec,
    pub noise: NoiseModel,
    pub control_enabled: bool,
}

/// Integer step grid resolved from the minute-valued configuration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepGrid {
    pub n_steps: usize,
    pub obs_every: usize,
    pub obs_phase: usize,
    pub cmd_every: usize,
}

impl StepGrid {
    fn is_obs(&self, k: usize) -> bool {
        k % self.obs_every == self.obs_phase
    }

    fn is_cmd(&self, k: usize) -> bool {
        k.is_multiple_of(self.cmd_every)
    }
}

fn steps_of(minutes: f64, h_step: f64, what: &str) -> Result<usize> {
    let ratio = minutes / h_step;
    if ratio < 0.0 || (ratio - ratio.round()).abs() > 1e-9 {
        return Err(Error::config(format!(
            "{what} ({minutes} min) must be a non-negative multiple of h_step ({h_step} min)"
        )));
    }
    Ok(ratio.round() as usize)
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.population.validate()?;
        self.controller.validate()?;
        self.desired_signal.validate()?;
        self.noise.validate()?;
        if !self.sampling.h_obs.is_finite()
            || self.sampling.h_obs <= 0.0
            || !self.sampling.phase.is_finite()
            || self.sampling.phase < 0.0
        {
            return Err(Error::config("sampling policy needs h_obs > 0 and phase >= 0"));
        }
        self.grid().map(|_| ())
    }

    pub(crate) fn grid(&self) -> Result<StepGrid> {
        let h_step = self.population.nominal.h_step;
        let n_steps = steps_of(self.desired_signal.horizon, h_step, "horizon")?;
        let obs_every = steps_of(self.sampling.h_obs, h_step, "h_obs")?;
        if obs_every == 0 {
            return Err(Error::config("h_obs must be at least one step"));
        }
        let obs_phase = steps_of(self.sampling.phase, h_step, "phase")? % obs_every;
        let cmd_every = steps_of(self.controller.command_period, h_step, "command_period")?;
        if cmd_every == 0 {
            return Err(Error::config("command_period must be at least one step"));
        }
        Ok(StepGrid { n_steps, obs_every, obs_phase, cmd_every })
    }
}

/// Scalar error summary of one trial; all values in MW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub l1_mw: f64,
    pub l2_mw: f64,
    pub rms_mw: f64,
}

/// `l1 = sum |e_k|`, `l2 = sqrt(sum e_k^2)`, `rms = l2 / sqrt(#points)`,
/// with the error expressed in MW.
pub fn error_metrics(actual_kw: &[f64], desired_kw: &[f64]) -> Result<ErrorMetrics> {
    if actual_kw.len() != desired_kw.len() {
        return Err(Error::config(format!(
            "series length mismatch: {} vs {}",
            actual_kw.len(),
            desired_kw.len()
        )));
    }
    if actual_kw.is_empty() {
        return Err(Error::config("error metrics need at least one point"));
    }
    let mut l1 = 0.0;
    let mut sq = 0.0;
    for (a, d) in actual_kw.iter().zip(desired_kw) {
        let e = (a - d) / 1000.0;
        l1 += e.abs();
        sq += e * e;
    }
    let l2 = sq.sqrt();
    Ok(ErrorMetrics { l1_mw: l1, l2_mw: l2, rms_mw: l2 / (actual_kw.len() as f64).sqrt() })
}

/// Full record of one closed-loop trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Aggregate power in effect during each step (kW).
    pub p_actual_kw: Vec<f64>,
    /// Desired power at each step (kW).
    pub p_desired_kw: Vec<f64>,
    /// Number of TCLs ON at each step.
    pub n_on: Vec<u32>,
    /// Per-TCL maximum deadband excursion over the trial (°C).
    pub max_excursion_c: Vec<f64>,
    /// Per-TCL count of forced (commanded) toggles.
    pub forced_toggles: Vec<u32>,
    pub metrics: ErrorMetrics,
}

fn excursion_of(params: &TclParams, theta: f64) -> f64 {
    (theta - params.deadband_ceiling()).max(params.deadband_floor() - theta).max(0.0)
}

/// The closed loop itself, over pre-sampled inputs.
#[allow(clippy::too_many_arguments, clippy::needless_range_loop)]
pub(crate) fn run_closed_loop(
    params: &[TclParams],
    decay: &[f64],
    init: &[TclState],
    desired_kw: &[f64],
    controller_cfg: &ControllerConfig,
    grid: &StepGrid,
    noise_std: f64,
    control_enabled: bool,
    noise_rng: &mut ChaCha12Rng,
    actuation_rng: &mut ChaCha12Rng,
) -> Result<TrialResult> {
    let n = params.len();
    debug_assert_eq!(desired_kw.len(), grid.n_steps + 1);

    let mut states = init.to_vec();
    let mut estimator = if control_enabled {
        Some(EstimatorState::new(params.to_vec(), controller_cfg)?)
    } else {
        None
    };

    let mut p_actual = Vec::with_capacity(grid.n_steps + 1);
    let mut n_on = Vec::with_capacity(grid.n_steps + 1);
    let mut excursion = vec![0.0f64; n];
    let mut forced_toggles = vec![0u32; n];
    let mut toggled = vec![false; n];

    for k in 0..=grid.n_steps {
        if let Some(est) = estimator.as_mut() {
            if grid.is_obs(k) {
                est.ingest_measurements(&states)?;
            }
        }

        toggled.fill(false);
        if let Some(est) = estimator.as_mut() {
            if grid.is_cmd(k) {
                let cmds = est.compute_commands(desired_kw[k]);
                if !cmds.is_empty() {
                    est.apply_commands(&cmds);
                    toggled = actuate(&states, params, controller_cfg.n_bins, &cmds, actuation_rng);
                }
            }
        }

        let mut on = 0u32;
        let mut power = 0.0;
        for i in 0..n {
            let mode = if toggled[i] { states[i].mode.toggled() } else { states[i].mode };
            if mode.is_on() {
                on += 1;
                power += params[i].p_elec;
            }
            if toggled[i] {
                forced_toggles[i] += 1;
            }
            let exc = excursion_of(&params[i], states[i].theta);
            if exc > excursion[i] {
                excursion[i] = exc;
            }
        }
        p_actual.push(power);
        n_on.push(on);

        if k < grid.n_steps {
            for i in 0..n {
                let z: f64 = StandardNormal.sample(noise_rng);
                states[i] =
                    step_thermal_with_decay(&params[i], decay[i], states[i], noise_std * z, toggled[i]);
            }
            if let Some(est) = estimator.as_mut() {
                est.predict();
            }
        }
    }

    let metrics = error_metrics(&p_actual, desired_kw)?;
    Ok(TrialResult {
        p_actual_kw: p_actual,
        p_desired_kw: desired_kw.to_vec(),
        n_on,
        max_excursion_c: excursion,
        forced_toggles,
        metrics,
    })
}

fn decays_of(params: &[TclParams]) -> Result<Vec<f64>> {
    params.iter().map(compute_a).collect()
}

/// Run one trial: population, initial states and the desired signal all come
/// from the scenario seed's stream plan; process noise and actuation use the
/// trial-indexed substreams.
pub fn run_trial(scenario: &Scenario, trial: u64) -> Result<TrialResult> {
    scenario.validate()?;
    let grid = scenario.grid()?;
    let plan = StreamPlan::new(scenario.population.seed);
    let params = sample_population(&scenario.population)?;
    let decay = decays_of(&params)?;
    let init = sample_initial_states(
        &params,
        scenario.population.init_on_probability,
        &mut plan.initial_states(),
    );
    let desired = generate_desired_signal(
        &scenario.desired_signal,
        scenario.population.nominal.h_step,
        &mut plan.desired_signal(trial),
    )?;
    run_closed_loop(
        &params,
        &decay,
        &init,
        &desired,
        &scenario.controller,
        &grid,
        scenario.noise.std_dev(),
        scenario.control_enabled,
        &mut plan.process_noise(trial),
        &mut plan.actuation(trial),
    )
}

/// Per-sampling-period summary within a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HSummary {
    pub h_obs: f64,
    pub stats: BoxStats,
    /// l1 error of every trial (MW), in trial order.
    pub l1_values_mw: Vec<f64>,
    /// Count of (trial, TCL) pairs whose controlled deadband excursion
    /// exceeded the uncontrolled twin's under identical noise.
    pub comfort_violations: usize,
}

/// Box statistics of the l1 tracking error per sampling period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub per_h: Vec<HSummary>,
    pub n_trials: usize,
}

/// Sweep the sampling period: one population and one desired signal are drawn
/// from `base_seed` and held fixed across all periods and trials; process
/// noise and actuation vary per trial. When control is enabled, every trial
/// is paired with an uncontrolled twin run under the identical noise stream
/// and per-TCL excursions are compared (the comfort check).
pub fn run_sweep(
    scenario: &Scenario,
    h_list: &[f64],
    n_trials: usize,
    base_seed: u64,
) -> Result<SweepResult> {
    if n_trials < 1 {
        return Err(Error::config("n_trials must be >= 1"));
    }
    if h_list.is_empty() {
        return Err(Error::config("h_list must not be empty"));
    }
    let mut base = scenario.clone();
    base.population.seed = base_seed;
    base.validate()?;

    let plan = StreamPlan::new(base_seed);
    let params = sample_population(&base.population)?;
    let decay = decays_of(&params)?;
    let init = sample_initial_states(
        &params,
        base.population.init_on_probability,
        &mut plan.initial_states(),
    );
    let desired = generate_desired_signal(
        &base.desired_signal,
        base.population.nominal.h_step,
        &mut plan.desired_signal(0),
    )?;

    // Uncontrolled twins: one per trial, independent of h. Their excursions
    // anchor the comfort comparison.
    let twin_excursions: Option<Vec<Vec<f64>>> = if base.control_enabled {
        let grid = base.grid()?;
        let twins: Result<Vec<Vec<f64>>> = (0..n_trials as u64)
            .into_par_iter()
            .map(|trial| {
                let r = run_closed_loop(
                    &params,
                    &decay,
                    &init,
                    &desired,
                    &base.controller,
                    &grid,
                    base.noise.std_dev(),
                    false,
                    &mut plan.process_noise(trial),
                    &mut plan.actuation(trial),
                )?;
                Ok(r.max_excursion_c)
            })
            .collect();
        Some(twins?)
    } else {
        None
    };

    let mut per_h = Vec::with_capacity(h_list.len());
    for &h in h_list {
        let mut sc = base.clone();
        sc.sampling.h_obs = h;
        sc.validate()?;
        let grid = sc.grid()?;
        let trials: Result<Vec<TrialResult>> = (0..n_trials as u64)
            .into_par_iter()
            .map(|trial| {
                run_closed_loop(
                    &params,
                    &decay,
                    &init,
                    &desired,
                    &sc.controller,
                    &grid,
                    sc.noise.std_dev(),
                    sc.control_enabled,
                    &mut plan.process_noise(trial),
                    &mut plan.actuation(trial),
                )
            })
            .collect();
        let trials = trials?;

        let mut comfort_violations = 0usize;
        if let Some(twins) = &twin_excursions {
            for (trial, result) in trials.iter().enumerate() {
                comfort_violations += result
                    .max_excursion_c
                    .iter()
                    .zip(&twins[trial])
                    .filter(|(c, u)| c > u)
                    .count();
            }
        }

        let l1_values_mw: Vec<f64> = trials.iter().map(|t| t.metrics.l1_mw).collect();
        per_h.push(HSummary {
            h_obs: h,
            stats: box_stats(&l1_values_mw)?,
            l1_values_mw,
            comfort_violations,
        });
    }

    Ok(SweepResult { per_h, n_trials })
}
