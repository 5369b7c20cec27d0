//! Implementations behind the `dlcsim` subcommands. Each command reads a
//! config, runs the engine, and writes `<prefix>.csv` plus `<prefix>.json`
//! (the envelope with the resolved config). Warnings go to stderr; a
//! warning alone never fails a command.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::config::{
    load_privacy_scenario, load_scenario_config, PrivacyScenarioFile, ScenarioConfigFile,
};
use crate::error::{Error, Result};
use crate::output::{cell, fmt_sig, write_json, write_text, Csv, Envelope, ToolInfo};
use crate::population::{sample_population, PopulationSpec};
use crate::privacy::{
    privacy_sweep, BoundMethod, PrivacyScenario, PrivacySweepRow, ScalingRule,
};
use crate::sim::{run_sweep, run_trial, SweepResult, TrialResult};
use crate::tcl::TclParams;

pub const DEFAULT_SWEEP_H_LIST: &[f64] = &[1.0, 2.0, 5.0, 10.0, 15.0, 30.0, 60.0];
pub const DEFAULT_SWEEP_TRIALS: usize = 500;
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

fn load_config(path: Option<&Path>) -> Result<ScenarioConfigFile> {
    match path {
        Some(p) => load_scenario_config(p),
        None => Ok(ScenarioConfigFile::default()),
    }
}

/// The bundled scenario shipped with the binary.
pub const RECS_INCOME_JSON: &str = include_str!("../scenarios/recs-income.json");

/// Load a privacy scenario by name (`recs-income`) or path.
pub fn load_scenario_source(source: &str) -> Result<(PrivacyScenarioFile, PrivacyScenario)> {
    let file = if source == "recs-income" {
        crate::config::parse_privacy_scenario(RECS_INCOME_JSON)?
    } else {
        load_privacy_scenario(Path::new(source))?
    };
    let sc = file.clone().into_scenario()?;
    Ok((file, sc))
}

#[derive(Debug, Clone, Serialize)]
struct PopulationOutput {
    tool: ToolInfo,
    spec: PopulationSpec,
    params: Vec<TclParams>,
}

/// `gen-population`: serialize a sampled population with its seed
/// provenance.
pub fn cmd_gen_population(
    config: Option<&Path>,
    seed_override: Option<u64>,
    out: &Path,
) -> Result<()> {
    let (_, scenario) = load_config(config)?.resolve(seed_override, false)?;
    let params = sample_population(&scenario.population)?;
    write_json(
        out,
        &PopulationOutput {
            tool: ToolInfo::current(),
            spec: scenario.population,
            params,
        },
    )
}

/// Read back a `gen-population` output file.
pub fn load_population(path: &Path) -> Result<Vec<TclParams>> {
    #[derive(serde::Deserialize)]
    struct PopulationInput {
        params: Vec<TclParams>,
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    let input: PopulationInput = serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("population file {}: {e}", path.display())))?;
    for (i, p) in input.params.iter().enumerate() {
        p.validate()
            .map_err(|e| Error::config(format!("population row {i}: {e}")))?;
    }
    Ok(input.params)
}

#[derive(Debug, Clone, Serialize)]
struct SimulateResults {
    metrics: crate::sim::ErrorMetrics,
    max_excursion_c: f64,
    total_forced_toggles: u64,
}

/// `simulate`: one closed-loop trial; trajectory CSV plus envelope.
pub fn cmd_simulate(
    config: Option<&Path>,
    seed_override: Option<u64>,
    uncontrolled: bool,
    out_prefix: &Path,
) -> Result<()> {
    let (file, scenario) = load_config(config)?.resolve(seed_override, uncontrolled)?;
    let trial = run_trial(&scenario, 0)?;

    let h_step = scenario.population.nominal.h_step;
    let mut csv = Csv::new(&["step", "minute", "p_actual_kw", "p_desired_kw", "n_on"]);
    for k in 0..trial.p_actual_kw.len() {
        csv.row(&[
            k.to_string(),
            fmt_sig(k as f64 * h_step),
            fmt_sig(trial.p_actual_kw[k]),
            fmt_sig(trial.p_desired_kw[k]),
            trial.n_on[k].to_string(),
        ]);
    }
    write_outputs(out_prefix, csv.finish(), &file, &simulate_results(&trial))
}

fn simulate_results(trial: &TrialResult) -> SimulateResults {
    SimulateResults {
        metrics: trial.metrics,
        max_excursion_c: trial.max_excursion_c.iter().cloned().fold(0.0, f64::max),
        total_forced_toggles: trial.forced_toggles.iter().map(|&t| t as u64).sum(),
    }
}

fn write_outputs<C: Serialize, R: Serialize>(
    out_prefix: &Path,
    csv: String,
    config: &C,
    results: &R,
) -> Result<()> {
    write_text(&out_prefix.with_extension("csv"), &csv)?;
    write_json(
        &out_prefix.with_extension("json"),
        &Envelope { tool: ToolInfo::current(), config, results },
    )
}

fn sorted_h_list(h_list: Option<Vec<f64>>, default: &[f64]) -> Result<Vec<f64>> {
    let mut hs = h_list.unwrap_or_else(|| default.to_vec());
    if hs.iter().any(|h| !h.is_finite() || *h <= 0.0) {
        return Err(Error::config("h values must be positive"));
    }
    hs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    hs.dedup();
    Ok(hs)
}

fn sweep_csv(sweep: &SweepResult) -> String {
    let mut csv = Csv::new(&[
        "h_min",
        "n_trials",
        "mean_l1_mw",
        "stderr_mw",
        "q1",
        "median",
        "q3",
        "lo_whisker",
        "hi_whisker",
    ]);
    for h in &sweep.per_h {
        let s = &h.stats;
        csv.row(&[
            fmt_sig(h.h_obs),
            s.n.to_string(),
            fmt_sig(s.mean),
            fmt_sig(s.std_error),
            fmt_sig(s.q1),
            fmt_sig(s.median),
            fmt_sig(s.q3),
            fmt_sig(s.lo_whisker),
            fmt_sig(s.hi_whisker),
        ]);
    }
    csv.finish()
}

/// `sweep`: Monte Carlo over sampling periods; box statistics CSV plus
/// envelope.
pub fn cmd_sweep(
    config: Option<&Path>,
    seed_override: Option<u64>,
    h_list: Option<Vec<f64>>,
    trials: usize,
    out_prefix: &Path,
) -> Result<()> {
    let (file, scenario) = load_config(config)?.resolve(seed_override, false)?;
    let hs = sorted_h_list(h_list, DEFAULT_SWEEP_H_LIST)?;
    let sweep = run_sweep(&scenario, &hs, trials, scenario.population.seed)?;
    write_outputs(out_prefix, sweep_csv(&sweep), &file, &sweep)
}

pub fn parse_methods(methods: Option<&str>) -> Result<Vec<BoundMethod>> {
    let list = methods.unwrap_or("map-exact,lecam-pinsker,lecam-exact-tv,fano");
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m = match name {
            "map-exact" => BoundMethod::MapExact,
            "map-mc" => BoundMethod::MapMc,
            "lecam-pinsker" => BoundMethod::LecamPinsker,
            "lecam-exact-tv" | "lecam-tv" => BoundMethod::LecamExactTv,
            "fano" => BoundMethod::Fano,
            other => {
                return Err(Error::config(format!(
                    "unknown method '{other}' (expected map-exact, map-mc, lecam-pinsker, lecam-exact-tv, fano)"
                )))
            }
        };
        if !out.contains(&m) {
            out.push(m);
        }
    }
    if out.is_empty() {
        return Err(Error::config("no methods requested"));
    }
    Ok(out)
}

fn default_privacy_h_list(scaling: &ScalingRule, window: f64) -> Vec<f64> {
    match scaling {
        ScalingRule::ExplicitTable { table } => table.keys().map(|&h| h as f64).collect(),
        ScalingRule::LocationShift => (1..=window.round() as u64).map(|h| h as f64).collect(),
    }
}

fn privacy_csv(rows: &[PrivacySweepRow]) -> String {
    let mut csv = Csv::new(&[
        "h_min",
        "T",
        "alpha_map_exact",
        "alpha_map_mc",
        "mc_stderr",
        "alpha_lecam_pinsker",
        "alpha_lecam_tv",
        "alpha_fano",
    ]);
    for row in rows {
        csv.row(&[
            fmt_sig(row.h),
            row.t.to_string(),
            cell(row.map_exact.as_ref().map(|b| b.alpha)),
            cell(row.map_mc.as_ref().map(|b| b.alpha)),
            cell(row.map_mc.as_ref().and_then(|b| b.diagnostics.mc_std_error)),
            cell(row.lecam_pinsker.as_ref().map(|b| b.alpha)),
            cell(row.lecam_tv.as_ref().map(|b| b.alpha)),
            cell(row.fano.as_ref().map(|b| b.alpha)),
        ]);
    }
    csv.finish()
}

fn emit_warnings(rows: &[PrivacySweepRow]) {
    for row in rows {
        for w in &row.warnings {
            eprintln!("warning: h={}: {}", row.h, w);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct PrivacyConfigEcho {
    scenario: PrivacyScenarioFile,
    scaling_override: Option<String>,
    h_list: Vec<f64>,
    methods: Vec<BoundMethod>,
    mc_samples: usize,
    seed: u64,
}

/// `privacy`: evaluate the requested bounds per sampling period.
#[allow(clippy::too_many_arguments)]
pub fn cmd_privacy(
    scenario_source: &str,
    scaling_override: Option<&str>,
    h_list: Option<Vec<f64>>,
    methods: Option<&str>,
    mc_samples: usize,
    seed: Option<u64>,
    out_prefix: &Path,
) -> Result<()> {
    let (rows, echo) =
        privacy_rows(scenario_source, scaling_override, h_list, methods, mc_samples, seed)?;
    emit_warnings(&rows);
    write_outputs(out_prefix, privacy_csv(&rows), &echo, &rows)
}

fn privacy_rows(
    scenario_source: &str,
    scaling_override: Option<&str>,
    h_list: Option<Vec<f64>>,
    methods: Option<&str>,
    mc_samples: usize,
    seed: Option<u64>,
) -> Result<(Vec<PrivacySweepRow>, PrivacyConfigEcho)> {
    let (_, mut scenario) = load_scenario_source(scenario_source)?;
    match scaling_override {
        None => {}
        Some("location-shift") => scenario = scenario.with_scaling(ScalingRule::LocationShift),
        Some("explicit-table") => match &scenario.scaling {
            ScalingRule::ExplicitTable { .. } => {}
            ScalingRule::LocationShift => {
                return Err(Error::config(
                    "scenario carries no explicit table to switch to",
                ))
            }
        },
        Some(other) => {
            return Err(Error::config(format!(
                "unknown scaling rule '{other}' (expected location-shift or explicit-table)"
            )))
        }
    }
    let hs = sorted_h_list(h_list, &default_privacy_h_list(&scenario.scaling, scenario.window))?;
    let methods = parse_methods(methods)?;
    let seed = seed.unwrap_or(crate::config::DEFAULT_MASTER_SEED);
    let rows = privacy_sweep(&scenario, &hs, &methods, mc_samples, seed)?;
    let echo = PrivacyConfigEcho {
        scenario: PrivacyScenarioFile::from_scenario(&scenario),
        scaling_override: scaling_override.map(String::from),
        h_list: hs,
        methods,
        mc_samples,
        seed,
    };
    Ok((rows, echo))
}

#[derive(Debug, Clone, Serialize)]
struct TradeoffConfigEcho {
    simulation: ScenarioConfigFile,
    privacy: PrivacyConfigEcho,
    trials: usize,
}

#[derive(Debug, Clone, Serialize)]
struct TradeoffRow {
    h_min: f64,
    n_trials: usize,
    mean_l1_mw: f64,
    stderr_mw: f64,
    q1: f64,
    median: f64,
    q3: f64,
    lo_whisker: f64,
    hi_whisker: f64,
    t: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_map_exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_map_mc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_stderr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_lecam_pinsker: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_lecam_tv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_fano: Option<f64>,
}

/// `tradeoff`: the headline artifact — per sampling period, the tracking
/// error (utility) joined with the privacy bounds. Inner join on `h`:
/// periods where the privacy side produced no value are excluded with a
/// warning.
#[allow(clippy::too_many_arguments)]
pub fn cmd_tradeoff(
    config: Option<&Path>,
    scenario_source: &str,
    scaling_override: Option<&str>,
    h_list: Option<Vec<f64>>,
    trials: usize,
    methods: Option<&str>,
    mc_samples: usize,
    seed_override: Option<u64>,
    out_prefix: &Path,
) -> Result<()> {
    let (file, scenario) = load_config(config)?.resolve(seed_override, false)?;
    let hs = sorted_h_list(h_list, DEFAULT_SWEEP_H_LIST)?;
    let sweep = run_sweep(&scenario, &hs, trials, scenario.population.seed)?;
    let (privacy, echo) = privacy_rows(
        scenario_source,
        scaling_override,
        Some(hs.clone()),
        methods,
        mc_samples,
        seed_override,
    )?;
    emit_warnings(&privacy);

    let by_h: BTreeMap<u64, &PrivacySweepRow> =
        privacy.iter().map(|r| (r.h.to_bits(), r)).collect();
    let mut rows = Vec::new();
    for h in &sweep.per_h {
        let Some(p) = by_h.get(&h.h_obs.to_bits()) else {
            eprintln!("warning: h={} missing from the privacy side; row excluded", h.h_obs);
            continue;
        };
        let populated = p.map_exact.is_some()
            || p.map_mc.is_some()
            || p.lecam_pinsker.is_some()
            || p.lecam_tv.is_some()
            || p.fano.is_some();
        if !populated {
            eprintln!(
                "warning: h={} produced no privacy value; row excluded from the join",
                h.h_obs
            );
            continue;
        }
        let s = &h.stats;
        rows.push(TradeoffRow {
            h_min: h.h_obs,
            n_trials: s.n,
            mean_l1_mw: s.mean,
            stderr_mw: s.std_error,
            q1: s.q1,
            median: s.median,
            q3: s.q3,
            lo_whisker: s.lo_whisker,
            hi_whisker: s.hi_whisker,
            t: p.t,
            alpha_map_exact: p.map_exact.as_ref().map(|b| b.alpha),
            alpha_map_mc: p.map_mc.as_ref().map(|b| b.alpha),
            mc_stderr: p.map_mc.as_ref().and_then(|b| b.diagnostics.mc_std_error),
            alpha_lecam_pinsker: p.lecam_pinsker.as_ref().map(|b| b.alpha),
            alpha_lecam_tv: p.lecam_tv.as_ref().map(|b| b.alpha),
            alpha_fano: p.fano.as_ref().map(|b| b.alpha),
        });
    }

    let mut csv = Csv::new(&[
        "h_min",
        "n_trials",
        "mean_l1_mw",
        "stderr_mw",
        "q1",
        "median",
        "q3",
        "lo_whisker",
        "hi_whisker",
        "T",
        "alpha_map_exact",
        "alpha_map_mc",
        "mc_stderr",
        "alpha_lecam_pinsker",
        "alpha_lecam_tv",
        "alpha_fano",
    ]);
    for r in &rows {
        csv.row(&[
            fmt_sig(r.h_min),
            r.n_trials.to_string(),
            fmt_sig(r.mean_l1_mw),
            fmt_sig(r.stderr_mw),
            fmt_sig(r.q1),
            fmt_sig(r.median),
            fmt_sig(r.q3),
            fmt_sig(r.lo_whisker),
            fmt_sig(r.hi_whisker),
            r.t.to_string(),
            cell(r.alpha_map_exact),
            cell(r.alpha_map_mc),
            cell(r.mc_stderr),
            cell(r.alpha_lecam_pinsker),
            cell(r.alpha_lecam_tv),
            cell(r.alpha_fano),
        ]);
    }

    let echo = TradeoffConfigEcho { simulation: file, privacy: echo, trials };
    write_outputs(out_prefix, csv.finish(), &echo, &rows)
}
