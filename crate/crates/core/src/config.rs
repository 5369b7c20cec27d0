//! Strict-schema JSON configuration with built-in defaults.
//!
//! Every section and field may be omitted (defaults fill in); unknown keys
//! are rejected with serde's line/column diagnostics. The resolved
//! configuration — after defaults and CLI overrides — is embedded in every
//! result envelope, and re-running on that resolved config reproduces the
//! payload byte for byte.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::population::PopulationSpec;
use crate::privacy::{ObservationFamily, PrivacyScenario, ScalingRule, TypeObservation, TypePrior};
use crate::signal::DesiredSignalSpec;
use crate::sim::{SamplingPolicy, Scenario};
use crate::tcl::{NoiseModel, TclParams};

pub const DEFAULT_MASTER_SEED: u64 = 0x00C0_FFEE;

fn default_nominal() -> TclParams {
    TclParams {
        r: 2.0,
        c: 10.0,
        theta_a: 32.0,
        theta_set: 20.0,
        delta: 0.5,
        p_trans: 12.0,
        p_elec: 2.5,
        h_step: 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationSection {
    pub n_tcls: usize,
    pub nominal: TclParams,
    pub jitter_fraction: f64,
    pub init_on_probability: f64,
}

impl Default for PopulationSection {
    fn default() -> Self {
        PopulationSection {
            n_tcls: 1000,
            nominal: default_nominal(),
            jitter_fraction: 0.1,
            init_on_probability: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerSection {
    pub n_bins: usize,
    /// Minutes between command rounds; `null`/omitted means every step.
    pub command_period: Option<f64>,
}

impl Default for ControllerSection {
    fn default() -> Self {
        ControllerSection { n_bins: 10, command_period: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub h_obs: f64,
    pub phase: f64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection { h_obs: 1.0, phase: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesiredSignalSection {
    pub knot_period: f64,
    pub low_kw: f64,
    pub high_kw: f64,
}

impl Default for DesiredSignalSection {
    fn default() -> Self {
        DesiredSignalSection { knot_period: 5.0, low_kw: 875.0, high_kw: 1312.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub variance: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection { variance: 0.0005 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedsSection {
    pub master: u64,
}

impl Default for SeedsSection {
    fn default() -> Self {
        SeedsSection { master: DEFAULT_MASTER_SEED }
    }
}

/// File form of a simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfigFile {
    pub population: PopulationSection,
    pub controller: ControllerSection,
    pub sampling: SamplingSection,
    pub desired_signal: DesiredSignalSection,
    pub noise: NoiseSection,
    /// Horizon (minutes).
    pub horizon: f64,
    pub seeds: SeedsSection,
    pub control_enabled: bool,
}

impl Default for ScenarioConfigFile {
    fn default() -> Self {
        ScenarioConfigFile {
            population: PopulationSection::default(),
            controller: ControllerSection::default(),
            sampling: SamplingSection::default(),
            desired_signal: DesiredSignalSection::default(),
            noise: NoiseSection::default(),
            horizon: 60.0,
            seeds: SeedsSection::default(),
            control_enabled: true,
        }
    }
}

impl ScenarioConfigFile {
    /// Apply CLI overrides, fill derived defaults, and build the engine
    /// scenario. The returned file is fully explicit — feeding it back in
    /// reproduces the identical scenario.
    pub fn resolve(
        mut self,
        seed_override: Option<u64>,
        uncontrolled: bool,
    ) -> Result<(ScenarioConfigFile, Scenario)> {
        if let Some(seed) = seed_override {
            self.seeds.master = seed;
        }
        if uncontrolled {
            self.control_enabled = false;
        }
        if self.controller.command_period.is_none() {
            self.controller.command_period = Some(self.population.nominal.h_step);
        }
        let scenario = Scenario {
            population: PopulationSpec {
                n_tcls: self.population.n_tcls,
                nominal: self.population.nominal,
                jitter_fraction: self.population.jitter_fraction,
                init_on_probability: self.population.init_on_probability,
                seed: self.seeds.master,
            },
            controller: ControllerConfig {
                n_bins: self.controller.n_bins,
                command_period: self.controller.command_period.expect("filled above"),
            },
            sampling: SamplingPolicy { h_obs: self.sampling.h_obs, phase: self.sampling.phase },
            desired_signal: DesiredSignalSpec {
                knot_period: self.desired_signal.knot_period,
                low_kw: self.desired_signal.low_kw,
                high_kw: self.desired_signal.high_kw,
                horizon: self.horizon,
            },
            noise: NoiseModel { variance: self.noise.variance },
            control_enabled: self.control_enabled,
        };
        scenario.validate()?;
        Ok((self, scenario))
    }
}

/// Parse a scenario config, mapping schema violations to configuration
/// errors that carry serde's line/column context.
pub fn parse_scenario_config(json: &str) -> Result<ScenarioConfigFile> {
    serde_json::from_str(json).map_err(|e| Error::config(format!("scenario config: {e}")))
}

pub fn load_scenario_config(path: &Path) -> Result<ScenarioConfigFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario_config(&text)
}

/// File form of a privacy scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyScenarioFile {
    pub prior: PriorSection,
    /// Per-type log-normal mixtures at the annual reference scale.
    pub family_annual: Vec<TypeObservation>,
    /// Observation window (minutes).
    pub window: f64,
    pub scaling: ScalingRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub labels: Vec<String>,
    pub weights: Vec<f64>,
}

impl PrivacyScenarioFile {
    pub fn into_scenario(self) -> Result<PrivacyScenario> {
        let scenario = PrivacyScenario {
            prior: TypePrior::new(self.prior.labels, self.prior.weights)?,
            annual_family: ObservationFamily::new(self.family_annual)?,
            window: self.window,
            scaling: self.scaling,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_scenario(scenario: &PrivacyScenario) -> Self {
        PrivacyScenarioFile {
            prior: PriorSection {
                labels: scenario.prior.labels().to_vec(),
                weights: scenario.prior.probabilities().to_vec(),
            },
            family_annual: scenario.annual_family.types().to_vec(),
            window: scenario.window,
            scaling: scenario.scaling.clone(),
        }
    }
}

pub fn parse_privacy_scenario(json: &str) -> Result<PrivacyScenarioFile> {
    serde_json::from_str(json).map_err(|e| Error::config(format!("privacy scenario: {e}")))
}

pub fn load_privacy_scenario(path: &Path) -> Result<PrivacyScenarioFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    parse_privacy_scenario(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privacy::recs_income_scenario;

    #[test]
    fn empty_config_resolves_to_built_in_defaults() {
        let (file, scenario) = parse_scenario_config("{}").unwrap().resolve(None, false).unwrap();
        assert_eq!(scenario.population.n_tcls, 1000);
        assert_eq!(scenario.population.nominal.p_elec, 2.5);
        assert_eq!(scenario.population.nominal.theta_a, 32.0);
        assert_eq!(scenario.noise.variance, 0.0005);
        assert_eq!(scenario.desired_signal.horizon, 60.0);
        assert_eq!(scenario.desired_signal.low_kw, 875.0);
        assert_eq!(scenario.desired_signal.high_kw, 1312.5);
        assert_eq!(scenario.controller.n_bins, 10);
        assert_eq!(scenario.controller.command_period, 1.0);
        assert_eq!(scenario.sampling.h_obs, 1.0);
        assert!(scenario.control_enabled);
        assert_eq!(file.seeds.master, DEFAULT_MASTER_SEED);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = parse_scenario_config(r#"{"population": {"n_tcl": 3}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown field"), "{msg}");
        assert!(msg.contains("line"), "{msg}");
        let err = parse_scenario_config(r#"{"populations": {}}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn overrides_apply_before_validation() {
        let (file, scenario) =
            parse_scenario_config("{}").unwrap().resolve(Some(99), true).unwrap();
        assert_eq!(file.seeds.master, 99);
        assert_eq!(scenario.population.seed, 99);
        assert!(!scenario.control_enabled);
        assert!(!file.control_enabled);
    }

    #[test]
    fn resolved_config_round_trips() {
        let (file, scenario) = parse_scenario_config(r#"{"sampling": {"h_obs": 5}}"#)
            .unwrap()
            .resolve(Some(7), false)
            .unwrap();
        let json = serde_json::to_string(&file).unwrap();
        let (file2, scenario2) = parse_scenario_config(&json).unwrap().resolve(None, false).unwrap();
        assert_eq!(file, file2);
        assert_eq!(scenario, scenario2);
    }

    #[test]
    fn invalid_configs_fail_resolution() {
        let cfg = parse_scenario_config(r#"{"sampling": {"h_obs": 1.5}}"#).unwrap();
        assert!(cfg.resolve(None, false).is_err());
        let cfg = parse_scenario_config(r#"{"population": {"jitter_fraction": 0.9}}"#).unwrap();
        assert!(cfg.resolve(None, false).is_err());
    }

    #[test]
    fn privacy_scenario_file_round_trips() {
        let sc = recs_income_scenario();
        let file = PrivacyScenarioFile::from_scenario(&sc);
        let json = serde_json::to_string_pretty(&file).unwrap();
        let back = parse_privacy_scenario(&json).unwrap().into_scenario().unwrap();
        assert_eq!(back.window, sc.window);
        assert_eq!(back.scaling, sc.scaling);
        assert_eq!(back.annual_family, sc.annual_family);
        // Weights were stored normalized; renormalization is within an ulp.
        for (a, b) in back.prior.probabilities().iter().zip(sc.prior.probabilities()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn privacy_scenario_rejects_mismatched_shapes() {
        let json = r#"{
            "prior": {"labels": ["a", "b"], "weights": [1, 1]},
            "family_annual": [
                {"components": [{"weight": 1.0, "mu": 0.0, "sigma": 1.0}]}
            ],
            "window": 60,
            "scaling": "location-shift"
        }"#;
        assert!(parse_privacy_scenario(json).unwrap().into_scenario().is_err());
    }
}
