//! Single-TCL thermal dynamics and the local hysteresis controller.
//!
//! A cooling TCL evolves by the discrete-time RC model
//! `theta' = a*theta + (1 - a)*(theta_a - m*theta_g) + eps` with
//! `a = exp(-h/(R*C))`, and its thermostat holds the mode inside the deadband
//! `[theta_set - delta/2, theta_set + delta/2]`, switching at the edges.
//! Everything here is a pure function of value types.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Operating mode of a TCL compressor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Off,
    On,
}

impl Mode {
    pub fn as_f64(self) -> f64 {
        match self {
            Mode::Off => 0.0,
            Mode::On => 1.0,
        }
    }

    pub fn is_on(self) -> bool {
        matches!(self, Mode::On)
    }

    pub fn toggled(self) -> Mode {
        match self {
            Mode::Off => Mode::On,
            Mode::On => Mode::Off,
        }
    }
}

/// Physical constants of one TCL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TclParams {
    /// Thermal resistance (°C/kW).
    pub r: f64,
    /// Thermal capacitance (kWh/°C).
    pub c: f64,
    /// Ambient temperature (°C).
    pub theta_a: f64,
    /// Thermostat setpoint (°C).
    pub theta_set: f64,
    /// Deadband width (°C).
    pub delta: f64,
    /// Energy transfer rate when ON (kW).
    pub p_trans: f64,
    /// Electrical power draw when ON (kW).
    pub p_elec: f64,
    /// Simulation step (minutes).
    pub h_step: f64,
}

impl TclParams {
    /// Temperature gain when ON (°C): `theta_g = R * p_trans`.
    pub fn theta_g(&self) -> f64 {
        self.r * self.p_trans
    }

    /// Lower deadband edge (°C).
    pub fn deadband_floor(&self) -> f64 {
        self.theta_set - self.delta / 2.0
    }

    /// Upper deadband edge (°C).
    pub fn deadband_ceiling(&self) -> f64 {
        self.theta_set + self.delta / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            (self.r, "r"),
            (self.c, "c"),
            (self.delta, "delta"),
            (self.p_trans, "p_trans"),
            (self.p_elec, "p_elec"),
            (self.h_step, "h_step"),
        ];
        for (v, name) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("TclParams.{name} must be positive, got {v}")));
            }
        }
        if !self.theta_a.is_finite() || !self.theta_set.is_finite() {
            return Err(Error::config("TclParams temperatures must be finite"));
        }
        // Reachability: ON must drive below the deadband floor and OFF above
        // the ceiling, otherwise the TCL cannot duty-cycle.
        if self.theta_a - self.theta_g() >= self.deadband_floor() {
            return Err(Error::config(format!(
                "ON steady state {} does not reach below deadband floor {}",
                self.theta_a - self.theta_g(),
                self.deadband_floor()
            )));
        }
        if self.deadband_ceiling() >= self.theta_a {
            return Err(Error::config(format!(
                "ambient {} does not reach above deadband ceiling {}",
                self.theta_a,
                self.deadband_ceiling()
            )));
        }
        Ok(())
    }
}

/// Thermal state of one TCL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TclState {
    /// Internal temperature (°C).
    pub theta: f64,
    /// Compressor mode.
    pub mode: Mode,
}

/// Per-step process noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Per-step variance (°C²).
    pub variance: f64,
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if self.variance < 0.0 || !self.variance.is_finite() {
            return Err(Error::config(format!(
                "noise variance must be >= 0, got {}",
                self.variance
            )));
        }
        Ok(())
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Per-step thermal decay factor `a = exp(-h/(R*C))`, `h` in hours.
pub fn compute_a(params: &TclParams) -> Result<f64> {
    let rc = params.r * params.c;
    if rc <= 0.0 || !rc.is_finite() {
        return Err(Error::config(format!("R*C must be positive, got {rc}")));
    }
    let h_hours = params.h_step / 60.0;
    Ok((-h_hours / rc).exp())
}

/// Thermostat rule: switch OFF below the floor, ON above the ceiling, hold
/// the current mode otherwise (boundary equality holds the mode).
pub fn hysteresis_next_mode(params: &TclParams, theta_next: f64, m_curr: Mode) -> Mode {
    if theta_next < params.deadband_floor() {
        Mode::Off
    } else if theta_next > params.deadband_ceiling() {
        Mode::On
    } else {
        m_curr
    }
}

/// Advance one TCL by one step.
///
/// Order: the forced toggle (a DLC command) flips the mode first, so the
/// commanded mode shapes this step's temperature evolution; then the thermal
/// update runs, then the local hysteresis rule picks the next mode.
pub fn step_thermal(params: &TclParams, state: TclState, eps: f64, forced_toggle: bool) -> TclState {
    let a = compute_a(params).expect("validated params");
    step_thermal_with_decay(params, a, state, eps, forced_toggle)
}

/// [`step_thermal`] with the decay factor precomputed; the per-step hot path.
pub fn step_thermal_with_decay(
    params: &TclParams,
    a: f64,
    state: TclState,
    eps: f64,
    forced_toggle: bool,
) -> TclState {
    let m = if forced_toggle { state.mode.toggled() } else { state.mode };
    let theta_next =
        a * state.theta + (1.0 - a) * (params.theta_a - m.as_f64() * params.theta_g()) + eps;
    let m_next = hysteresis_next_mode(params, theta_next, m);
    TclState { theta: theta_next, mode: m_next }
}

/// Linearized per-step drift rates at the setpoint, and the implied duty
/// cycle. Diagnostic: validates that a parameter set cycles and what ON
/// fraction to expect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftRates {
    /// Warming rate while OFF (°C/step, positive).
    pub d_off: f64,
    /// Cooling rate while ON (°C/step, negative).
    pub d_on: f64,
    /// Long-run ON fraction, `d_off / (d_off + |d_on|)`.
    pub duty_cycle: f64,
}

pub fn on_off_drift_rates(params: &TclParams) -> Result<DriftRates> {
    let a = compute_a(params)?;
    let d_off = (1.0 - a) * (params.theta_a - params.theta_set);
    let d_on = (1.0 - a) * (params.theta_a - params.theta_g() - params.theta_set);
    if d_on >= 0.0 || d_off <= 0.0 {
        return Err(Error::config(format!(
            "TCL does not cycle: d_off={d_off}, d_on={d_on}"
        )));
    }
    let duty_cycle = d_off / (d_off + d_on.abs());
    Ok(DriftRates { d_off, d_on, duty_cycle })
}

#[cfg(test)]
pub(crate) fn default_params() -> TclParams {
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

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decay_factor_closed_form() {
        // exp(-(1/60)/20) and exp(-0.5/20), frozen from an independent
        // evaluation of the closed form.
        let p = default_params();
        assert!((compute_a(&p).unwrap() - 0.9991670137924583).abs() < 1e-12);
        let p30 = TclParams { h_step: 30.0, ..p };
        assert!((compute_a(&p30).unwrap() - 0.9753099120283326).abs() < 1e-12);
    }

    #[test]
    fn decay_factor_zero_step_limit() {
        let mut p = default_params();
        let mut last = compute_a(&p).unwrap();
        for h in [0.1, 0.01, 0.001] {
            p.h_step = h;
            let a = compute_a(&p).unwrap();
            assert!(a > last);
            last = a;
        }
        assert!((last - 1.0).abs() < 1e-5);
    }

    #[test]
    fn decay_factor_rejects_nonpositive_rc() {
        let p = TclParams { r: -2.0, ..default_params() };
        assert!(compute_a(&p).is_err());
    }

    #[test]
    fn thermal_fixed_points() {
        let p = default_params();
        // OFF fixed point: ambient.
        let s = TclState { theta: p.theta_a, mode: Mode::Off };
        let next = step_thermal(&p, s, 0.0, false);
        assert!((next.theta - p.theta_a).abs() < 1e-12);
        // ON fixed point: ambient minus the temperature gain. theta_g = 24
        // puts the fixed point at 8 °C, far below the deadband, so the
        // hysteresis switches the mode off; the temperature is what matters.
        let s = TclState { theta: p.theta_a - p.theta_g(), mode: Mode::On };
        let next = step_thermal(&p, s, 0.0, false);
        assert!((next.theta - (p.theta_a - p.theta_g())).abs() < 1e-12);
    }

    #[test]
    fn thermal_step_hand_value() {
        // theta' = a*20 + (1-a)*8 with a = exp(-1/1200); frozen from a hand
        // evaluation of the difference equation.
        let p = default_params();
        let s = TclState { theta: 20.0, mode: Mode::On };
        let next = step_thermal(&p, s, 0.0, false);
        assert!((next.theta - 19.9900041655095).abs() < 1e-10);
    }

    #[test]
    fn forced_toggle_applies_before_thermal_update() {
        let p = default_params();
        let s = TclState { theta: 20.0, mode: Mode::Off };
        let toggled = step_thermal(&p, s, 0.0, true);
        let already_on = step_thermal(&p, TclState { mode: Mode::On, ..s }, 0.0, false);
        assert_eq!(toggled, already_on);
    }

    #[test]
    fn hysteresis_three_cases() {
        let p = default_params(); // setpoint 20, delta 0.5
        assert_eq!(hysteresis_next_mode(&p, 20.3, Mode::Off), Mode::On);
        assert_eq!(hysteresis_next_mode(&p, 19.7, Mode::On), Mode::Off);
        assert_eq!(hysteresis_next_mode(&p, 20.0, Mode::On), Mode::On);
        assert_eq!(hysteresis_next_mode(&p, 20.0, Mode::Off), Mode::Off);
        // Boundary equality keeps the current mode.
        assert_eq!(hysteresis_next_mode(&p, 20.25, Mode::Off), Mode::Off);
        assert_eq!(hysteresis_next_mode(&p, 19.75, Mode::On), Mode::On);
    }

    #[test]
    fn drift_rates_and_duty_cycle() {
        let p = default_params(); // theta_g = 24: symmetric drifts
        let d = on_off_drift_rates(&p).unwrap();
        assert!((d.duty_cycle - 0.5).abs() < 1e-12);
        // theta_g = 36 tilts the duty cycle to 1/3.
        let p2 = TclParams { p_trans: 18.0, ..p };
        let d2 = on_off_drift_rates(&p2).unwrap();
        assert!((d2.duty_cycle - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn drift_rates_reject_non_cycling() {
        // Ambient below the setpoint: OFF never warms past the ceiling.
        let p = TclParams { theta_a: 15.0, ..default_params() };
        assert!(on_off_drift_rates(&p).is_err());
    }

    #[test]
    fn validate_rejects_unreachable_deadband() {
        // Weak compressor: ON steady state inside the deadband.
        let p = TclParams { p_trans: 6.05, ..default_params() };
        assert!(p.validate().is_err());
        assert!(default_params().validate().is_ok());
    }

    proptest! {
        /// Uncontrolled zero-noise trajectories stay within the deadband
        /// widened by one step's maximum drift, and any excursion is answered
        /// by a mode switch.
        #[test]
        fn deadband_containment(theta0 in 19.75f64..20.25, on in any::<bool>()) {
            let p = default_params();
            let a = compute_a(&p).unwrap();
            let s_max = (1.0 - a) * (p.theta_a - p.deadband_floor())
                .max(p.deadband_ceiling() + p.theta_g() - p.theta_a);
            let mut s = TclState { theta: theta0, mode: if on { Mode::On } else { Mode::Off } };
            for _ in 0..500 {
                s = step_thermal(&p, s, 0.0, false);
                prop_assert!(s.theta >= p.deadband_floor() - s_max - 1e-12);
                prop_assert!(s.theta <= p.deadband_ceiling() + s_max + 1e-12);
                if s.theta > p.deadband_ceiling() {
                    prop_assert_eq!(s.mode, Mode::On);
                }
                if s.theta < p.deadband_floor() {
                    prop_assert_eq!(s.mode, Mode::Off);
                }
            }
        }

        /// With noise, every step either stays within one drift of the band
        /// or contracts an existing excursion geometrically, modulo that
        /// step's noise; and an excursion always has the corrective mode
        /// engaged by the next step.
        #[test]
        fn deadband_excursions_contract_under_noise(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let p = default_params();
            let a = compute_a(&p).unwrap();
            let s_max = (1.0 - a) * (p.theta_a - p.deadband_floor())
                .max(p.deadband_ceiling() + p.theta_g() - p.theta_a);
            let excursion = |theta: f64| -> f64 {
                (theta - p.deadband_ceiling()).max(p.deadband_floor() - theta).max(0.0)
            };
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let mut s = TclState { theta: 20.0, mode: Mode::Off };
            for _ in 0..300 {
                let d_prev = excursion(s.theta);
                let eps: f64 = rng.random_range(-0.05..0.05);
                s = step_thermal(&p, s, eps, false);
                let entry = if d_prev == 0.0 { s_max } else { 0.0 };
                prop_assert!(excursion(s.theta) <= a * d_prev + entry + eps.abs() + 1e-12);
                if s.theta > p.deadband_ceiling() {
                    prop_assert_eq!(s.mode, Mode::On);
                }
                if s.theta < p.deadband_floor() {
                    prop_assert_eq!(s.mode, Mode::Off);
                }
            }
        }

        /// Identical inputs give bit-identical outputs.
        #[test]
        fn determinism(theta in 15f64..25.0, eps in -0.1f64..0.1, on in any::<bool>(), tog in any::<bool>()) {
            let p = default_params();
            let s = TclState { theta, mode: if on { Mode::On } else { Mode::Off } };
            let x = step_thermal(&p, s, eps, tog);
            let y = step_thermal(&p, s, eps, tog);
            prop_assert_eq!(x.theta.to_bits(), y.theta.to_bits());
            prop_assert_eq!(x.mode, y.mode);
        }

        /// The decay factor strictly decreases in the step size.
        #[test]
        fn decay_monotone_in_step(h1 in 0.1f64..120.0, dh in 0.1f64..60.0) {
            let p1 = TclParams { h_step: h1, ..default_params() };
            let p2 = TclParams { h_step: h1 + dh, ..default_params() };
            prop_assert!(compute_a(&p2).unwrap() < compute_a(&p1).unwrap());
        }
    }
}
