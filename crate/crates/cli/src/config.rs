//! JSON run configurations. Complex numbers are `[re, im]` pairs and
//! expressions are strings; unknown keys are rejected everywhere.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use ptkit_core::circuit::{CircuitMode, CircuitSpec, DriveSweep, Resistance};
use ptkit_core::model::TimeFn;
use ptkit_core::propagate::{uniform_grid, Frame, IntegratorConfig};
use ptkit_core::{parse, ModelSpec, ParamMap, Result, C64};

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

fn default_initial() -> [C64; 2] {
    [one(), C64::new(0.0, 0.0)]
}

pub fn param_map(params: &BTreeMap<String, C64>) -> Result<ParamMap> {
    let mut map = ParamMap::new();
    for (name, value) in params {
        map.insert(name, *value)?;
    }
    Ok(map)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub nu: C64,
    pub nu_prime: C64,
    pub f1: String,
    pub f2: String,
    pub omega1: String,
    pub omega2: String,
    #[serde(default)]
    pub params: BTreeMap<String, C64>,
    #[serde(default)]
    pub t_ref: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_scale: Option<[C64; 2]>,
}

impl ModelConfig {
    pub fn build(&self) -> Result<ModelSpec> {
        self.build_with(&param_map(&self.params)?)
    }

    pub fn build_with(&self, params: &ParamMap) -> Result<ModelSpec> {
        let mut spec = ModelSpec::from_parts(
            self.nu,
            self.nu_prime,
            TimeFn::parse(&self.f1, params)?,
            TimeFn::parse(&self.f2, params)?,
            TimeFn::parse(&self.omega1, params)?,
            TimeFn::parse(&self.omega2, params)?,
            params.clone(),
        )?
        .with_t_ref(self.t_ref);
        if let Some([d1, d2]) = self.frame_scale {
            spec = spec.with_frame_scale(d1, d2)?;
        }
        Ok(spec)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ResistanceConfig {
    Zero,
    Matched,
    Custom(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub l0: f64,
    pub c0: f64,
    pub f: String,
    pub mode: CircuitMode,
    /// Defaults to zero for `lc` and `L₀f′` for `rlc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resistance: Option<ResistanceConfig>,
    #[serde(default)]
    pub params: BTreeMap<String, C64>,
}

impl CircuitConfig {
    pub fn build(&self) -> Result<CircuitSpec> {
        let params = param_map(&self.params)?;
        let spec = CircuitSpec::parse(self.l0, self.c0, &self.f, self.mode, params)?;
        Ok(match &self.resistance {
            None => spec,
            Some(ResistanceConfig::Zero) => spec.with_resistance(Resistance::Zero),
            Some(ResistanceConfig::Matched) => spec.with_resistance(Resistance::Matched),
            Some(ResistanceConfig::Custom(src)) => {
                spec.with_resistance(Resistance::Custom(parse(src)?))
            }
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Model(ModelConfig),
    Circuit(CircuitConfig),
}

impl SystemConfig {
    pub fn model(&self) -> Result<ModelSpec> {
        match self {
            SystemConfig::Model(m) => m.build(),
            SystemConfig::Circuit(c) => c.build()?.to_model(),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    pub dt_out: f64,
}

impl TimeConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.t0.is_finite() && self.t1.is_finite() && self.t1 > self.t0) {
            return Err(format!(
                "time window must satisfy t0 < t1, got [{}, {}]",
                self.t0, self.t1
            ));
        }
        if !(self.dt_out > 0.0) {
            return Err(format!("dt_out must be positive, got {}", self.dt_out));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        uniform_grid(self.t0, self.t1, self.dt_out)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub system: SystemConfig,
    pub time: TimeConfig,
    /// State at `t0` in the selected frame; `(V₀, I₀)` for circuits.
    #[serde(default = "default_initial")]
    pub initial: [C64; 2],
    #[serde(default = "default_frame")]
    pub frame: Frame,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

fn default_frame() -> Frame {
    Frame::Original
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveConfig {
    pub system: SystemConfig,
    pub time: TimeConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignConfig {
    Minus,
    Plus,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CaseConfig {
    /// Constant `Γ̃ = gamma`.
    A { gamma: C64 },
    /// `Γ̃ = ∓tanh τ`.
    B { sign: SignConfig },
    /// `Γ̃ = αe^{iγτ} − β`.
    C { alpha: C64, beta: C64, gamma: C64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauConfig {
    pub t1: f64,
    pub dt_out: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyticConfig {
    pub case: CaseConfig,
    #[serde(default = "default_initial")]
    pub initial: [C64; 2],
    #[serde(default = "one")]
    pub nu: C64,
    #[serde(default = "one")]
    pub nu_prime: C64,
    pub tau: TauConfig,
    #[serde(default = "tight_integrator")]
    pub integrator: IntegratorConfig,
}

fn tight_integrator() -> IntegratorConfig {
    IntegratorConfig::with_tolerances(1e-12, 1e-14)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeConfig {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl RangeConfig {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.step > 0.0
            && self.stop >= self.start
            && self.start.is_finite()
            && self.stop.is_finite())
        {
            return Err(format!("invalid range {self:?}"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + self.step * k as f64).collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdSweepConfig {
    #[serde(default = "unit")]
    pub l0: f64,
    #[serde(default = "unit")]
    pub c0: f64,
    pub mode: CircuitMode,
    pub gammas: RangeConfig,
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSweepConfig {
    pub model: ModelConfig,
    /// Parameter overwritten with each sweep value.
    pub param: String,
    pub values: RangeConfig,
    pub period: f64,
    #[serde(default = "default_frame")]
    pub frame: Frame,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepConfig {
    Drive(DriveSweep),
    Threshold(ThresholdSweepConfig),
    Model(Box<ModelSweepConfig>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloquetConfig {
    pub sweep: SweepConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpConfig {
    pub system: SystemConfig,
    pub time: TimeConfig,
    #[serde(default = "default_tol_ep")]
    pub tol_ep: f64,
}

fn default_tol_ep() -> f64 {
    1e-6
}
