//! Time-modulated LC and RLC circuits as members of the Hamiltonian family.
//!
//! With `L(t) = L₀f(t)`, `C(t) = C₀/f(t)` and state `Ψ = (V, I)`, Kirchhoff's
//! laws `∂ₜV = −I/C`, `∂ₜI = V/L + (R/L)I` read `i∂ₜΨ = HΨ` with
//!
//! ```text
//! H = i [[0, −1/C], [1/L, R/L]].
//! ```
//!
//! This is the family member `f₁ = f`, `f₂ = 1`, `ω₁ = 0`, `ω₂ = iR/(L₀f)`,
//! `ν = −i/C₀`, `ν′ = i/L₀`. The frame prefactor `diag(C₀^{−1/2}, L₀^{−1/2})`
//! makes the effective couplings `∓iω₀` with `ω₀ = 1/√(L₀C₀)`.
//!
//! In RLC mode the resistance follows `R = L₀∂ₜf`, which gives `Γ = ∂ₜln f`;
//! in LC mode `R = 0` and `Γ = ½∂ₜln f`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse, BinOp, Expr, ParamMap};
use crate::floquet::{phase_sweep, PhasePoint};
use crate::mat2::Mat2;
use crate::model::{ModelSpec, TimeFn};
use crate::propagate::{propagate_state, uniform_grid, IntegratorConfig};

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CircuitMode {
    Lc,
    Rlc,
}

/// Resistance law.
#[derive(Clone, Debug, PartialEq)]
pub enum Resistance {
    /// `R = 0`.
    Zero,
    /// `R = L₀∂ₜf`.
    Matched,
    /// Arbitrary `R(t)`.
    Custom(Expr),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    pub l0: f64,
    pub c0: f64,
    pub f: Expr,
    pub mode: CircuitMode,
    pub resistance: Resistance,
    pub params: ParamMap,
}

/// Energies at one time; `v` and `i` are the real parts of the state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergySample {
    pub t: f64,
    pub v: f64,
    pub i: f64,
    pub u_l: f64,
    pub u_c: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyTrace {
    pub samples: Vec<EnergySample>,
    /// Propagation stopped at the overflow guard.
    pub truncated: bool,
    /// Largest `|Im V|`, `|Im I|` relative to the state norm.
    pub max_imag: f64,
}

/// Closed-form static threshold for `f = e^{−γt}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StaticThreshold {
    pub gamma_c: f64,
    /// `∓√(ω₀² − Γ²)` with `Γ = γ` (RLC) or `γ/2` (LC).
    pub eigs: [C64; 2],
    pub broken: bool,
}

impl CircuitSpec {
    /// Circuit with the resistance law implied by `mode`.
    pub fn new(l0: f64, c0: f64, f: Expr, mode: CircuitMode, params: ParamMap) -> Result<Self> {
        if !(l0 > 0.0 && l0.is_finite() && c0 > 0.0 && c0.is_finite()) {
            return Err(Error::InvalidModel(format!(
                "L0 and C0 must be positive, got {l0}, {c0}"
            )));
        }
        let resistance = match mode {
            CircuitMode::Lc => Resistance::Zero,
            CircuitMode::Rlc => Resistance::Matched,
        };
        Ok(CircuitSpec {
            l0,
            c0,
            f,
            mode,
            resistance,
            params,
        })
    }

    pub fn parse(l0: f64, c0: f64, f: &str, mode: CircuitMode, params: ParamMap) -> Result<Self> {
        CircuitSpec::new(l0, c0, parse(f)?, mode, params)
    }

    pub fn with_resistance(mut self, resistance: Resistance) -> Self {
        self.resistance = resistance;
        self
    }

    /// `ω₀ = 1/√(L₀C₀)`.
    pub fn omega0(&self) -> f64 {
        1.0 / (self.l0 * self.c0).sqrt()
    }

    fn resistance_expr(&self) -> Expr {
        match &self.resistance {
            Resistance::Zero => Expr::num(0.0),
            Resistance::Matched => Expr::bin(BinOp::Mul, Expr::num(self.l0), self.f.diff()),
            Resistance::Custom(r) => r.clone(),
        }
    }

    /// `R(t)`.
    pub fn resistance_at(&self, t: f64) -> Result<f64> {
        Ok(self.resistance_expr().eval(t, &self.params)?.re)
    }

    /// `(L(t), C(t), R(t))`.
    pub fn elements(&self, t: f64) -> Result<(f64, f64, f64)> {
        let f = self.f.eval(t, &self.params)?;
        if !(f.re > 0.0) || f.im != 0.0 {
            return Err(Error::ModulationZero { which: "f", t });
        }
        Ok((self.l0 * f.re, self.c0 / f.re, self.resistance_at(t)?))
    }

    /// `i[[0, −1/C], [1/L, R/L]]` built directly from the elements.
    pub fn kirchhoff(&self, t: f64) -> Result<Mat2> {
        let (l, c, r) = self.elements(t)?;
        Ok(Mat2::new(C64::new(0.0, 0.0), -I / c, I / l, I * r / l))
    }

    /// The family member with frame prefactor `diag(C₀^{−1/2}, L₀^{−1/2})`.
    pub fn to_model(&self) -> Result<ModelSpec> {
        let omega2 = Expr::bin(
            BinOp::Div,
            Expr::bin(BinOp::Mul, Expr::Imag, self.resistance_expr()),
            Expr::bin(BinOp::Mul, Expr::num(self.l0), self.f.clone()),
        );
        let p = &self.params;
        ModelSpec::from_parts(
            C64::new(0.0, -1.0 / self.c0),
            C64::new(0.0, 1.0 / self.l0),
            TimeFn::new(self.f.clone(), p)?,
            TimeFn::constant(C64::new(1.0, 0.0)),
            TimeFn::constant(C64::new(0.0, 0.0)),
            TimeFn::new(omega2, p)?,
            self.params.clone(),
        )?
        .with_frame_scale(
            C64::new(self.c0.powf(-0.5), 0.0),
            C64::new(self.l0.powf(-0.5), 0.0),
        )
    }

    /// Propagates `(V₀, I₀)` to `t1` and records energies with the
    /// instantaneous `L(t)`, `C(t)` every `dt_out`.
    pub fn simulate_energy(
        &self,
        v0: f64,
        i0: f64,
        t1: f64,
        dt_out: f64,
        cfg: &IntegratorConfig,
    ) -> Result<EnergyTrace> {
        let model = self.to_model()?;
        let grid = uniform_grid(0.0, t1, dt_out);
        let traj = propagate_state(
            |t| model.hamiltonian(t),
            [C64::new(v0, 0.0), C64::new(i0, 0.0)],
            0.0,
            t1,
            cfg,
            &grid,
        )?;
        let mut samples = Vec::with_capacity(traj.samples.len());
        let mut max_imag: f64 = 0.0;
        for s in &traj.samples {
            let (l, c, _) = self.elements(s.t)?;
            let (v, i) = (s.state[0], s.state[1]);
            let scale = (v.norm_sqr() + i.norm_sqr()).sqrt().max(f64::MIN_POSITIVE);
            max_imag = max_imag.max(v.im.abs().max(i.im.abs()) / scale);
            let u_l = 0.5 * l * i.re * i.re;
            let u_c = 0.5 * c * v.re * v.re;
            samples.push(EnergySample {
                t: s.t,
                v: v.re,
                i: i.re,
                u_l,
                u_c,
                total: u_l + u_c,
            });
        }
        Ok(EnergyTrace {
            samples,
            truncated: traj.truncated,
            max_imag,
        })
    }

    /// Threshold and effective eigenvalues for `f = e^{−γt}` in this mode.
    pub fn static_threshold(&self, gamma: f64) -> StaticThreshold {
        static_threshold(self.mode, self.omega0(), gamma)
    }
}

/// `H_eff` of `f = e^{−γt}` is constant, `−iΓσz + ω₀σ_y`, with `Γ = −γ` in
/// RLC mode and `Γ = −γ/2` in LC mode.
pub fn static_threshold(mode: CircuitMode, omega0: f64, gamma: f64) -> StaticThreshold {
    let (gamma_c, g) = match mode {
        CircuitMode::Rlc => (omega0, gamma),
        CircuitMode::Lc => (2.0 * omega0, 0.5 * gamma),
    };
    let root = C64::new(omega0 * omega0 - g * g, 0.0).sqrt();
    StaticThreshold {
        gamma_c,
        eigs: [-root, root],
        broken: gamma.abs() > gamma_c,
    }
}

/// Circuit with `f = e^{−γt}`.
pub fn exponential_circuit(l0: f64, c0: f64, gamma: f64, mode: CircuitMode) -> Result<CircuitSpec> {
    CircuitSpec::parse(l0, c0, "exp(-g*t)", mode, ParamMap::new().with("g", gamma))
}

/// Periodic-drive sweep over `Ω₀` for `f = ε₁cos(Ω₀t) + ε₂` in RLC mode,
/// analysed in the effective frame with period `2π/Ω₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveSweep {
    pub eps1: f64,
    pub eps2: f64,
    pub l0: f64,
    pub c0: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub step: f64,
}

impl Default for DriveSweep {
    fn default() -> Self {
        DriveSweep {
            eps1: 0.5,
            eps2: 1.5,
            l0: 1.0,
            c0: 1.0,
            omega_min: 0.2,
            omega_max: 4.0,
            step: 0.005,
        }
    }
}

impl DriveSweep {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.omega_max - self.omega_min) / self.step + 1e-9)
            .floor()
            .max(0.0) as usize;
        (0..=n)
            .map(|k| self.omega_min + self.step * k as f64)
            .collect()
    }

    pub fn circuit(&self, omega: f64) -> Result<CircuitSpec> {
        let params = ParamMap::new()
            .with("e1", self.eps1)
            .with("e2", self.eps2)
            .with("W", omega);
        CircuitSpec::parse(
            self.l0,
            self.c0,
            "e1*cos(W*t) + e2",
            CircuitMode::Rlc,
            params,
        )
    }

    pub fn run(&self, cfg: &IntegratorConfig) -> Vec<PhasePoint> {
        phase_sweep(
            |omega| {
                if !(omega > 0.0) {
                    return Err(Error::InvalidModel(format!("drive frequency {omega}")));
                }
                let model = self.circuit(omega)?.to_model()?;
                Ok((move |t| model.effective_closed(t), 2.0 * PI / omega))
            },
            &self.values(),
            cfg,
        )
    }
}

/// Floquet labels of the static effective generator of `f = e^{−γt}` over
/// `gammas`, for locating the threshold by sweep.
pub fn threshold_sweep(
    l0: f64,
    c0: f64,
    mode: CircuitMode,
    gammas: &[f64],
    cfg: &IntegratorConfig,
) -> Vec<PhasePoint> {
    phase_sweep(
        |gamma| {
            let model = exponential_circuit(l0, c0, gamma, mode)?.to_model()?;
            let h = model.effective_closed(0.0)?;
            Ok((move |_| Ok(h), 1.0))
        },
        gammas,
        cfg,
    )
}
