//! Closed-form solutions of the effective system for three families of the
//! effective potential, and the way back to the original frame.
//!
//! Everything here works in scaled time `τ = μ(t − t_ref)` with
//! `μ = √(νν′)`, where the effective system reads
//!
//! ```text
//! ζ₋′ = −Γ̃ ζ₋ − i ν̃ ζ₊,     ζ₊′ = −i ν̃′ ζ₋ + Γ̃ ζ₊,
//! ```
//!
//! with `Γ̃ = Γ/μ`, `ν̃ = ν_e/μ`, `ν̃′ = ν′_e/μ` and `ν̃ν̃′ = 1`. The three
//! families are
//!
//! * case (a): `Γ̃ = γ`, constant;
//! * case (b): `Γ̃ = ∓tanh τ`;
//! * case (c): `Γ̃ = αe^{iγτ} − β`, solved with Tricomi and Laguerre functions.
//!
//! Integration constants always come from the first-order initial-value
//! problem at `τ = 0`. The closed-form reference coefficients are evaluated
//! separately in [`Diagnostics`].

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr, ParamMap};
use crate::mat2::{vec_norm, Mat2, Vec2};
use crate::model::{ModelSpec, TimeFn};
use crate::propagate::{Frame, Sample, SolverStats, Trajectory};
use crate::quad::{integrate, QuadConfig};
use crate::specfun::{gamma, laguerre_l, pochhammer, rgamma, tricomi_u_log};

const I: C64 = C64::new(0.0, 1.0);
const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// `|γ̄|` below which case (a) reports the degenerate basis `{1, τ}`.
pub const CASE_A_EP_TOL: f64 = 1e-8;

/// Normalized Wronskian below which a case (c) basis counts as degenerate.
pub const WRONSKIAN_TOL: f64 = 1e-12;

/// Map `t ↦ τ = scale·(t − t_ref)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledTime {
    pub scale: C64,
    pub t_ref: f64,
}

impl ScaledTime {
    pub fn new(scale: C64, t_ref: f64) -> Result<Self> {
        if scale.norm() == 0.0 || !scale.norm().is_finite() || !t_ref.is_finite() {
            return Err(Error::InvalidModel(format!("invalid time scale {scale}")));
        }
        Ok(ScaledTime { scale, t_ref })
    }

    /// `μ = √(ν_e ν′_e)` and `t_ref` of `spec`.
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        ScaledTime::new((spec.nu_eff() * spec.nu_prime_eff()).sqrt(), spec.t_ref)
    }

    pub fn tau(&self, t: f64) -> C64 {
        self.scale * (t - self.t_ref)
    }

    /// False when `τ` is complex for real `t`.
    pub fn is_real(&self) -> bool {
        self.scale.im == 0.0 && self.scale.re > 0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    A,
    BMinus,
    BPlus,
    C,
}

/// Integration constants `(c₁, c₂)` of `ζ₋` and of `ζ₊`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Constants {
    pub minus: [C64; 2],
    pub plus: [C64; 2],
}

impl Constants {
    fn max_deviation(&self, other: &Constants) -> f64 {
        self.minus
            .iter()
            .chain(&self.plus)
            .zip(other.minus.iter().chain(&other.plus))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// Parameters of `Γ̃(τ) = αe^{iγτ} − β`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CaseCParams {
    pub alpha: C64,
    pub beta: C64,
    pub gamma_drive: C64,
}

impl CaseCParams {
    pub fn new(alpha: C64, beta: C64, gamma_drive: C64) -> Result<Self> {
        if gamma_drive.norm() == 0.0 {
            return Err(Error::InvalidModel(
                "drive frequency γ must be nonzero".into(),
            ));
        }
        if alpha.norm() == 0.0 {
            return Err(Error::InvalidModel(
                "α = 0 is the constant potential of case (a)".into(),
            ));
        }
        Ok(CaseCParams {
            alpha,
            beta,
            gamma_drive,
        })
    }

    /// `α₂ = √(1 − β²)`.
    pub fn alpha2(&self) -> C64 {
        (ONE - self.beta * self.beta).sqrt()
    }

    /// `α₁ = (−iβ + α₂)⁻¹`, which equals `α₂ + iβ`.
    pub fn alpha1(&self) -> C64 {
        (-I * self.beta + self.alpha2()).inv()
    }

    /// `m = α₂/γ`.
    pub fn m(&self) -> C64 {
        self.alpha2() / self.gamma_drive
    }

    /// `z₀ = −2iα/γ`, the value of `η₋` at `τ = 0`.
    pub fn z0(&self) -> C64 {
        -2.0 * I * self.alpha / self.gamma_drive
    }

    pub fn z1(&self) -> C64 {
        2.0 * self.alpha
    }

    pub fn z3(&self) -> C64 {
        let (z0, z1) = (self.z0(), self.z1());
        (z1 * self.m() - z1 * z0) / (2.0 * z0) - I * self.beta
    }

    /// `η∓(τ) = ∓(2iα/γ)e^{iγτ}`; `sign = −1` selects `η₋`.
    pub fn eta(&self, sign: f64, tau: C64) -> C64 {
        -sign * self.z0() * (I * self.gamma_drive * tau).exp()
    }

    pub fn potential(&self, tau: C64) -> C64 {
        self.alpha * (I * self.gamma_drive * tau).exp() - self.beta
    }
}

/// One component of case (c): `ζ = e^{−η/2}η^m [c₁U(a, b, η) + c₂L_n^{(λ)}(η)]`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct HypergeomBasis {
    ln_k: C64,
    m: C64,
    u: (C64, C64),
    l: (C64, C64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Family {
    A {
        gamma: C64,
        gbar: C64,
        slope: Vec2,
    },
    B {
        sign: f64,
    },
    C {
        p: CaseCParams,
        basis: [HypergeomBasis; 2],
    },
}

/// A closed-form solution `τ ↦ (ζ₋, ζ₊)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticSolution {
    pub case: CaseId,
    /// `ν̃`.
    pub nu: C64,
    /// `ν̃′`.
    pub nu_prime: C64,
    /// `(a, b) = (ζ₋(0), ζ₊(0))`.
    pub initial: Vec2,
    pub constants: Constants,
    family: Family,
}

/// Derived constants next to the closed-form reference coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub case: CaseId,
    pub initial: Vec2,
    pub derived: Constants,
    pub reference: Option<Constants>,
    pub reference_deviation: Option<f64>,
    /// Case (c) only: `(c₁⁻, c₂⁻)` from the transfer-matrix formula with
    /// `U(·, ·, 0)` and `L(·, ·, 0)` entries. `None` when `U(·, ·, 0)`
    /// diverges or the matrix is singular.
    pub transfer_matrix: Option<[C64; 2]>,
    pub transfer_deviation: Option<f64>,
}

fn scaled_couplings(nu: C64, nu_prime: C64) -> Result<(C64, C64)> {
    let mu = (nu * nu_prime).sqrt();
    if mu.norm() == 0.0 || !mu.norm().is_finite() {
        return Err(Error::InvalidModel(format!(
            "νν′ = {} must be finite and nonzero",
            nu * nu_prime
        )));
    }
    Ok((nu / mu, nu_prime / mu))
}

/// `ζ′(0)` from the first-order system.
fn initial_slope(g0: C64, nu: C64, nu_prime: C64, a: C64, b: C64) -> Vec2 {
    [-g0 * a - I * nu * b, -I * nu_prime * a + g0 * b]
}

/// `sin(xτ)/x`, continuous at `x = 0`.
fn sinc_scaled(x: C64, tau: C64) -> C64 {
    let y = x * tau;
    if y.norm() < 1e-3 {
        let y2 = y * y;
        tau * (ONE - y2 / 6.0 + y2 * y2 / 120.0)
    } else {
        y.sin() / x
    }
}

/// Case (a): `Γ̃ = γ`. `ν` and `ν′` are the effective-frame couplings.
pub fn solve_case_a(
    gamma: C64,
    a: C64,
    b: C64,
    nu: C64,
    nu_prime: C64,
) -> Result<AnalyticSolution> {
    let (nt, npt) = scaled_couplings(nu, nu_prime)?;
    let gbar = (ONE - gamma * gamma).sqrt();
    let slope = initial_slope(gamma, nt, npt, a, b);
    let pair = |z0: C64, dz0: C64| {
        if gbar.norm() < CASE_A_EP_TOL {
            [z0, dz0]
        } else {
            let ratio = dz0 / (I * gbar);
            [(z0 + ratio) * 0.5, (z0 - ratio) * 0.5]
        }
    };
    Ok(AnalyticSolution {
        case: CaseId::A,
        nu: nt,
        nu_prime: npt,
        initial: [a, b],
        constants: Constants {
            minus: pair(a, slope[0]),
            plus: pair(b, slope[1]),
        },
        family: Family::A { gamma, gbar, slope },
    })
}

/// Sign of the case (b) potential `Γ̃ = ∓tanh τ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TanhSign {
    Minus,
    Plus,
}

/// Case (b): `Γ̃ = −tanh τ` for [`TanhSign::Minus`], `+tanh τ` for
/// [`TanhSign::Plus`]. The component whose equation loses its potential term
/// is affine, `c₁τ + c₂`; the other is `c₁ tanh τ + c₂(τ tanh τ − 1)`.
pub fn solve_case_b(
    sign: TanhSign,
    a: C64,
    b: C64,
    nu: C64,
    nu_prime: C64,
) -> Result<AnalyticSolution> {
    let (nt, npt) = scaled_couplings(nu, nu_prime)?;
    let slope = initial_slope(ZERO, nt, npt, a, b);
    // affine: (ζ′(0), ζ(0)); tanh family: (ζ′(0), −ζ(0))
    let (constants, s, case) = match sign {
        TanhSign::Minus => (
            Constants {
                minus: [slope[0], a],
                plus: [slope[1], -b],
            },
            -1.0,
            CaseId::BMinus,
        ),
        TanhSign::Plus => (
            Constants {
                minus: [slope[0], -a],
                plus: [slope[1], b],
            },
            1.0,
            CaseId::BPlus,
        ),
    };
    Ok(AnalyticSolution {
        case,
        nu: nt,
        nu_prime: npt,
        initial: [a, b],
        constants,
        family: Family::B { sign: s },
    })
}

/// Case (c): `Γ̃ = αe^{iγτ} − β`.
///
/// With `ζ∓ = e^{−η∓/2}η∓^m W∓`, `m = α₂/γ`, both components reduce to
/// Kummer's equation with `b = 1 + 2m` and `a = α₁/γ` for `ζ₋`,
/// `a = α₁⁻¹/γ` for `ζ₊`. The basis is `U(a, b, η)` and `L_{−a}^{(2m)}(η)`.
pub fn solve_case_c(
    p: CaseCParams,
    a: C64,
    b: C64,
    nu: C64,
    nu_prime: C64,
) -> Result<AnalyticSolution> {
    let (nt, npt) = scaled_couplings(nu, nu_prime)?;
    let p = CaseCParams::new(p.alpha, p.beta, p.gamma_drive)?;
    let m = p.m();
    let order = 2.0 * m;
    let make = |sign: f64, ka: C64| HypergeomBasis {
        ln_k: (-sign * p.z0()).ln(),
        m,
        u: (ka, ONE + order),
        l: (-ka, order),
    };
    let basis = [
        make(-1.0, p.alpha1() / p.gamma_drive),
        make(1.0, p.alpha1().inv() / p.gamma_drive),
    ];
    let slope = initial_slope(p.potential(ZERO), nt, npt, a, b);
    let mut solved = [[ZERO; 2]; 2];
    for (k, (hb, z0)) in basis.iter().zip([(a, slope[0]), (b, slope[1])]).enumerate() {
        let [(u, du), (l, dl)] = eval_hypergeom(hb, p.gamma_drive, ZERO)?;
        let det = u * dl - l * du;
        let scale = vec_norm(&[u, du]) * vec_norm(&[l, dl]);
        if !(det.norm() > WRONSKIAN_TOL * scale) {
            return Err(Error::DegenerateBasis {
                wronskian: det.norm() / scale,
            });
        }
        solved[k] = [(z0.0 * dl - l * z0.1) / det, (u * z0.1 - z0.0 * du) / det];
    }
    Ok(AnalyticSolution {
        case: CaseId::C,
        nu: nt,
        nu_prime: npt,
        initial: [a, b],
        constants: Constants {
            minus: solved[0],
            plus: solved[1],
        },
        family: Family::C { p, basis },
    })
}

/// `(value, d/dτ)` of the two basis functions `e^{−η/2}η^m U` and
/// `e^{−η/2}η^m L` at `τ`.
fn eval_hypergeom(hb: &HypergeomBasis, g: C64, tau: C64) -> Result<[(C64, C64); 2]> {
    let ln_eta = hb.ln_k + I * g * tau;
    let eta = ln_eta.exp();
    let pre = (-eta * 0.5 + hb.m * ln_eta).exp();
    let (ua, ub) = hb.u;
    let (ln, lo) = hb.l;
    let u = tricomi_u_log(ua, ub, eta, ln_eta)?;
    let du = -ua * tricomi_u_log(ua + 1.0, ub + 1.0, eta, ln_eta)?;
    let l = laguerre_l(ln, lo, eta)?;
    let dl = -laguerre_l(ln - 1.0, lo + 1.0, eta)?;
    let lift = |f: C64, df: C64| (pre * f, I * g * pre * ((hb.m - eta * 0.5) * f + eta * df));
    Ok([lift(u, du), lift(l, dl)])
}

impl AnalyticSolution {
    /// `Γ̃(τ)`.
    pub fn gamma(&self, tau: C64) -> C64 {
        match self.family {
            Family::A { gamma, .. } => gamma,
            Family::B { sign } => sign * tau.tanh(),
            Family::C { p, .. } => p.potential(tau),
        }
    }

    /// Scaled effective Hamiltonian `−iΓ̃σz + ν̃σ₊ + ν̃′σ₋`.
    pub fn hamiltonian(&self, tau: C64) -> Mat2 {
        let g = self.gamma(tau);
        Mat2::new(-I * g, self.nu, self.nu_prime, I * g)
    }

    /// `(ζ(τ), ζ′(τ))` for complex `τ`.
    pub fn eval_complex(&self, tau: C64) -> Result<(Vec2, Vec2)> {
        match &self.family {
            Family::A { gbar, slope, .. } => {
                let (cos, sinc) = ((*gbar * tau).cos(), sinc_scaled(*gbar, tau));
                let w2 = *gbar * *gbar;
                let [a, b] = self.initial;
                Ok((
                    [a * cos + slope[0] * sinc, b * cos + slope[1] * sinc],
                    [
                        slope[0] * cos - a * w2 * sinc,
                        slope[1] * cos - b * w2 * sinc,
                    ],
                ))
            }
            Family::B { sign } => {
                let th = tau.tanh();
                let sech2 = ONE - th * th;
                let affine = |c: [C64; 2]| (c[0] * tau + c[1], c[0]);
                let curved = |c: [C64; 2]| {
                    (
                        c[0] * th + c[1] * (tau * th - 1.0),
                        c[0] * sech2 + c[1] * (th + tau * sech2),
                    )
                };
                let Constants { minus, plus } = self.constants;
                let ((zm, dm), (zp, dp)) = if *sign < 0.0 {
                    (affine(minus), curved(plus))
                } else {
                    (curved(minus), affine(plus))
                };
                Ok(([zm, zp], [dm, dp]))
            }
            Family::C { p, basis } => {
                let mut z = [ZERO; 2];
                let mut dz = [ZERO; 2];
                let cs = [self.constants.minus, self.constants.plus];
                for k in 0..2 {
                    let [(u, du), (l, dl)] = eval_hypergeom(&basis[k], p.gamma_drive, tau)?;
                    z[k] = cs[k][0] * u + cs[k][1] * l;
                    dz[k] = cs[k][0] * du + cs[k][1] * dl;
                }
                Ok((z, dz))
            }
        }
    }

    /// `(ζ₋(τ), ζ₊(τ))`.
    pub fn zeta(&self, tau: f64) -> Result<Vec2> {
        Ok(self.eval_complex(C64::new(tau, 0.0))?.0)
    }

    /// `dζ/dτ` from the closed form.
    pub fn derivative(&self, tau: f64) -> Result<Vec2> {
        Ok(self.eval_complex(C64::new(tau, 0.0))?.1)
    }

    /// `‖dζ/dτ + iH̃ζ‖ / max(1, ‖ζ‖)`.
    pub fn residual(&self, tau: f64) -> Result<f64> {
        let t = C64::new(tau, 0.0);
        let (z, dz) = self.eval_complex(t)?;
        let hz = self.hamiltonian(t).mul_vec(&z);
        let r = [dz[0] + I * hz[0], dz[1] + I * hz[1]];
        Ok(vec_norm(&r) / vec_norm(&z).max(1.0))
    }

    /// Constants from the closed-form reference coefficients, where they exist.
    ///
    /// For case (b) with `+tanh` the reference table is applied with `a ↔ b`
    /// and `ν ↔ ν′`; its first row then belongs to the affine `ζ₊`.
    pub fn reference_constants(&self) -> Option<Constants> {
        let [a, b] = self.initial;
        let (nu, nup) = (self.nu, self.nu_prime);
        match self.family {
            Family::A { gbar, .. } => {
                if gbar.norm() < CASE_A_EP_TOL {
                    return None;
                }
                let d = 2.0 * gbar;
                let (p1, m1) = (C64::new(1.0, 1.0), C64::new(1.0, -1.0));
                Some(Constants {
                    minus: [
                        (gbar * p1 * a + I * nu * b) / d,
                        (gbar * m1 * a - I * nu * b) / d,
                    ],
                    plus: [
                        (I * nup * a + gbar * m1 * b) / d,
                        (-I * nup * a + gbar * p1 * b) / d,
                    ],
                })
            }
            Family::B { sign } => {
                let table =
                    |a: C64, b: C64, nu: C64, nup: C64| ([-I * nu * b, -a], [-I * nup * a + b, -b]);
                if sign < 0.0 {
                    let (minus, plus) = table(a, b, nu, nup);
                    Some(Constants { minus, plus })
                } else {
                    let (plus, minus) = table(b, a, nup, nu);
                    Some(Constants { minus, plus })
                }
            }
            Family::C { .. } => None,
        }
    }

    /// Case (c) transfer-matrix constants
    /// `z₀^{−m}e^{z₀}[M₀ − z₁M₁]⁻¹(a, b)` for `ζ₋`, with `M₁` taken as the
    /// matrix of first-index-shifted entries.
    pub fn transfer_matrix_constants(&self) -> Option<[C64; 2]> {
        let Family::C { p, basis } = &self.family else {
            return None;
        };
        let hb = &basis[0];
        let (m1, m2) = hb.u;
        let (m3, order) = hb.l;
        let u_at_zero = |a: C64, b: C64| -> Option<C64> {
            if b.re < 1.0 {
                Some(gamma(ONE - b).ok()? * rgamma(a - b + 1.0).ok()?)
            } else {
                None
            }
        };
        let l_at_zero = |n: C64, al: C64| -> Option<C64> {
            Some(pochhammer(al + 1.0, n).ok()? * rgamma(n + 1.0).ok()?)
        };
        let u0 = u_at_zero(m1, m2)?;
        let u1 = u_at_zero(m1 + 1.0, m2 + 1.0)?;
        let l0 = l_at_zero(m3, order)?;
        let l1 = l_at_zero(m3 - 1.0, order + 1.0)?;
        let (z0, z1, z3) = (p.z0(), p.z1(), p.z3());
        let mat = Mat2::new(u0, l0, z3 * u0 - z1 * u1, z3 * l0 - z1 * l1);
        let inv = mat.inv().ok()?;
        let pref = (-hb.m * z0.ln() + z0).exp();
        let c = inv.mul_vec(&self.initial);
        let out = [pref * c[0], pref * c[1]];
        (out[0].norm().is_finite() && out[1].norm().is_finite()).then_some(out)
    }

    pub fn diagnostics(&self) -> Diagnostics {
        let reference = self.reference_constants();
        let transfer = self.transfer_matrix_constants();
        Diagnostics {
            case: self.case,
            initial: self.initial,
            derived: self.constants,
            reference_deviation: reference.map(|p| p.max_deviation(&self.constants)),
            reference,
            transfer_deviation: transfer.map(|c| {
                let d = self.constants.minus;
                (c[0] - d[0]).norm().max((c[1] - d[1]).norm())
            }),
            transfer_matrix: transfer,
        }
    }
}

/// Input to [`design_case_a`]: either couplings or on-site potentials.
#[derive(Clone, Debug, PartialEq)]
pub enum CaseADesign {
    /// Given `f₁, f₂`, choose `ω_j = i f_j′/f_j − iγ_j`.
    Couplings { f1: Expr, f2: Expr },
    /// Given `ω₁, ω₂`, choose `f_j = exp(∫_0^t (γ_j − iω_j))`.
    Potentials { omega1: Expr, omega2: Expr },
}

/// Completes a model with `ω_j − i f_j′/f_j = −iγ_j`, whose effective
/// potential is the constant `Γ = (γ₁ − γ₂)/2`.
pub fn design_case_a(
    input: CaseADesign,
    gamma1: C64,
    gamma2: C64,
    nu: C64,
    nu_prime: C64,
    params: ParamMap,
) -> Result<ModelSpec> {
    let (f1, f2, omega1, omega2) = match input {
        CaseADesign::Couplings { f1, f2 } => {
            let potential = |f: &Expr, g: C64| {
                let log_rate = Expr::bin(BinOp::Div, f.diff(), f.clone());
                Expr::bin(
                    BinOp::Sub,
                    Expr::bin(BinOp::Mul, Expr::Imag, log_rate),
                    Expr::complex(I * g),
                )
            };
            let (w1, w2) = (potential(&f1, gamma1), potential(&f2, gamma2));
            (
                TimeFn::new(f1, &params)?,
                TimeFn::new(f2, &params)?,
                TimeFn::new(w1, &params)?,
                TimeFn::new(w2, &params)?,
            )
        }
        CaseADesign::Potentials { omega1, omega2 } => {
            let rate = |w: &Expr, g: C64| {
                Expr::bin(
                    BinOp::Sub,
                    Expr::complex(g),
                    Expr::bin(BinOp::Mul, Expr::Imag, w.clone()),
                )
            };
            (
                TimeFn::exp_integral(rate(&omega1, gamma1), &params, 0.0, ONE)?,
                TimeFn::exp_integral(rate(&omega2, gamma2), &params, 0.0, ONE)?,
                TimeFn::new(omega1, &params)?,
                TimeFn::new(omega2, &params)?,
            )
        }
    };
    ModelSpec::from_parts(nu, nu_prime, f1, f2, omega1, omega2, params)
}

/// Maps an effective-frame solution to the original frame:
/// `Ψ(t) = e^{−∫_{t_ref}^t (Γ + iω₂)}·(d₁ r ζ₋, d₂ ζ₊)/√r(t_ref)` with
/// `r = f₁/f₂`, evaluated on `grid` (ascending).
pub fn reconstruct_original(
    sol: &AnalyticSolution,
    spec: &ModelSpec,
    grid: &[f64],
) -> Result<Trajectory> {
    let st = ScaledTime::from_spec(spec)?;
    let mu = st.scale;
    let close = |x: C64, y: C64, tol: f64| (x - y).norm() <= tol * (1.0 + y.norm());
    if !close(spec.nu_eff() / mu, sol.nu, 1e-9)
        || !close(spec.nu_prime_eff() / mu, sol.nu_prime, 1e-9)
    {
        return Err(Error::Inconsistent(
            "effective couplings differ between solution and model".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidIntegration("grid must be ascending".into()));
    }
    let probes = grid
        .iter()
        .step_by((grid.len() / 5).max(1))
        .chain(std::iter::once(&spec.t_ref));
    for &t in probes {
        let g = spec.gamma_eff(t)? / mu;
        if !close(g, sol.gamma(st.tau(t)), 1e-8) {
            return Err(Error::Inconsistent(format!(
                "effective potential differs at t = {t}: model {g}, solution {}",
                sol.gamma(st.tau(t))
            )));
        }
    }
    let cfg = QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
    };
    let [d1, d2] = spec.frame_scale;
    let sqrt_r0 = spec.modulations(spec.t_ref)?.ratio().sqrt();
    let rate = |s: f64| -> Result<C64> { Ok(spec.gamma_eff(s)? + I * spec.omega2.value(s)?) };
    let mut samples = Vec::with_capacity(grid.len());
    let (mut t_prev, mut exponent) = (spec.t_ref, ZERO);
    for &t in grid {
        exponent += integrate(rate, t_prev, t, cfg)?;
        t_prev = t;
        let z = sol.eval_complex(st.tau(t))?.0;
        let r = spec.modulations(t)?.ratio();
        let pre = (-exponent).exp() / sqrt_r0;
        samples.push(Sample {
            t,
            state: [pre * d1 * r * z[0], pre * d2 * z[1]],
        });
    }
    Ok(Trajectory {
        frame: Frame::Original,
        samples,
        truncated: false,
        stats: SolverStats::default(),
    })
}
