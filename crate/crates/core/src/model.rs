//! The two-level Hamiltonian family
//!
//! ```text
//! H(t) = [[ω₁(t),        ν f₁(t)/f₂(t)],
//!         [ν′ f₂(t)/f₁(t), ω₂(t)      ]]
//! ```
//!
//! and its image under the gauge transformation
//! `A(t) = D·exp(−i∫Ω₊)·diag(√(f₁/f₂), √(f₂/f₁))`, which maps it to the
//! traceless effective Hamiltonian `H_eff = −iΓσz + ν_e σ₊ + ν′_e σ₋` with
//! `Γ = iΩ₋ + ½∂ₜln(f₁/f₂)` and `Ω± = (ω₁ ± ω₂)/2`.
//!
//! `D = diag(d₁, d₂)` is a constant prefactor (identity by default) that
//! rescales the effective couplings to `ν_e = ν·d₂/d₁`, `ν′_e = ν′·d₁/d₂`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::expr::{parse, Expr, ParamMap};
use crate::mat2::{normalize, vec_norm, Mat2, Vec2};
use crate::quad::{integrate, QuadConfig};

const I: C64 = C64::new(0.0, 1.0);

/// Default band around `B = ±i` inside which a sample counts as an EP.
pub const TOL_EP: f64 = 1e-6;

fn phase_quad() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-14,
    }
}

/// A complex function of time with an exact first derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeFn {
    source: Expr,
    kind: Kind,
}

#[derive(Clone, Debug, PartialEq)]
enum Kind {
    Direct {
        value: Expr,
        deriv: Expr,
    },
    /// `scale·exp(∫_{t_ref}^t rate)`.
    ExpIntegral {
        rate: Expr,
        t_ref: f64,
        scale: C64,
    },
}

impl TimeFn {
    /// Binds `params` into `source` and differentiates it symbolically.
    pub fn new(source: Expr, params: &ParamMap) -> Result<Self> {
        let value = source.substitute(params)?;
        let deriv = value.diff();
        Ok(TimeFn {
            source,
            kind: Kind::Direct { value, deriv },
        })
    }

    pub fn parse(source: &str, params: &ParamMap) -> Result<Self> {
        TimeFn::new(parse(source)?, params)
    }

    pub fn constant(value: C64) -> Self {
        TimeFn {
            source: Expr::complex(value),
            kind: Kind::Direct {
                value: Expr::complex(value),
                deriv: Expr::num(0.0),
            },
        }
    }

    /// `scale·exp(∫_{t_ref}^t rate(t′) dt′)`, evaluated by quadrature; its
    /// logarithmic derivative is `rate` exactly.
    pub fn exp_integral(rate: Expr, params: &ParamMap, t_ref: f64, scale: C64) -> Result<Self> {
        let bound = rate.substitute(params)?;
        Ok(TimeFn {
            source: rate,
            kind: Kind::ExpIntegral {
                rate: bound,
                t_ref,
                scale,
            },
        })
    }

    /// The expression the function was built from (the rate for
    /// exponential integrals).
    pub fn source(&self) -> &Expr {
        &self.source
    }

    pub fn is_exp_integral(&self) -> bool {
        matches!(self.kind, Kind::ExpIntegral { .. })
    }

    pub fn value(&self, t: f64) -> Result<C64> {
        match &self.kind {
            Kind::Direct { value, .. } => Ok(value.eval(t, &ParamMap::new())?),
            Kind::ExpIntegral { rate, t_ref, scale } => {
                let none = ParamMap::new();
                let log = integrate(|s| Ok(rate.eval(s, &none)?), *t_ref, t, phase_quad())?;
                Ok(*scale * log.exp())
            }
        }
    }

    pub fn deriv(&self, t: f64) -> Result<C64> {
        match &self.kind {
            Kind::Direct { deriv, .. } => Ok(deriv.eval(t, &ParamMap::new())?),
            Kind::ExpIntegral { rate, .. } => Ok(rate.eval(t, &ParamMap::new())? * self.value(t)?),
        }
    }

    /// `(f, f′)` at `t`.
    pub fn value_and_deriv(&self, t: f64) -> Result<(C64, C64)> {
        match &self.kind {
            Kind::Direct { value, deriv } => {
                let none = ParamMap::new();
                Ok((value.eval(t, &none)?, deriv.eval(t, &none)?))
            }
            Kind::ExpIntegral { rate, .. } => {
                let v = self.value(t)?;
                Ok((v, rate.eval(t, &ParamMap::new())? * v))
            }
        }
    }
}

impl fmt::Display for TimeFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            Kind::Direct { .. } => write!(f, "{}", self.source),
            Kind::ExpIntegral { t_ref, scale, .. } => {
                write!(
                    f,
                    "{scale}*exp(integral from {t_ref} to t of ({}))",
                    self.source
                )
            }
        }
    }
}

/// Declarative description of one member of the Hamiltonian family.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub nu: C64,
    pub nu_prime: C64,
    pub f1: TimeFn,
    pub f2: TimeFn,
    pub omega1: TimeFn,
    pub omega2: TimeFn,
    pub params: ParamMap,
    /// Lower limit of the phase integral in `A(t)`.
    pub t_ref: f64,
    /// Constant prefactor `D = diag(d₁, d₂)` applied in front of `A(t)`.
    pub frame_scale: [C64; 2],
}

/// Modulations sampled at one time.
#[derive(Clone, Copy, Debug)]
pub struct Modulations {
    pub f1: C64,
    pub df1: C64,
    pub f2: C64,
    pub df2: C64,
}

impl Modulations {
    /// `r = f₁/f₂`.
    pub fn ratio(&self) -> C64 {
        self.f1 / self.f2
    }

    /// `∂ₜ ln(f₁/f₂)`.
    pub fn log_ratio_rate(&self) -> C64 {
        self.df1 / self.f1 - self.df2 / self.f2
    }

    /// `W = f₁′f₂ − f₁f₂′`.
    pub fn wronskian(&self) -> C64 {
        self.df1 * self.f2 - self.f1 * self.df2
    }
}

impl ModelSpec {
    /// Parses the four modulation expressions and validates the couplings.
    pub fn new(
        nu: C64,
        nu_prime: C64,
        f1: &str,
        f2: &str,
        omega1: &str,
        omega2: &str,
        params: ParamMap,
    ) -> Result<Self> {
        let f1 = TimeFn::parse(f1, &params)?;
        let f2 = TimeFn::parse(f2, &params)?;
        let omega1 = TimeFn::parse(omega1, &params)?;
        let omega2 = TimeFn::parse(omega2, &params)?;
        ModelSpec::from_parts(nu, nu_prime, f1, f2, omega1, omega2, params)
    }

    pub fn from_parts(
        nu: C64,
        nu_prime: C64,
        f1: TimeFn,
        f2: TimeFn,
        omega1: TimeFn,
        omega2: TimeFn,
        params: ParamMap,
    ) -> Result<Self> {
        let finite = |z: C64| z.re.is_finite() && z.im.is_finite();
        if !finite(nu) || !finite(nu_prime) {
            return Err(Error::InvalidModel("couplings must be finite".into()));
        }
        if nu.norm() + nu_prime.norm() == 0.0 {
            return Err(Error::InvalidModel(
                "at least one coupling must be nonzero".into(),
            ));
        }
        Ok(ModelSpec {
            nu,
            nu_prime,
            f1,
            f2,
            omega1,
            omega2,
            params,
            t_ref: 0.0,
            frame_scale: [C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
        })
    }

    pub fn with_t_ref(mut self, t_ref: f64) -> Self {
        self.t_ref = t_ref;
        self
    }

    pub fn with_frame_scale(mut self, d1: C64, d2: C64) -> Result<Self> {
        if d1.norm() == 0.0 || d2.norm() == 0.0 || !(d1.norm().is_finite() && d2.norm().is_finite())
        {
            return Err(Error::InvalidModel(
                "frame scale entries must be nonzero".into(),
            ));
        }
        self.frame_scale = [d1, d2];
        Ok(self)
    }

    /// Samples `f₁, f₂` on `n` points of `[t0, t1]` and fails on a zero.
    pub fn check_interval(&self, t0: f64, t1: f64, n: usize) -> Result<()> {
        let n = n.max(2);
        for k in 0..n {
            let t = t0 + (t1 - t0) * k as f64 / (n - 1) as f64;
            self.modulations(t)?;
            self.omega1.value(t)?;
            self.omega2.value(t)?;
        }
        Ok(())
    }

    /// `f₁, f₁′, f₂, f₂′` at `t`, rejecting vanishing modulations.
    pub fn modulations(&self, t: f64) -> Result<Modulations> {
        let (f1, df1) = self.f1.value_and_deriv(t)?;
        let (f2, df2) = self.f2.value_and_deriv(t)?;
        if near_zero(f1, df1) {
            return Err(Error::ModulationZero { which: "f1", t });
        }
        if near_zero(f2, df2) {
            return Err(Error::ModulationZero { which: "f2", t });
        }
        Ok(Modulations { f1, df1, f2, df2 })
    }

    pub fn hamiltonian(&self, t: f64) -> Result<Mat2> {
        let m = self.modulations(t)?;
        let r = m.ratio();
        Ok(Mat2::new(
            self.omega1.value(t)?,
            self.nu * r,
            self.nu_prime / r,
            self.omega2.value(t)?,
        ))
    }

    pub fn omega_plus(&self, t: f64) -> Result<C64> {
        Ok((self.omega1.value(t)? + self.omega2.value(t)?) * 0.5)
    }

    pub fn omega_minus(&self, t: f64) -> Result<C64> {
        Ok((self.omega1.value(t)? - self.omega2.value(t)?) * 0.5)
    }

    /// `Γ(t) = iΩ₋ + ½(f₁′/f₁ − f₂′/f₂)`.
    pub fn gamma_eff(&self, t: f64) -> Result<C64> {
        let m = self.modulations(t)?;
        Ok(I * self.omega_minus(t)? + m.log_ratio_rate() * 0.5)
    }

    /// Effective upper coupling `ν·d₂/d₁`.
    pub fn nu_eff(&self) -> C64 {
        self.nu * self.frame_scale[1] / self.frame_scale[0]
    }

    /// Effective lower coupling `ν′·d₁/d₂`.
    pub fn nu_prime_eff(&self) -> C64 {
        self.nu_prime * self.frame_scale[0] / self.frame_scale[1]
    }

    /// `√(νν′)`, principal branch.
    pub fn coupling_scale(&self) -> C64 {
        (self.nu * self.nu_prime).sqrt()
    }

    /// `−iΓσz + ν_e σ₊ + ν′_e σ₋`.
    pub fn effective_closed(&self, t: f64) -> Result<Mat2> {
        let g = self.gamma_eff(t)?;
        Ok(Mat2::new(-I * g, self.nu_eff(), self.nu_prime_eff(), I * g))
    }

    /// `A(t)` computed from `t_ref`.
    pub fn gauge(&self, t: f64) -> Result<Mat2> {
        GaugeTracker::new(self)?.at(t)
    }

    /// `A⁻¹HA − iA⁻¹∂ₜA`, evaluated directly from the gauge matrix and its
    /// derivative.
    pub fn effective_numeric(&self, t: f64) -> Result<Mat2> {
        let mut tracker = GaugeTracker::new(self)?;
        tracker.effective_numeric(t)
    }

    pub fn frame(&self) -> EffectiveFrame<'_> {
        EffectiveFrame { spec: self }
    }

    /// Closed-form eigenvalues of both frames.
    pub fn spectra(&self, t: f64) -> Result<Spectra> {
        let op = self.omega_plus(t)?;
        let om = self.omega_minus(t)?;
        let g = self.gamma_eff(t)?;
        let nn = self.nu * self.nu_prime;
        let root_orig = (om * om + nn).sqrt();
        let root_eff = (nn - g * g).sqrt();
        Ok(Spectra {
            lambda_orig: [op - root_orig, op + root_orig],
            lambda_eff: [-root_eff, root_eff],
        })
    }

    /// Eigenvectors of both frames from the mixing angles `ḡ` and `g`.
    ///
    /// With `μ = √(νν′)`, `cot ḡ = −iΓ/μ` and `cot g = Ω₋/μ`. For reciprocal
    /// couplings the vectors reduce to `χ∓ = (−sin ḡ/2, cos ḡ/2),
    /// (cos ḡ/2, sin ḡ/2)` and `Ψ∓ = (−f₁ sin g/2, f₂ cos g/2),
    /// (f₁ cos g/2, f₂ sin g/2)`; otherwise the second components carry the
    /// factor `κ = μ/ν` (`μ/ν_e` in the effective frame).
    pub fn eigenbasis(&self, t: f64) -> Result<Eigenbasis> {
        if self.nu.norm() == 0.0 || self.nu_prime.norm() == 0.0 {
            return Err(Error::InvalidModel(
                "eigenbasis requires both couplings nonzero".into(),
            ));
        }
        let heff = self.effective_closed(t)?;
        if heff.eig().defective {
            return Err(Error::ExceptionalPoint {
                frame: "effective",
                t,
            });
        }
        let h = self.hamiltonian(t)?;
        if h.eig().defective {
            return Err(Error::ExceptionalPoint {
                frame: "original",
                t,
            });
        }
        let m = self.modulations(t)?;
        let g_eff = self.gamma_eff(t)?;
        let om = self.omega_minus(t)?;
        let op = self.omega_plus(t)?;
        let mu = self.coupling_scale();

        let cot_g_bar = -I * g_eff / mu;
        let cot_g = om / mu;
        let g_bar = arccot(cot_g_bar);
        let g = arccot(cot_g);
        if !(finite(g_bar) && finite(g)) {
            return Err(Error::ExceptionalPoint {
                frame: if finite(g_bar) {
                    "original"
                } else {
                    "effective"
                },
                t,
            });
        }

        let kappa_eff = mu / self.nu_eff();
        let (sb, cb) = ((g_bar * 0.5).sin(), (g_bar * 0.5).cos());
        let chi_minus = [-sb, kappa_eff * cb];
        let chi_plus = [cb, kappa_eff * sb];
        let lambda_eff = [-I * g_eff - mu * cb / sb, -I * g_eff + mu * sb / cb];

        let kappa = mu / self.nu;
        let (s, c) = ((g * 0.5).sin(), (g * 0.5).cos());
        let psi_minus = [-m.f1 * s, kappa * m.f2 * c];
        let psi_plus = [m.f1 * c, kappa * m.f2 * s];
        let lambda_orig = [op + om - mu * c / s, op + om + mu * s / c];

        let residual = |mat: &Mat2, v: &Vec2, l: C64| {
            let mv = mat.mul_vec(v);
            let r = [mv[0] - l * v[0], mv[1] - l * v[1]];
            vec_norm(&r) / (vec_norm(v) * mat.norm().max(1e-300))
        };
        let residual_eff = residual(&heff, &chi_minus, lambda_eff[0]).max(residual(
            &heff,
            &chi_plus,
            lambda_eff[1],
        ));
        let residual_orig =
            residual(&h, &psi_minus, lambda_orig[0]).max(residual(&h, &psi_plus, lambda_orig[1]));

        // cot ḡ = cot g − iW/(2μ f₁f₂)
        let cot_relation_residual =
            (cot_g_bar - (cot_g - I * m.wronskian() / (2.0 * mu * m.f1 * m.f2))).norm();
        // g = i·arccoth(i cot ḡ − b) + πk with b = ∂ₜln(f₁/f₂)/(2μ)
        let b = m.log_ratio_rate() / (2.0 * mu);
        let w = I * cot_g_bar - b;
        let g_from_bar = I * (w.inv()).atanh();
        let k = ((g - g_from_bar).re / PI).round();
        let angle_relation_residual = (g - g_from_bar - k * PI).norm();

        Ok(Eigenbasis {
            chi_minus,
            chi_plus,
            psi_minus,
            psi_plus,
            g,
            g_bar,
            lambda_eff,
            lambda_orig,
            residual_eff,
            residual_orig,
            cot_relation_residual,
            angle_relation_residual,
            branch_k: k as i64,
        })
    }

    /// Samples the EP coordinates `B = Ω₋/ν`, `B̄ = iΓ/ν` and the shift
    /// `b = ∂ₜln(f₁/f₂)/(2ν)` on `grid`; exact identity `B̄ + B = ib`.
    pub fn ep_report(&self, grid: &[f64], tol_ep: f64) -> Result<EPReport> {
        if self.nu.norm() == 0.0 {
            return Err(Error::InvalidModel("EP coordinates require ν ≠ 0".into()));
        }
        let mut samples = Vec::with_capacity(grid.len());
        let mut crossings_orig = Vec::new();
        let mut crossings_eff = Vec::new();
        for &t in grid {
            let m = self.modulations(t)?;
            let b_orig = self.omega_minus(t)? / self.nu;
            let b_eff = I * self.gamma_eff(t)? / self.nu;
            let shift = m.log_ratio_rate() / (2.0 * self.nu);
            let dist = |z: C64| (z - I).norm().min((z + I).norm());
            let dist_orig = dist(b_orig);
            let dist_eff = dist(b_eff);
            if dist_orig < tol_ep {
                crossings_orig.push(t);
            }
            if dist_eff < tol_ep {
                crossings_eff.push(t);
            }
            let angles = self.eigenbasis(t).ok().map(|e| (e.g, e.g_bar, e.branch_k));
            samples.push(EpSample {
                t,
                b_orig,
                b_eff,
                shift,
                dist_orig,
                dist_eff,
                g: angles.map(|a| a.0),
                g_bar: angles.map(|a| a.1),
                branch_k: angles.map(|a| a.2),
            });
        }
        Ok(EPReport {
            tol_ep,
            samples,
            crossings_orig,
            crossings_eff,
        })
    }

    /// `∂ₜ ln(f₁/f₂)` at `t`.
    pub fn log_ratio_rate(&self, t: f64) -> Result<C64> {
        Ok(self.modulations(t)?.log_ratio_rate())
    }
}

/// A modulation counts as zero when it would reach zero within `1e-12` time
/// units at its current rate, so exponentially small values stay valid.
fn near_zero(f: C64, df: C64) -> bool {
    f.norm() == 0.0 || f.norm() <= ZERO_TIME * df.norm()
}

const ZERO_TIME: f64 = 1e-12;

fn finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Principal `arccot z = arctan(1/z)`, with `arccot 0 = π/2`.
pub fn arccot(z: C64) -> C64 {
    if z.norm() == 0.0 {
        C64::new(PI / 2.0, 0.0)
    } else {
        z.inv().atan()
    }
}

/// Callable view of the effective-frame quantities of a spec.
#[derive(Clone, Copy, Debug)]
pub struct EffectiveFrame<'a> {
    spec: &'a ModelSpec,
}

impl EffectiveFrame<'_> {
    pub fn gamma(&self, t: f64) -> Result<C64> {
        self.spec.gamma_eff(t)
    }

    pub fn omega_plus(&self, t: f64) -> Result<C64> {
        self.spec.omega_plus(t)
    }

    pub fn omega_minus(&self, t: f64) -> Result<C64> {
        self.spec.omega_minus(t)
    }

    pub fn a(&self, t: f64) -> Result<Mat2> {
        self.spec.gauge(t)
    }

    pub fn a_inv(&self, t: f64) -> Result<Mat2> {
        self.spec.gauge(t)?.inv()
    }

    pub fn hamiltonian(&self, t: f64) -> Result<Mat2> {
        self.spec.effective_closed(t)
    }
}

/// Incremental evaluator of `A(t)` that carries the phase integral and the
/// square-root branch of `f₁/f₂` from one query time to the next.
///
/// Queries in increasing order cost one short quadrature each.
#[derive(Clone, Debug)]
pub struct GaugeTracker<'a> {
    spec: &'a ModelSpec,
    t: f64,
    /// `∫_{t_ref}^t Ω₊`.
    phase_integral: C64,
    ratio: C64,
    sqrt_ratio: C64,
}

/// `A(t)` and `∂ₜA(t)`.
#[derive(Clone, Copy, Debug)]
pub struct GaugeState {
    pub a: Mat2,
    pub da: Mat2,
}

impl<'a> GaugeTracker<'a> {
    pub fn new(spec: &'a ModelSpec) -> Result<Self> {
        let t = spec.t_ref;
        let ratio = spec.modulations(t)?.ratio();
        Ok(GaugeTracker {
            spec,
            t,
            phase_integral: C64::new(0.0, 0.0),
            ratio,
            sqrt_ratio: ratio.sqrt(),
        })
    }

    fn advance(&mut self, t: f64) -> Result<()> {
        if t == self.t {
            return Ok(());
        }
        let spec = self.spec;
        let delta = integrate(|s| spec.omega_plus(s), self.t, t, phase_quad())?;
        let pieces = ((t - self.t).abs() / 0.25).ceil().max(1.0) as usize;
        let (mut ta, mut ra, mut sa) = (self.t, self.ratio, self.sqrt_ratio);
        for k in 1..=pieces {
            let tb = if k == pieces {
                t
            } else {
                self.t + (t - self.t) * k as f64 / pieces as f64
            };
            let (rb, sb) = self.continue_sqrt(ta, ra, sa, tb, 0)?;
            ta = tb;
            ra = rb;
            sa = sb;
        }
        self.phase_integral += delta;
        self.t = t;
        self.ratio = ra;
        self.sqrt_ratio = sa;
        Ok(())
    }

    fn continue_sqrt(&self, ta: f64, ra: C64, sa: C64, tb: f64, depth: u32) -> Result<(C64, C64)> {
        let rb = self.spec.modulations(tb)?.ratio();
        let step = (rb / ra).arg().abs();
        if step < PI / 4.0 {
            let cand = rb.sqrt();
            let sb = if (cand * sa.conj()).re >= 0.0 {
                cand
            } else {
                -cand
            };
            return Ok((rb, sb));
        }
        if depth > 40 {
            return Err(Error::BranchTracking { t: tb });
        }
        let tm = 0.5 * (ta + tb);
        let (rm, sm) = self.continue_sqrt(ta, ra, sa, tm, depth + 1)?;
        self.continue_sqrt(tm, rm, sm, tb, depth + 1)
    }

    /// `A(t)`.
    pub fn at(&mut self, t: f64) -> Result<Mat2> {
        Ok(self.state(t)?.a)
    }

    /// `A(t)` together with its time derivative.
    pub fn state(&mut self, t: f64) -> Result<GaugeState> {
        self.advance(t)?;
        let spec = self.spec;
        let m = spec.modulations(t)?;
        let [d1, d2] = spec.frame_scale;
        let s = self.sqrt_ratio;
        let phase = (-I * self.phase_integral).exp();
        let a = Mat2::diag(d1 * phase * s, d2 * phase / s);
        let dr = m.wronskian() / (m.f2 * m.f2);
        let ds = dr / (2.0 * s);
        let dphase = -I * spec.omega_plus(t)? * phase;
        let da = Mat2::diag(
            d1 * (dphase * s + phase * ds),
            d2 * (dphase / s - phase * ds / (s * s)),
        );
        Ok(GaugeState { a, da })
    }

    /// `A⁻¹HA − iA⁻¹∂ₜA` at `t`.
    pub fn effective_numeric(&mut self, t: f64) -> Result<Mat2> {
        let GaugeState { a, da } = self.state(t)?;
        let a_inv = a.inv()?;
        let h = self.spec.hamiltonian(t)?;
        Ok(a_inv * h * a - (a_inv * da).scale(I))
    }
}

/// Closed-form eigenvalues `λ∓ = Ω₊ ∓ √(Ω₋² + νν′)` and
/// `λ̄∓ = ∓√(νν′ − Γ²)` (principal roots).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spectra {
    pub lambda_orig: [C64; 2],
    pub lambda_eff: [C64; 2],
}

/// Output of [`ModelSpec::eigenbasis`].
///
/// `lambda_eff[k]` and `lambda_orig[k]` are the eigenvalues belonging to the
/// minus (`k = 0`) and plus (`k = 1`) vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigenbasis {
    pub chi_minus: Vec2,
    pub chi_plus: Vec2,
    pub psi_minus: Vec2,
    pub psi_plus: Vec2,
    pub g: C64,
    pub g_bar: C64,
    pub lambda_eff: [C64; 2],
    pub lambda_orig: [C64; 2],
    /// Largest relative eigen-residual of `χ∓` under `H_eff`.
    pub residual_eff: f64,
    /// Largest relative eigen-residual of `Ψ∓` under `H`.
    pub residual_orig: f64,
    /// `|cot ḡ − cot g + iW/(2μf₁f₂)|`.
    pub cot_relation_residual: f64,
    /// Distance of `g` from `i·arccoth(i cot ḡ − b) + πk`.
    pub angle_relation_residual: f64,
    pub branch_k: i64,
}

impl Eigenbasis {
    /// Unit-norm copies of `(χ₋, χ₊)`.
    pub fn chi_normalized(&self) -> [Vec2; 2] {
        [normalize(self.chi_minus), normalize(self.chi_plus)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpSample {
    pub t: f64,
    /// `B = Ω₋/ν`.
    pub b_orig: C64,
    /// `B̄ = iΓ/ν`.
    pub b_eff: C64,
    /// `b = ∂ₜln(f₁/f₂)/(2ν)`; `b.re` and `b.im` are the split `b_r + i b_i`.
    pub shift: C64,
    /// `min |B ∓ i|`.
    pub dist_orig: f64,
    /// `min |B̄ ∓ i|`.
    pub dist_eff: f64,
    pub g: Option<C64>,
    pub g_bar: Option<C64>,
    pub branch_k: Option<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EPReport {
    pub tol_ep: f64,
    pub samples: Vec<EpSample>,
    /// Sample times with `|B ∓ i| < tol_ep`.
    pub crossings_orig: Vec<f64>,
    /// Sample times with `|B̄ ∓ i| < tol_ep`.
    pub crossings_eff: Vec<f64>,
}
