//! Floquet analysis of periodic generators: monodromy `U(T)`, multipliers
//! `λ_k = e^{−iTε_k}`, quasienergies and PT-phase labels, plus parameter
//! sweeps evaluated in parallel.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mat2::{Mat2, Vec2};
use crate::model::ModelSpec;
use crate::propagate::{
    propagate_matrix, propagate_state, uniform_grid, IntegratorConfig, Trajectory,
};

/// Tolerance on `||λ_k| − 1|` for the unbroken label.
pub const TOL_PHASE: f64 = 1e-6;

/// Eigenvector overlap from which a near-unimodular pair counts as a
/// boundary point.
pub const BOUNDARY_COALESCENCE: f64 = 1.0 - 1e-4;

/// Allowed `‖H(t + T) − H(t)‖ / (1 + ‖H(t)‖)` at the periodicity probes.
pub const PERIODICITY_TOL: f64 = 1e-9;

const PERIODICITY_PROBES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Unbroken,
    Broken,
    Boundary,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Unbroken => "unbroken",
            Phase::Broken => "broken",
            Phase::Boundary => "boundary",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloquetResult {
    pub period: f64,
    pub monodromy: Mat2,
    pub eigs: [C64; 2],
    /// `ε_k = i ln λ_k / T` with `Re ε_k ∈ (−π/T, π/T]`.
    pub quasienergies: [C64; 2],
    /// Overlap of the normalized Floquet eigenvectors.
    pub coalescence: f64,
    pub phase: Phase,
}

impl FloquetResult {
    pub fn abs_lambda(&self) -> [f64; 2] {
        [self.eigs[0].norm(), self.eigs[1].norm()]
    }

    /// `max_k ||λ_k| − 1|`.
    pub fn unimodularity_defect(&self) -> f64 {
        self.eigs
            .iter()
            .map(|l| (l.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Quasienergy `i ln λ / T` on the principal branch, real part folded into
/// `(−π/T, π/T]`.
pub fn quasienergy(lambda: C64, period: f64) -> C64 {
    let mut re = -lambda.arg() / period;
    if re <= -PI / period {
        re += 2.0 * PI / period;
    }
    C64::new(re, lambda.norm().ln() / period)
}

/// Phase label from the multipliers and the eigenvector overlap.
pub fn classify(eigs: [C64; 2], coalescence: f64, tol: f64) -> Phase {
    let defect = eigs
        .iter()
        .map(|l| (l.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    if coalescence >= BOUNDARY_COALESCENCE && defect < 10.0 * tol {
        Phase::Boundary
    } else if defect < tol {
        Phase::Unbroken
    } else {
        Phase::Broken
    }
}

/// Checks `H(t + T) ≈ H(t)` at evenly spaced probes in `[0, T)`.
pub fn check_periodic<H>(hamiltonian: &H, period: f64) -> Result<()>
where
    H: Fn(f64) -> Result<Mat2>,
{
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidIntegration(format!(
            "period must be positive, got {period}"
        )));
    }
    let mut worst: f64 = 0.0;
    for k in 0..PERIODICITY_PROBES {
        let t = period * k as f64 / PERIODICITY_PROBES as f64;
        let h0 = hamiltonian(t)?;
        let h1 = hamiltonian(t + period)?;
        worst = worst.max((h1 - h0).norm() / (1.0 + h0.norm()));
    }
    if worst > PERIODICITY_TOL {
        return Err(Error::NotPeriodic {
            period,
            deviation: worst,
        });
    }
    Ok(())
}

/// One-period monodromy of `i∂ₜU = H(t)U` from `t = 0`, with multipliers,
/// quasienergies and the phase label at [`TOL_PHASE`].
pub fn monodromy<H>(hamiltonian: H, period: f64, cfg: &IntegratorConfig) -> Result<FloquetResult>
where
    H: Fn(f64) -> Result<Mat2>,
{
    check_periodic(&hamiltonian, period)?;
    let u = propagate_matrix(&hamiltonian, 0.0, period, cfg)?;
    let eig = u.eig();
    Ok(FloquetResult {
        period,
        monodromy: u,
        eigs: eig.values,
        quasienergies: [
            quasienergy(eig.values[0], period),
            quasienergy(eig.values[1], period),
        ],
        coalescence: eig.coalescence,
        phase: classify(eig.values, eig.coalescence, TOL_PHASE),
    })
}

/// One sweep sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub sweep_value: f64,
    /// `|λ₁|, |λ₂|`; `NaN` when the point failed.
    pub abs_lambda: [f64; 2],
    pub quasienergies: [C64; 2],
    /// `λ₁λ₂`.
    pub eig_product: C64,
    pub coalescence: f64,
    pub phase: Option<Phase>,
    pub error: Option<String>,
}

impl PhasePoint {
    fn from_result(value: f64, r: &FloquetResult) -> Self {
        PhasePoint {
            sweep_value: value,
            abs_lambda: r.abs_lambda(),
            quasienergies: r.quasienergies,
            eig_product: r.eigs[0] * r.eigs[1],
            coalescence: r.coalescence,
            phase: Some(r.phase),
            error: None,
        }
    }

    fn failed(value: f64, err: &Error) -> Self {
        let nan = C64::new(f64::NAN, f64::NAN);
        PhasePoint {
            sweep_value: value,
            abs_lambda: [f64::NAN; 2],
            quasienergies: [nan; 2],
            eig_product: nan,
            coalescence: f64::NAN,
            phase: None,
            error: Some(err.to_string()),
        }
    }

    pub fn max_abs_lambda(&self) -> f64 {
        self.abs_lambda[0].max(self.abs_lambda[1])
    }
}

/// Evaluates `family(value) = (H, T)` for every value in parallel. Output
/// order follows `values`; failed points carry the error message.
pub fn phase_sweep<F, H>(family: F, values: &[f64], cfg: &IntegratorConfig) -> Vec<PhasePoint>
where
    F: Fn(f64) -> Result<(H, f64)> + Sync,
    H: Fn(f64) -> Result<Mat2>,
{
    values
        .par_iter()
        .map(|&v| {
            family(v)
                .and_then(|(h, period)| monodromy(h, period, cfg))
                .map(|r| PhasePoint::from_result(v, &r))
                .unwrap_or_else(|e| PhasePoint::failed(v, &e))
        })
        .collect()
}

/// Sweep values halfway between neighbours where `max|λ_k| − 1 − TOL_PHASE`
/// changes sign.
pub fn phase_boundaries(points: &[PhasePoint]) -> Vec<f64> {
    let sign = |p: &PhasePoint| {
        let s = p.max_abs_lambda() - 1.0 - TOL_PHASE;
        (!s.is_nan()).then_some(s > 0.0)
    };
    points
        .windows(2)
        .filter_map(|w| match (sign(&w[0]), sign(&w[1])) {
            (Some(a), Some(b)) if a != b => Some(0.5 * (w[0].sweep_value + w[1].sweep_value)),
            _ => None,
        })
        .collect()
}

/// Contiguous runs of equal phase label as `(first, last, phase)` sweep
/// values; failed points end a run.
pub fn phase_intervals(points: &[PhasePoint]) -> Vec<(f64, f64, Phase)> {
    let mut out: Vec<(f64, f64, Phase)> = Vec::new();
    let mut open = false;
    for p in points {
        match (p.phase, out.last_mut()) {
            (Some(ph), Some(last)) if open && last.2 == ph => last.1 = p.sweep_value,
            (Some(ph), _) => {
                out.push((p.sweep_value, p.sweep_value, ph));
                open = true;
            }
            (None, _) => open = false,
        }
    }
    out
}

/// Original-frame propagation over several periods together with the
/// Floquet data of `H(t)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasienergyTrace {
    pub trajectory: Trajectory,
    pub floquet: FloquetResult,
}

/// Propagates `psi0` under `spec.hamiltonian` over `n_periods` periods from
/// `t = 0` with `samples_per_period` output points per period.
pub fn quasienergy_trace(
    spec: &ModelSpec,
    period: f64,
    n_periods: usize,
    psi0: Vec2,
    samples_per_period: usize,
    cfg: &IntegratorConfig,
) -> Result<QuasienergyTrace> {
    let h = |t: f64| spec.hamiltonian(t);
    let floquet = monodromy(h, period, cfg)?;
    let t1 = period * n_periods as f64;
    let grid = uniform_grid(0.0, t1, period / samples_per_period.max(1) as f64);
    let trajectory = propagate_state(h, psi0, 0.0, t1, cfg, &grid)?;
    Ok(QuasienergyTrace {
        trajectory,
        floquet,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::ParamMap;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn static_pt(gamma: f64, w0: f64) -> impl Fn(f64) -> Result<Mat2> {
        move |_| {
            Ok(Mat2::new(
                c(0.0, gamma),
                c(0.0, -w0),
                c(0.0, w0),
                c(0.0, -gamma),
            ))
        }
    }

    #[test]
    fn zero_generator() {
        let r = monodromy(|_| Ok(Mat2::zero()), 1.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(r.monodromy, Mat2::identity());
        assert_eq!(r.phase, Phase::Unbroken);
        assert_eq!(r.eigs, [c(1.0, 0.0); 2]);
    }

    #[test]
    fn static_unbroken_and_broken() {
        let cfg = IntegratorConfig::default();
        let r = monodromy(static_pt(0.5, 1.0), 2.0, &cfg).unwrap();
        assert!(r.unimodularity_defect() < 1e-10);
        assert_eq!(r.phase, Phase::Unbroken);
        for (l, e) in r.eigs.iter().zip(&r.quasienergies) {
            assert!((l - (c(0.0, -2.0) * e).exp()).norm() < 1e-10);
            assert!(e.im.abs() <= TOL_PHASE / 2.0);
        }
        let r = monodromy(static_pt(1.5, 1.0), 2.0, &cfg).unwrap();
        let expected = (2.0 * (1.5f64 * 1.5 - 1.0).sqrt()).exp();
        let [a, b] = r.abs_lambda();
        assert!((a.max(b) - expected).abs() / expected < 1e-9);
        assert!((r.eigs[0] * r.eigs[1] - 1.0).norm() < 1e-9);
        assert_eq!(r.phase, Phase::Broken);
    }

    #[test]
    fn rejects_non_periodic() {
        let h = |t: f64| Ok(Mat2::diag(c(t, 0.0), c(-t, 0.0)));
        assert!(matches!(
            monodromy(h, 1.0, &IntegratorConfig::default()),
            Err(Error::NotPeriodic { .. })
        ));
    }

    #[test]
    fn constant_gamma_sweep_crosses_at_nu() {
        let values: Vec<f64> = (0..=40).map(|k| 0.5 + 0.025 * k as f64).collect();
        let pts = phase_sweep(
            |g| Ok((static_pt(g, 1.0), 1.0)),
            &values,
            &IntegratorConfig::default(),
        );
        assert_eq!(pts.len(), values.len());
        assert!(pts.windows(2).all(|w| w[0].sweep_value < w[1].sweep_value));
        let b = phase_boundaries(&pts);
        assert_eq!(b.len(), 1);
        assert!((b[0] - 1.0).abs() <= 0.025);
        let runs = phase_intervals(&pts);
        assert_eq!(runs.first().unwrap().2, Phase::Unbroken);
        assert_eq!(runs.last().unwrap().2, Phase::Broken);
    }

    #[test]
    fn quasienergy_fold() {
        let t = 2.0;
        for arg in [-3.0, -1.0, 0.0, 2.0, PI] {
            let l = C64::from_polar(1.3, arg);
            let e = quasienergy(l, t);
            assert!(e.re > -PI / t && e.re <= PI / t + 1e-15);
            assert!((l - (c(0.0, -t) * e).exp()).norm() < 1e-14);
        }
    }

    #[test]
    fn trace_of_static_model() {
        let spec = ModelSpec::new(
            c(1.0, 0.0),
            c(1.0, 0.0),
            "1",
            "1",
            "0",
            "0",
            ParamMap::new(),
        )
        .unwrap();
        let tr = quasienergy_trace(
            &spec,
            1.0,
            3,
            [c(1.0, 0.0), c(0.0, 0.0)],
            8,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(tr.trajectory.samples.len(), 25);
        assert_eq!(tr.floquet.phase, Phase::Unbroken);
    }
}
