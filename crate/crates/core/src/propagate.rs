//! Adaptive integration of `i dψ/dt = H(t)ψ` for states and propagators.
//!
//! The integrator is the Dormand–Prince 5(4) pair with a PI step-size
//! controller and its native fourth-order continuous extension, which is
//! used to place samples on a caller-supplied output grid.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::{vec_norm, Mat2, Vec2};
use crate::model::{GaugeTracker, ModelSpec};

/// Norm beyond which a state propagation is stopped and flagged as truncated.
pub const OVERFLOW_NORM: f64 = 1e150;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; `0` selects one automatically.
    pub h_init: f64,
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-12,
            h_init: 0.0,
            h_min: 1e-13,
            max_steps: 2_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        IntegratorConfig {
            rtol,
            atol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rtol > 0.0
            && self.atol > 0.0
            && self.h_min > 0.0
            && self.h_init >= 0.0
            && self.max_steps > 0
            && self.rtol.is_finite()
            && self.atol.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidIntegration(format!(
                "tolerances and h_min must be positive: {self:?}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Original,
    Effective,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: Vec2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Time-ordered state samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub frame: Frame,
    pub samples: Vec<Sample>,
    /// Set when propagation stopped at the overflow guard before the end of
    /// the output grid.
    pub truncated: bool,
    pub stats: SolverStats,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.samples.iter().map(|s| vec_norm(&s.state)).collect()
    }

    /// Per-site densities `|ψ₁|², |ψ₂|²`.
    pub fn densities(&self) -> Vec<[f64; 2]> {
        self.samples
            .iter()
            .map(|s| [s.state[0].norm_sqr(), s.state[1].norm_sqr()])
            .collect()
    }
}

/// Evenly spaced grid on `[t0, t1]` with spacing close to `dt` that always
/// contains both endpoints.
pub fn uniform_grid(t0: f64, t1: f64, dt: f64) -> Vec<f64> {
    if t1 <= t0 || !(dt > 0.0) {
        return vec![t0];
    }
    let n = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    (0..=n)
        .map(|k| {
            if k == n {
                t1
            } else {
                t0 + (t1 - t0) * (k as f64) / (n as f64)
            }
        })
        .collect()
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const BETA: f64 = 0.04;
const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

type State<const N: usize> = [C64; N];

fn combo<const N: usize>(y: &State<N>, h: f64, terms: &[(f64, &State<N>)]) -> State<N> {
    let mut out = *y;
    for (w, k) in terms {
        let s = h * w;
        for i in 0..N {
            out[i] += k[i] * s;
        }
    }
    out
}

fn state_norm<const N: usize>(y: &State<N>) -> f64 {
    y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn finite<const N: usize>(y: &State<N>) -> bool {
    y.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub(crate) struct Outcome<const N: usize> {
    pub t: f64,
    pub y: State<N>,
    pub truncated: bool,
    pub stats: SolverStats,
}

/// Core DOPRI5 driver. Calls `sample(t, y)` for each grid point in order.
pub(crate) fn dopri5<const N: usize, F, S>(
    mut rhs: F,
    t0: f64,
    y0: State<N>,
    t1: f64,
    cfg: &IntegratorConfig,
    grid: &[f64],
    mut sample: S,
) -> Result<Outcome<N>>
where
    F: FnMut(f64, &State<N>) -> Result<State<N>>,
    S: FnMut(f64, &State<N>),
{
    cfg.validate()?;
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return Err(Error::InvalidIntegration(format!(
            "require finite t0 <= t1, got [{t0}, {t1}]"
        )));
    }
    let slack = 1e-12 * (1.0 + t0.abs().max(t1.abs()));
    if grid.windows(2).any(|w| w[1] < w[0])
        || grid.iter().any(|&g| g < t0 - slack || g > t1 + slack)
    {
        return Err(Error::InvalidIntegration(
            "output grid must be sorted and inside [t0, t1]".into(),
        ));
    }
    if !finite(&y0) {
        return Err(Error::InvalidIntegration(
            "initial state is not finite".into(),
        ));
    }

    let mut stats = SolverStats::default();
    let mut next = 0usize;
    while next < grid.len() && grid[next] <= t0 {
        sample(grid[next], &y0);
        next += 1;
    }
    if t1 == t0 {
        while next < grid.len() {
            sample(grid[next], &y0);
            next += 1;
        }
        return Ok(Outcome {
            t: t0,
            y: y0,
            truncated: false,
            stats,
        });
    }

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y)?;
    stats.rhs_evals += 1;
    let span = t1 - t0;
    let mut h = if cfg.h_init > 0.0 {
        cfg.h_init
    } else {
        stats.rhs_evals += 1;
        initial_step(&mut rhs, t, &y, &k1, span, cfg)?
    };
    let mut facold: f64 = 1e-4;
    let mut rejected_last = false;
    let expo1 = 0.2 - BETA * 0.75;

    loop {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return Err(Error::MaxSteps {
                t,
                steps: cfg.max_steps,
            });
        }
        let remaining = t1 - t;
        let last = h >= remaining * (1.0 - 1e-12) || t + 1.01 * h >= t1;
        if last {
            h = remaining;
        }
        if h < cfg.h_min && !last {
            return Err(Error::StepUnderflow { t, h });
        }

        let y2 = combo(&y, h, &[(A21, &k1)]);
        let k2 = rhs(t + C2 * h, &y2)?;
        let y3 = combo(&y, h, &[(A31, &k1), (A32, &k2)]);
        let k3 = rhs(t + C3 * h, &y3)?;
        let y4 = combo(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        let k4 = rhs(t + C4 * h, &y4)?;
        let y5 = combo(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        let k5 = rhs(t + C5 * h, &y5)?;
        let y6 = combo(
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        let t_new = if last { t1 } else { t + h };
        let k6 = rhs(t_new, &y6)?;
        let y_new = combo(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = rhs(t_new, &y_new)?;
        stats.rhs_evals += 6;

        let mut err_sq = 0.0;
        for i in 0..N {
            let e =
                (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
            let sc = cfg.atol + cfg.rtol * y[i].norm().max(y_new[i].norm());
            err_sq += (e.norm() / sc).powi(2);
        }
        let err = (err_sq / N as f64).sqrt();
        if !err.is_finite() {
            // non-finite trial: shrink hard and retry
            stats.rejected += 1;
            rejected_last = true;
            h *= FAC_MIN;
            if h < cfg.h_min {
                return Err(Error::StepUnderflow { t, h });
            }
            continue;
        }

        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            let fac = (fac11 / facold.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            facold = err.max(1e-4);
            stats.accepted += 1;

            if next < grid.len() && grid[next] <= t_new + slack {
                let mut ydiff = [C64::new(0.0, 0.0); N];
                let mut bspl = ydiff;
                let mut c3 = ydiff;
                let mut c4 = ydiff;
                for i in 0..N {
                    ydiff[i] = y_new[i] - y[i];
                    bspl[i] = k1[i] * h - ydiff[i];
                    c3[i] = ydiff[i] - k7[i] * h - bspl[i];
                    c4[i] = (k1[i] * D1
                        + k3[i] * D3
                        + k4[i] * D4
                        + k5[i] * D5
                        + k6[i] * D6
                        + k7[i] * D7)
                        * h;
                }
                while next < grid.len() && grid[next] <= t_new + slack {
                    let tg = grid[next];
                    let th = ((tg - t) / h).clamp(0.0, 1.0);
                    let th1 = 1.0 - th;
                    let mut yg = [C64::new(0.0, 0.0); N];
                    for i in 0..N {
                        yg[i] =
                            y[i] + (ydiff[i] + (bspl[i] + (c3[i] + c4[i] * th1) * th) * th1) * th;
                    }
                    sample(tg, &yg);
                    next += 1;
                }
            }

            t = t_new;
            y = y_new;
            k1 = k7;
            if !finite(&y) || state_norm(&y) > OVERFLOW_NORM {
                return Ok(Outcome {
                    t,
                    y,
                    truncated: true,
                    stats,
                });
            }
            if last {
                break;
            }
            if rejected_last {
                h_new = h_new.min(h);
            }
            rejected_last = false;
            h = h_new;
        } else {
            stats.rejected += 1;
            rejected_last = true;
            h /= (fac11 / SAFE).min(1.0 / FAC_MIN);
        }
    }
    Ok(Outcome {
        t,
        y,
        truncated: false,
        stats,
    })
}

fn initial_step<const N: usize, F>(
    rhs: &mut F,
    t: f64,
    y: &State<N>,
    f0: &State<N>,
    span: f64,
    cfg: &IntegratorConfig,
) -> Result<f64>
where
    F: FnMut(f64, &State<N>) -> Result<State<N>>,
{
    let scale = |i: usize| cfg.atol + cfg.rtol * y[i].norm();
    let d0 = (0..N)
        .map(|i| (y[i].norm() / scale(i)).powi(2))
        .sum::<f64>()
        / N as f64;
    let d1 = (0..N)
        .map(|i| (f0[i].norm() / scale(i)).powi(2))
        .sum::<f64>()
        / N as f64;
    let (d0, d1) = (d0.sqrt(), d1.sqrt());
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    }
    .min(span);
    let y1 = combo(y, h0, &[(1.0, f0)]);
    let f1 = rhs(t + h0, &y1)?;
    let d2 = ((0..N)
        .map(|i| ((f1[i] - f0[i]).norm() / scale(i)).powi(2))
        .sum::<f64>()
        / N as f64)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(span).max(cfg.h_min))
}

fn schrodinger(h: &Mat2, y: &Vec2) -> Vec2 {
    let minus_i = C64::new(0.0, -1.0);
    let hy = h.mul_vec(y);
    [hy[0] * minus_i, hy[1] * minus_i]
}

/// Solves `i dψ/dt = H(t)ψ` from `ψ(t0) = psi0` to `t1`, sampling on
/// `out_grid`.
///
/// If the state norm passes [`OVERFLOW_NORM`] the trajectory is returned up
/// to that point with `truncated = true`.
pub fn propagate_state<H>(
    hamiltonian: H,
    psi0: Vec2,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    out_grid: &[f64],
) -> Result<Trajectory>
where
    H: Fn(f64) -> Result<Mat2>,
{
    match propagate_state_partial(hamiltonian, psi0, t0, t1, cfg, out_grid) {
        (traj, None) => Ok(traj),
        (_, Some(err)) => Err(err),
    }
}

/// Like [`propagate_state`], but on failure keeps the samples emitted before
/// the error, marks the trajectory truncated and returns the error alongside.
pub fn propagate_state_partial<H>(
    hamiltonian: H,
    psi0: Vec2,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    out_grid: &[f64],
) -> (Trajectory, Option<Error>)
where
    H: Fn(f64) -> Result<Mat2>,
{
    let mut samples = Vec::with_capacity(out_grid.len());
    let outcome = dopri5(
        |t, y: &Vec2| Ok(schrodinger(&hamiltonian(t)?, y)),
        t0,
        psi0,
        t1,
        cfg,
        out_grid,
        |t, y| samples.push(Sample { t, state: *y }),
    );
    match outcome {
        Ok(outcome) => {
            let truncated = outcome.truncated && samples.len() < out_grid.len();
            let traj = Trajectory {
                frame: Frame::Original,
                samples,
                truncated,
                stats: outcome.stats,
            };
            (traj, None)
        }
        Err(err) => {
            let traj = Trajectory {
                frame: Frame::Original,
                samples,
                truncated: true,
                stats: SolverStats::default(),
            };
            (traj, Some(err))
        }
    }
}

/// Propagator `U(t1, t0)` of `i dU/dt = H(t)U`, `U(t0) = I`.
pub fn propagate_matrix<H>(hamiltonian: H, t0: f64, t1: f64, cfg: &IntegratorConfig) -> Result<Mat2>
where
    H: Fn(f64) -> Result<Mat2>,
{
    let minus_i = C64::new(0.0, -1.0);
    let outcome = dopri5(
        |t, u: &[C64; 4]| {
            let du = (hamiltonian(t)? * Mat2::from_entries(*u)).scale(minus_i);
            Ok(du.entries())
        },
        t0,
        Mat2::identity().entries(),
        t1,
        cfg,
        &[],
        |_, _| {},
    )?;
    if outcome.truncated {
        return Err(Error::Overflow { t: outcome.t });
    }
    Ok(Mat2::from_entries(outcome.y))
}

/// Result of [`gauge_roundtrip`].
#[derive(Clone, Debug)]
pub struct Roundtrip {
    pub original: Trajectory,
    pub effective: Trajectory,
    /// `max ‖Ψ(t) − A(t)χ(t)‖ / (1 + ‖Ψ(t)‖)` over the common samples.
    pub max_deviation: f64,
}

/// Propagates `ψ0` under `H(t)` and `χ0 = A⁻¹(t0)ψ0` under `H_eff(t)`, then
/// compares `Ψ` with `Aχ` on `out_grid`.
pub fn gauge_roundtrip(
    spec: &ModelSpec,
    psi0: Vec2,
    t0: f64,
    t1: f64,
    cfg: &IntegratorConfig,
    out_grid: &[f64],
) -> Result<Roundtrip> {
    let mut tracker = GaugeTracker::new(spec)?;
    let chi0 = tracker.at(t0)?.inv()?.mul_vec(&psi0);
    let original = propagate_state(|t| spec.hamiltonian(t), psi0, t0, t1, cfg, out_grid)?;
    let mut effective = propagate_state(|t| spec.effective_closed(t), chi0, t0, t1, cfg, out_grid)?;
    effective.frame = Frame::Effective;
    let mut max_deviation: f64 = 0.0;
    for (p, c) in original.samples.iter().zip(&effective.samples) {
        let mapped = tracker.at(p.t)?.mul_vec(&c.state);
        let diff = [p.state[0] - mapped[0], p.state[1] - mapped[1]];
        max_deviation = max_deviation.max(vec_norm(&diff) / (1.0 + vec_norm(&p.state)));
    }
    Ok(Roundtrip {
        original,
        effective,
        max_deviation,
    })
}
