//! Complex special functions: log-gamma, Pochhammer symbol, Kummer `M`,
//! Tricomi `U` and generalized Laguerre `L` with complex degree and order.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Largest `|z|` accepted by the power series of [`kummer_m`].
pub const SERIES_Z_MAX: f64 = 50.0;

/// Distance from an integer below which `b` is treated as an integer in
/// [`tricomi_u`].
pub const INTEGER_B_TOL: f64 = 1e-8;

/// Offset used on either side of an integer `b`.
pub const INTEGER_B_OFFSET: f64 = 1e-6;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `sin(πz)` with the argument reduced exactly near the real integers.
fn sin_pi(z: C64) -> C64 {
    let n = z.re.round();
    let s = (C64::new(z.re - n, z.im) * PI).sin();
    if n.rem_euclid(2.0) == 0.0 {
        s
    } else {
        -s
    }
}

fn is_pole(z: C64) -> bool {
    z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round()
}

/// `ln Γ(z)`. Reflection is used for `Re z < ½`; only `exp(ln Γ)` is
/// guaranteed to be branch-independent.
pub fn log_gamma(z: C64) -> Result<C64> {
    if is_pole(z) {
        return Err(Error::Pole(format!("{z}")));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Range(format!("log_gamma({z})")));
    }
    if z.re < 0.5 {
        let s = sin_pi(z);
        return Ok(C64::new(PI.ln(), 0.0) - s.ln() - log_gamma(ONE - z)?);
    }
    let z = z - 1.0;
    let mut acc = C64::new(LANCZOS[0], 0.0);
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln())
}

pub fn gamma(z: C64) -> Result<C64> {
    Ok(log_gamma(z)?.exp())
}

/// `1/Γ(z)`, zero at the poles of `Γ`.
pub fn rgamma(z: C64) -> Result<C64> {
    if is_pole(z) {
        Ok(ZERO)
    } else {
        Ok((-log_gamma(z)?).exp())
    }
}

fn integer_value(n: C64) -> Option<i64> {
    (n.im == 0.0 && n.re == n.re.round() && n.re.abs() <= 4096.0).then_some(n.re as i64)
}

/// Rising factorial `(x)_n = Γ(x + n)/Γ(x)`.
///
/// Integer `n` uses the finite product, which is also defined when `x` is a
/// pole of `Γ`.
pub fn pochhammer(x: C64, n: C64) -> Result<C64> {
    if let Some(k) = integer_value(n) {
        if k >= 0 {
            return Ok((0..k).fold(ONE, |acc, j| acc * (x + j as f64)));
        }
        let mut denom = ONE;
        for j in 1..=(-k) {
            denom *= x - j as f64;
        }
        if denom == ZERO {
            return Err(Error::Pole(format!("({x})_{n}")));
        }
        return Ok(denom.inv());
    }
    if is_pole(x + n) {
        return Err(Error::Pole(format!("({x})_{n}")));
    }
    if is_pole(x) {
        return Ok(ZERO);
    }
    Ok((log_gamma(x + n)? - log_gamma(x)?).exp())
}

/// Kummer's function `M(a, b, z) = ₁F₁(a; b; z)`.
///
/// Summed as a power series; for `Re z < 0` the transformation
/// `M(a, b, z) = eᶻ M(b − a, b, −z)` keeps the terms positive-dominated.
pub fn kummer_m(a: C64, b: C64, z: C64) -> Result<C64> {
    Ok(kummer_m_with_bound(a, b, z)?.0)
}

/// `M(a, b, z)` together with the sum of the absolute values of the series
/// terms, which bounds the rounding error.
fn kummer_m_with_bound(a: C64, b: C64, z: C64) -> Result<(C64, f64)> {
    if is_pole(b) {
        return Err(Error::Pole(format!("M(a, {b}, z)")));
    }
    if z.norm() > SERIES_Z_MAX {
        return Err(Error::Range(format!(
            "|z| = {} exceeds the series limit {SERIES_Z_MAX}",
            z.norm()
        )));
    }
    if z.re < 0.0 {
        let (m, bound) = kummer_series(b - a, b, -z)?;
        let e = z.exp();
        return Ok((e * m, e.norm() * bound));
    }
    kummer_series(a, b, z)
}

fn kummer_series(a: C64, b: C64, z: C64) -> Result<(C64, f64)> {
    let mut sum = ONE;
    let mut bound = 1.0;
    let mut term = ONE;
    let mut small = 0;
    for k in 0..20_000usize {
        let kf = k as f64;
        term *= (a + kf) / (b + kf) * z / (kf + 1.0);
        sum += term;
        bound += term.norm();
        if term == ZERO {
            return Ok((sum, bound));
        }
        if term.norm() <= 1e-17 * sum.norm() {
            small += 1;
            if small >= 10 {
                return Ok((sum, bound));
            }
        } else {
            small = 0;
        }
    }
    Err(Error::Range(format!(
        "M({a}, {b}, {z}) series did not converge"
    )))
}

/// Ratio of the summed connection-formula term magnitudes to `|U|` above which the
/// ray integration of [`tricomi_u_log`] takes over.
pub const CANCELLATION_LIMIT: f64 = 1e4;

/// Tricomi's function `U(a, b, z)` on the principal branch of `z^{1−b}`.
pub fn tricomi_u(a: C64, b: C64, z: C64) -> Result<C64> {
    if z == ZERO {
        return Err(Error::Range("U(a, b, 0)".into()));
    }
    tricomi_u_log(a, b, z, z.ln())
}

/// `U(a, b, z)` with `z^{1−b} = exp((1 − b)·ln_z)` for a caller-supplied
/// logarithm, which allows continuation across the negative real axis.
///
/// Uses `U = Γ(1−b)/Γ(a−b+1)·M(a,b,z) + Γ(b−1)/Γ(a)·z^{1−b}·M(a−b+1,2−b,z)`.
/// Within [`INTEGER_B_TOL`] of an integer `b` the result is the mean of the
/// values at `b ± INTEGER_B_OFFSET`. When the two terms cancel by more than
/// [`CANCELLATION_LIMIT`] and `|Im ln_z| ≤ π`, `U` is instead integrated
/// inward from its asymptotic expansion at large `|z|` whenever the
/// estimated error of that route is smaller.
pub fn tricomi_u_log(a: C64, b: C64, z: C64, ln_z: C64) -> Result<C64> {
    if z == ZERO {
        return Err(Error::Range("U(a, b, 0)".into()));
    }
    let n = b.re.round();
    let (value, scale) = if (b - n).norm() < INTEGER_B_TOL {
        let e = INTEGER_B_OFFSET;
        let lo = tricomi_connection(a, C64::new(n - e, b.im), z, ln_z)?;
        let hi = tricomi_connection(a, C64::new(n + e, b.im), z, ln_z)?;
        ((lo.0 + hi.0) * 0.5, lo.1.max(hi.1))
    } else {
        tricomi_connection(a, b, z, ln_z)?
    };
    if scale > CANCELLATION_LIMIT * value.norm() && ln_z.im.abs() <= PI {
        if let Some(plan) = plan_ray(a, b, z.norm(), ln_z.im) {
            let ray_error = RAY_STEP_ERROR * plan.amplification;
            if ray_error * value.norm() < f64::EPSILON * scale {
                return tricomi_ray(a, b, &plan);
            }
        }
    }
    Ok(value)
}

fn tricomi_connection(a: C64, b: C64, z: C64, ln_z: C64) -> Result<(C64, f64)> {
    let mut value = ZERO;
    let mut bound = 0.0;
    let c1 = gamma(ONE - b)? * rgamma(a - b + 1.0)?;
    if c1 != ZERO {
        let (m, mb) = kummer_m_with_bound(a, b, z)?;
        value += c1 * m;
        bound += c1.norm() * mb;
    }
    let c2 = gamma(b - 1.0)? * rgamma(a)?;
    if c2 != ZERO {
        let c2 = c2 * ((ONE - b) * ln_z).exp();
        let (m, mb) = kummer_m_with_bound(a - b + 1.0, 2.0 - b, z)?;
        value += c2 * m;
        bound += c2.norm() * mb;
    }
    Ok((value, bound))
}

/// `Σ (a)_k (c)_k / k! · (−1/z)^k`, or `None` if the terms start growing
/// before reaching round-off.
fn asymptotic_sum(a: C64, c: C64, z: C64) -> Option<C64> {
    let mut sum = ONE;
    let mut term = ONE;
    let mut last = f64::INFINITY;
    for k in 0..2_000usize {
        let kf = k as f64;
        term *= -(a + kf) * (c + kf) / ((kf + 1.0) * z);
        sum += term;
        let size = term.norm();
        if size == 0.0 || size <= 1e-17 * sum.norm() {
            return Some(sum);
        }
        if size > last {
            return None;
        }
        last = size;
    }
    None
}

const RAY_STEP_ERROR: f64 = 1e-14;

struct RayPlan {
    radius: f64,
    phi: f64,
    r: f64,
    theta: f64,
    w0: C64,
    dw0: C64,
    amplification: f64,
}

/// Chooses the starting argument `φ` for [`tricomi_ray`] among `kθ/4`,
/// minimizing the worst growth of the competing solution `eˣ x^{a−b}`
/// relative to `U` along the path.
fn plan_ray(a: C64, b: C64, r: f64, theta: f64) -> Option<RayPlan> {
    let c = a - b + 1.0;
    let s = 2.0 * a - b;
    let level = |ln_x: C64| ln_x.exp().re + (s * ln_x).re;
    let mut best: Option<RayPlan> = None;
    for k in 0..=4 {
        let phi = theta * k as f64 / 4.0;
        if phi.abs() > FRAC_PI_2 + 1e-12 {
            continue;
        }
        let mut radius = 2.0 * r.max(15.0);
        let start = loop {
            let ln_far = C64::new(radius.ln(), phi);
            let far = ln_far.exp();
            if let (Some(s0), Some(s1)) =
                (asymptotic_sum(a, c, far), asymptotic_sum(a + 1.0, c, far))
            {
                break Some((
                    (-a * ln_far).exp() * s0,
                    -a * (-(a + 1.0) * ln_far).exp() * s1,
                ));
            }
            radius *= 2.0;
            if radius > 1e4 {
                break None;
            }
        };
        let Some((w0, dw0)) = start else { continue };
        let samples = 48;
        let mut lowest = f64::INFINITY;
        for i in 0..=samples {
            let p = i as f64 / samples as f64;
            let rho = radius * (r / radius).powf(p);
            lowest = lowest.min(level(C64::new(rho.ln(), phi)));
            lowest = lowest.min(level(C64::new(r.ln(), phi + (theta - phi) * p)));
        }
        let amplification = (level(C64::new(r.ln(), theta)) - lowest).exp();
        if best
            .as_ref()
            .is_none_or(|b| amplification < b.amplification)
        {
            best = Some(RayPlan {
                radius,
                phi,
                r,
                theta,
                w0,
                dw0,
                amplification,
            });
        }
    }
    best
}

/// Continues `U` inward from the asymptotic region by Taylor steps of the
/// Kummer equation: radially at argument `φ`, then along the arc `|x| = |z|`
/// to `arg z`.
fn tricomi_ray(a: C64, b: C64, plan: &RayPlan) -> Result<C64> {
    let scale = plan.w0.norm().max(plan.dw0.norm());
    if scale == 0.0 {
        return Ok(ZERO);
    }
    let (r, phi, theta) = (plan.r, plan.phi, plan.theta);
    let mut x = C64::from_polar(plan.radius, phi);
    let mut y = [plan.w0 / scale, plan.dw0 / scale];
    let mut rho = plan.radius;
    while rho > r {
        let next = (rho - (0.5 * rho).min(TAYLOR_STEP)).max(r);
        let target = C64::from_polar(next, phi);
        y = kummer_taylor_step(a, b, x, y, target - x)?;
        x = target;
        rho = next;
    }
    let arc_steps = ((theta - phi).abs() * r / (0.5 * r).min(TAYLOR_STEP)).ceil() as usize;
    for k in 1..=arc_steps {
        let target = C64::from_polar(r, phi + (theta - phi) * k as f64 / arc_steps as f64);
        y = kummer_taylor_step(a, b, x, y, target - x)?;
        x = target;
    }
    Ok(y[0] * scale)
}

const TAYLOR_STEP: f64 = 4.0;

/// Sums the Taylor series of the solution of `x w″ + (b − x) w′ − a w = 0`
/// with `(w, w′)(x0) = y` at `x0 + h`.
fn kummer_taylor_step(a: C64, b: C64, x0: C64, y: [C64; 2], h: C64) -> Result<[C64; 2]> {
    let (mut c0, mut c1) = (y[0], y[1]);
    let mut w = c0 + c1 * h;
    let mut dw = c1;
    let mut hp = h;
    let mut small = 0;
    for n in 0..400usize {
        let nf = n as f64;
        let c2 = ((nf + a) * c0 - (nf + 1.0) * (nf + b - x0) * c1) / (x0 * (nf + 2.0) * (nf + 1.0));
        let dterm = c2 * hp * (nf + 2.0);
        hp *= h;
        let term = c2 * hp;
        w += term;
        dw += dterm;
        if term.norm() <= 1e-17 * w.norm() && dterm.norm() <= 1e-17 * dw.norm() {
            small += 1;
            if small >= 3 {
                return Ok([w, dw]);
            }
        } else {
            small = 0;
        }
        c0 = c1;
        c1 = c2;
    }
    Err(Error::Range(format!(
        "Taylor step of U at {x0} did not converge"
    )))
}

/// Generalized Laguerre function
/// `L_n^{(α)}(z) = (α+1)_n / Γ(n+1) · M(−n, α+1, z)`.
pub fn laguerre_l(n: C64, alpha: C64, z: C64) -> Result<C64> {
    let b = alpha + 1.0;
    if is_pole(b) {
        return Err(Error::Pole(format!("L with α + 1 = {b}")));
    }
    let norm = rgamma(n + 1.0)?;
    if norm == ZERO {
        return Ok(ZERO);
    }
    let coeff = pochhammer(b, n)? * norm;
    Ok(coeff * kummer_m(-n, b, z)?)
}
