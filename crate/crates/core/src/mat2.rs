//! Dense complex 2×2 matrices and 2-vectors.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Complex 2-vector `(x, y)`.
pub type Vec2 = [C64; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Overlap threshold above which an eigen-decomposition is reported as
/// defective.
pub const DEFECTIVE_THRESHOLD: f64 = 1.0 - 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub m11: C64,
    pub m12: C64,
    pub m21: C64,
    pub m22: C64,
}

impl Mat2 {
    pub const fn new(m11: C64, m12: C64, m21: C64, m22: C64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    pub fn from_real(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2::new(m11.into(), m12.into(), m21.into(), m22.into())
    }

    pub const fn zero() -> Self {
        Mat2::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn diag(a: C64, d: C64) -> Self {
        Mat2::new(a, ZERO, ZERO, d)
    }

    pub fn sigma_x() -> Self {
        Mat2::new(ZERO, ONE, ONE, ZERO)
    }

    pub fn sigma_y() -> Self {
        Mat2::new(ZERO, -I, I, ZERO)
    }

    pub fn sigma_z() -> Self {
        Mat2::new(ONE, ZERO, ZERO, -ONE)
    }

    /// σ₊ = (σx + iσy)/2, the raising matrix [[0,1],[0,0]].
    pub fn sigma_plus() -> Self {
        Mat2::new(ZERO, ONE, ZERO, ZERO)
    }

    /// σ₋ = (σx − iσy)/2.
    pub fn sigma_minus() -> Self {
        Mat2::new(ZERO, ZERO, ONE, ZERO)
    }

    /// Builds `c0·I + cx·σx + cy·σy + cz·σz`.
    pub fn from_pauli(c: [C64; 4]) -> Self {
        let [c0, cx, cy, cz] = c;
        Mat2::new(c0 + cz, cx - I * cy, cx + I * cy, c0 - cz)
    }

    /// Coefficients `[c0, cx, cy, cz]` in the basis `{I, σx, σy, σz}`.
    pub fn pauli(&self) -> [C64; 4] {
        [
            (self.m11 + self.m22) * 0.5,
            (self.m12 + self.m21) * 0.5,
            (self.m12 - self.m21) * (0.5 * I),
            (self.m11 - self.m22) * 0.5,
        ]
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.m11, self.m12, self.m21, self.m22]
    }

    pub fn from_entries(e: [C64; 4]) -> Self {
        Mat2::new(e[0], e[1], e[2], e[3])
    }

    pub fn trace(&self) -> C64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> C64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn adjoint(&self) -> Self {
        Mat2::new(
            self.m11.conj(),
            self.m21.conj(),
            self.m12.conj(),
            self.m22.conj(),
        )
    }

    pub fn scale(&self, s: C64) -> Self {
        Mat2::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.entries()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m21 * v[0] + self.m22 * v[1],
        ]
    }

    pub fn inv(&self) -> Result<Self> {
        let det = self.det();
        if !(det.norm() > 1e-300) {
            return Err(Error::Singular { det: det.norm() });
        }
        let r = det.inv();
        Ok(Mat2::new(
            self.m22 * r,
            -self.m12 * r,
            -self.m21 * r,
            self.m11 * r,
        ))
    }

    /// Matrix exponential in closed form:
    /// `exp(M) = e^{tr/2}(cosh s·I + sinh(s)/s·(M − tr/2·I))` with
    /// `s² = −det(M − tr/2·I)`.
    pub fn expm(&self) -> Self {
        let half = self.trace() * 0.5;
        let k = *self - Mat2::identity().scale(half);
        let s2 = -k.det();
        let s = s2.sqrt();
        let sinhc = if s.norm() < 1e-4 {
            ONE + s2 / 6.0 + s2 * s2 / 120.0
        } else {
            s.sinh() / s
        };
        (Mat2::identity().scale(s.cosh()) + k.scale(sinhc)).scale(half.exp())
    }

    /// Eigen-decomposition; see [`Eig2`].
    pub fn eig(&self) -> Eig2 {
        let half_tr = self.trace() * 0.5;
        let h = (self.m11 - self.m22) * 0.5;
        let s = (h * h + self.m12 * self.m21).sqrt();
        let det = self.det();
        // larger root first, the other from the product to avoid cancellation
        let (big, small) = if (half_tr + s).norm() >= (half_tr - s).norm() {
            (half_tr + s, half_tr - s)
        } else {
            (half_tr - s, half_tr + s)
        };
        let small = if big.norm() > 0.0 && small.norm() < 0.5 * big.norm() {
            det / big
        } else {
            small
        };
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let (l1, l2) = sort_pair(big, small, scale);

        let scalar = self.m12.norm() <= 1e-15 * scale
            && self.m21.norm() <= 1e-15 * scale
            && (self.m11 - self.m22).norm() <= 1e-15 * scale;
        let (v1, v2) = if scalar {
            ([ONE, ZERO], [ZERO, ONE])
        } else {
            (self.null_vector(l1), self.null_vector(l2))
        };
        let overlap = (v1[0].conj() * v2[0] + v1[1].conj() * v2[1])
            .norm()
            .min(1.0);
        Eig2 {
            values: [l1, l2],
            vectors: [v1, v2],
            coalescence: overlap,
            defective: overlap >= DEFECTIVE_THRESHOLD,
        }
    }

    fn null_vector(&self, lambda: C64) -> Vec2 {
        let (a, b) = (self.m11 - lambda, self.m12);
        let (c, d) = (self.m21, self.m22 - lambda);
        let r1 = a.norm_sqr() + b.norm_sqr();
        let r2 = c.norm_sqr() + d.norm_sqr();
        let v = if r1 >= r2 {
            if r1 == 0.0 {
                [ONE, ZERO]
            } else {
                [b, -a]
            }
        } else {
            [d, -c]
        };
        normalize(v)
    }
}

/// Orders two eigenvalues by real part, then imaginary part; real parts
/// closer than `1e-12·scale` count as equal.
fn sort_pair(a: C64, b: C64, scale: f64) -> (C64, C64) {
    let tol = 1e-12 * scale;
    let swap = if (a.re - b.re).abs() > tol {
        a.re > b.re
    } else {
        a.im > b.im
    };
    if swap {
        (b, a)
    } else {
        (a, b)
    }
}

/// Result of [`Mat2::eig`].
///
/// Eigenvalues are sorted by (real, imaginary) ascending. Eigenvectors have
/// unit Euclidean norm; `coalescence` is their overlap `|⟨v₁,v₂⟩|` and
/// `defective` is set when it reaches [`DEFECTIVE_THRESHOLD`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eig2 {
    pub values: [C64; 2],
    pub vectors: [Vec2; 2],
    pub coalescence: f64,
    pub defective: bool,
}

pub fn vec_norm(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

pub fn normalize(v: Vec2) -> Vec2 {
    let n = vec_norm(&v);
    if n == 0.0 {
        v
    } else {
        [v[0] / n, v[1] / n]
    }
}

pub fn vec_sub(a: &Vec2, b: &Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

pub fn vec_scale(v: &Vec2, s: C64) -> Vec2 {
    [v[0] * s, v[1] * s]
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 + o.m11,
            self.m12 + o.m12,
            self.m21 + o.m21,
            self.m22 + o.m22,
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 - o.m11,
            self.m12 - o.m12,
            self.m21 - o.m21,
            self.m22 - o.m22,
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: C64) -> Mat2 {
        self.scale(s)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        self.scale(C64::new(s, 0.0))
    }
}
