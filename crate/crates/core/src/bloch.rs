//! Spin-1/2 geometry on the restricted observer chart.
//!
//! An observer state is a measurement axis `(theta, phi)`. Because an axis and
//! its antipode describe the same observable with the eigenvector labels
//! exchanged, axes are stored on the half-open chart `[0, pi) x [0, pi)`.
//! `canonicalize_axis` maps arbitrary angles onto that chart and records when
//! the antipodal identification `(theta, phi) -> (pi - theta, phi + pi)` was used.
//!
//! Electron states are written `(sqrt(rho) e^{-i tau}, sqrt(1 - rho))`, with the
//! second amplitude real and non-negative.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for unit-norm and hermiticity checks.
pub const GEOMETRY_TOL: f64 = 1e-12;

/// Result of a spin-projection measurement. `Up` is encoded as 1, `Down` as 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Outcome {
    Down,
    Up,
}

impl Outcome {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Outcome::Up
        } else {
            Outcome::Down
        }
    }

    pub fn bit(self) -> bool {
        matches!(self, Outcome::Up)
    }
}

impl From<Outcome> for u8 {
    fn from(o: Outcome) -> u8 {
        o.bit() as u8
    }
}

impl TryFrom<u8> for Outcome {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Outcome::Down),
            1 => Ok(Outcome::Up),
            other => Err(format!("outcome must be 0 or 1, got {other}")),
        }
    }
}

/// Observer state: a measurement axis on the chart `[0, pi) x [0, pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Axis {
    theta: f64,
    phi: f64,
    labels_swapped: bool,
}

impl Axis {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// True if canonicalization applied the antipodal map, which exchanges
    /// the up/down eigenvector labels relative to the raw input angles.
    pub fn labels_swapped(&self) -> bool {
        self.labels_swapped
    }

    /// The same axis with `labels_swapped` cleared.
    pub fn unflagged(self) -> Self {
        Axis {
            labels_swapped: false,
            ..self
        }
    }

    /// Canonical chart axis pointing along `v` (or its antipode).
    pub fn from_bloch(v: BlochVector) -> Self {
        let theta = v.z.clamp(-1.0, 1.0).acos();
        let phi = v.y.atan2(v.x);
        canonicalize_angles(theta, phi)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6})", self.theta, self.phi)
    }
}

/// Electron state `(sqrt(rho) e^{-i tau}, sqrt(1 - rho))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpinState {
    rho: f64,
    tau: f64,
}

impl SpinState {
    /// Validates `rho` and reduces `tau` into `[0, 2 pi)`. When the amplitude
    /// carrying the phase vanishes (`rho` of 0 or 1) the phase is set to 0.
    pub fn new(rho: f64, tau: f64) -> Result<Self> {
        if !rho.is_finite() || !tau.is_finite() {
            return Err(Error::Domain(format!(
                "state parameters must be finite (rho={rho}, tau={tau})"
            )));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Domain(format!("rho must lie in [0, 1], got {rho}")));
        }
        let tau = if rho == 0.0 || rho == 1.0 {
            0.0
        } else {
            wrap_two_pi(tau)
        };
        Ok(SpinState { rho, tau })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn amplitudes(&self) -> ComplexPair {
        ComplexPair([
            Complex64::from_polar(self.rho.sqrt(), -self.tau),
            Complex64::new((1.0 - self.rho).sqrt(), 0.0),
        ])
    }
}

impl fmt::Display for SpinState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(rho={:.6}, tau={:.6})", self.rho, self.tau)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, o: &BlochVector) -> BlochVector {
        BlochVector::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, k: f64) -> BlochVector {
        BlochVector::new(k * self.x, k * self.y, k * self.z)
    }

    pub fn add(&self, o: &BlochVector) -> BlochVector {
        BlochVector::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(&self, o: &BlochVector) -> BlochVector {
        BlochVector::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn neg(&self) -> BlochVector {
        self.scale(-1.0)
    }

    pub fn normalized(&self) -> BlochVector {
        self.scale(1.0 / self.norm())
    }

    /// Angle between the lines spanned by `self` and `other`, in `[0, pi/2]`.
    pub fn line_angle(&self, other: &BlochVector) -> f64 {
        let c = self.dot(other).abs();
        let s = self.cross(other).norm();
        s.atan2(c)
    }
}

/// A pair of complex amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexPair(pub [Complex64; 2]);

impl ComplexPair {
    /// `<self|other>`, conjugating `self`.
    pub fn inner(&self, other: &ComplexPair) -> Complex64 {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }
}

/// A 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HermitianMatrix2(pub [[Complex64; 2]; 2]);

impl HermitianMatrix2 {
    pub fn apply(&self, v: &ComplexPair) -> ComplexPair {
        let m = &self.0;
        ComplexPair([
            m[0][0] * v.0[0] + m[0][1] * v.0[1],
            m[1][0] * v.0[0] + m[1][1] * v.0[1],
        ])
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn determinant(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.0;
        (0..2).all(|r| (0..2).all(|c| (m[r][c] - m[c][r].conj()).norm() <= tol))
    }
}

fn wrap_two_pi(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can return exactly TAU for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

fn canonicalize_angles(theta_raw: f64, phi_raw: f64) -> Axis {
    let mut theta = wrap_two_pi(theta_raw);
    let mut phi = wrap_two_pi(phi_raw);
    // (theta, phi) and (2 pi - theta, phi + pi) are the same point with the
    // same eigenvectors.
    if theta > PI {
        theta = TAU - theta;
        phi = wrap_two_pi(phi + PI);
    }
    if theta == 0.0 {
        return Axis {
            theta: 0.0,
            phi: 0.0,
            labels_swapped: false,
        };
    }
    if theta == PI {
        return Axis {
            theta: 0.0,
            phi: 0.0,
            labels_swapped: true,
        };
    }
    if phi < PI {
        Axis {
            theta,
            phi,
            labels_swapped: false,
        }
    } else {
        Axis {
            theta: PI - theta,
            phi: phi - PI,
            labels_swapped: true,
        }
    }
}

/// Maps raw spherical angles onto the chart `[0, pi) x [0, pi)`.
pub fn canonicalize_axis(theta_raw: f64, phi_raw: f64) -> Result<Axis> {
    if !theta_raw.is_finite() || !phi_raw.is_finite() {
        return Err(Error::Domain(format!(
            "axis angles must be finite (theta={theta_raw}, phi={phi_raw})"
        )));
    }
    Ok(canonicalize_angles(theta_raw, phi_raw))
}

pub fn axis_to_bloch(a: &Axis) -> BlochVector {
    raw_bloch(a.theta, a.phi)
}

/// Unit vector for raw (not necessarily canonical) spherical angles.
pub fn raw_bloch(theta: f64, phi: f64) -> BlochVector {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    BlochVector::new(st * cp, st * sp, ct)
}

/// Eigenvectors of `sigma(theta, phi)` for eigenvalues +1 (up) and -1 (down).
pub fn eigenvectors(a: &Axis) -> (ComplexPair, ComplexPair) {
    raw_eigenvectors(a.theta, a.phi)
}

pub fn raw_eigenvectors(theta: f64, phi: f64) -> (ComplexPair, ComplexPair) {
    let (s, c) = (theta / 2.0).sin_cos();
    let phase = Complex64::from_polar(1.0, -phi);
    let up = ComplexPair([phase * c, Complex64::new(s, 0.0)]);
    let down = ComplexPair([-phase * s, Complex64::new(c, 0.0)]);
    (up, down)
}

/// The spin projection operator `sigma(theta, phi)`.
pub fn spin_operator(a: &Axis) -> HermitianMatrix2 {
    let (st, ct) = a.theta.sin_cos();
    HermitianMatrix2([
        [
            Complex64::new(ct, 0.0),
            Complex64::from_polar(st, -a.phi),
        ],
        [
            Complex64::from_polar(st, a.phi),
            Complex64::new(-ct, 0.0),
        ],
    ])
}

/// Bloch vector `m` of a state, so that `|<up_n|psi>|^2 = (1 + n.m) / 2`.
pub fn state_to_bloch(s: &SpinState) -> BlochVector {
    let r = 2.0 * (s.rho * (1.0 - s.rho)).sqrt();
    let (st, ct) = s.tau.sin_cos();
    BlochVector::new(r * ct, r * st, 2.0 * s.rho - 1.0)
}

/// `|<up_a|psi>|^2`, the probability of the up outcome along `a`.
pub fn up_overlap_prob(a: &Axis, s: &SpinState) -> f64 {
    raw_up_overlap_prob(a.theta, a.phi, s)
}

pub fn raw_up_overlap_prob(theta: f64, phi: f64, s: &SpinState) -> f64 {
    let half = theta / 2.0;
    let c2 = half.cos().powi(2);
    let s2 = half.sin().powi(2);
    let p = s.rho * c2
        + (1.0 - s.rho) * s2
        + (s.rho * (1.0 - s.rho)).sqrt() * theta.sin() * (phi - s.tau).cos();
    p.clamp(0.0, 1.0)
}

/// `|<up_f|up_i>|^2` between the up eigenvectors of two axes.
pub fn axes_up_overlap(f: &Axis, i: &Axis) -> f64 {
    let (up_f, _) = eigenvectors(f);
    let (up_i, _) = eigenvectors(i);
    up_f.inner(&up_i).norm_sqr().clamp(0.0, 1.0)
}

/// The eigenstate of `a` selected by `outcome`, in canonical phase.
pub fn eigenstate_as_state(a: &Axis, outcome: Outcome) -> SpinState {
    let half = a.theta / 2.0;
    let (rho, tau) = match outcome {
        Outcome::Up => (half.cos().powi(2), a.phi),
        Outcome::Down => (half.sin().powi(2), a.phi + PI),
    };
    // At the poles cos^2 and sin^2 round to exactly 1 and 0.
    SpinState::new(rho, tau).expect("eigenstate parameters are in range")
}
