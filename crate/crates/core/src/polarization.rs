//! Jones calculus for the polarization optics around the gate.
//!
//! Angles follow the optics convention: counterclockwise positive when looking
//! into the beam. Retarders advance the fast-axis phase, so a half-wave plate at
//! zero is `diag(1, -1)` and a quarter-wave plate at zero is `diag(1, i)`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::ops::Mul;

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    H,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retarder {
    Half,
    Quarter,
}

impl Retarder {
    pub fn retardance(self) -> f64 {
        match self {
            Retarder::Half => PI,
            Retarder::Quarter => FRAC_PI_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbsPort {
    Transmit,
    Reflect,
}

/// Complex amplitudes on `|H⟩` and `|V⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector(pub Vector2<Complex64>);

impl JonesVector {
    pub fn new(h: Complex64, v: Complex64) -> Self {
        JonesVector(Vector2::new(h, v))
    }

    pub fn horizontal() -> Self {
        JonesVector::new(ONE, ZERO)
    }

    pub fn vertical() -> Self {
        JonesVector::new(ZERO, ONE)
    }

    /// `(|H⟩ + |V⟩)/√2`
    pub fn diagonal() -> Self {
        JonesVector::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0))
    }

    /// `(|H⟩ - |V⟩)/√2`
    pub fn antidiagonal() -> Self {
        JonesVector::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(-FRAC_1_SQRT_2, 0.0))
    }

    /// `(|H⟩ + i|V⟩)/√2`
    pub fn right() -> Self {
        JonesVector::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, FRAC_1_SQRT_2))
    }

    /// `(|H⟩ - i|V⟩)/√2`
    pub fn left() -> Self {
        JonesVector::new(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(0.0, -FRAC_1_SQRT_2))
    }

    pub fn h(&self) -> Complex64 {
        self.0[0]
    }

    pub fn v(&self) -> Complex64 {
        self.0[1]
    }

    pub fn component(&self, axis: Axis) -> Complex64 {
        match axis {
            Axis::H => self.h(),
            Axis::V => self.v(),
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn inner(&self, other: &JonesVector) -> Complex64 {
        self.0.dotc(&other.0)
    }

    /// `|⟨self|other⟩|²` normalized by both norms; 1 means equal up to global phase.
    pub fn overlap(&self, other: &JonesVector) -> f64 {
        self.inner(other).norm_sqr() / (self.norm_squared() * other.norm_squared())
    }
}

/// 2×2 Jones matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesOperator(pub Matrix2<Complex64>);

impl JonesOperator {
    pub fn identity() -> Self {
        JonesOperator(Matrix2::identity())
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn apply(&self, state: &JonesVector) -> JonesVector {
        JonesVector(self.0 * state.0)
    }

    pub fn adjoint(&self) -> JonesOperator {
        JonesOperator(self.0.adjoint())
    }

    /// Largest deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        (self.0.adjoint() * self.0 - Matrix2::identity())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

impl Mul for JonesOperator {
    type Output = JonesOperator;

    fn mul(self, rhs: JonesOperator) -> JonesOperator {
        JonesOperator(self.0 * rhs.0)
    }
}

impl Mul<JonesVector> for JonesOperator {
    type Output = JonesVector;

    fn mul(self, rhs: JonesVector) -> JonesVector {
        self.apply(&rhs)
    }
}

/// Coordinate rotation of the field by `angle`; maps `|H⟩` to `cos|H⟩ + sin|V⟩`.
pub fn rotator(angle: f64) -> JonesOperator {
    let (s, c) = angle.sin_cos();
    JonesOperator(Matrix2::new(
        Complex64::new(c, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(c, 0.0),
    ))
}

/// Linear retarder with fast axis at `angle`.
pub fn waveplate(kind: Retarder, angle: f64) -> JonesOperator {
    let retard = JonesOperator(Matrix2::new(
        ONE,
        ZERO,
        ZERO,
        Complex64::from_polar(1.0, kind.retardance()),
    ));
    rotator(angle) * retard * rotator(-angle)
}

/// One output port of a polarizing beamsplitter whose extinction ratio is
/// `extinction_db`; `f64::INFINITY` is an ideal splitter.
pub fn pbs_port(port: PbsPort, extinction_db: f64) -> Result<JonesOperator> {
    let leak = leak_amplitude(extinction_db)?;
    let (h, v) = match port {
        PbsPort::Transmit => (1.0, leak),
        PbsPort::Reflect => (leak, 1.0),
    };
    Ok(JonesOperator(Matrix2::new(
        Complex64::new(h, 0.0),
        ZERO,
        ZERO,
        Complex64::new(v, 0.0),
    )))
}

/// Field amplitude that leaks through a port with the given extinction.
pub fn leak_amplitude(extinction_db: f64) -> Result<f64> {
    if extinction_db.is_nan() || extinction_db < 0.0 {
        return Err(Error::domain(format!(
            "extinction ratio must be >= 0 dB, got {extinction_db}"
        )));
    }
    Ok(10f64.powf(-extinction_db / 20.0))
}

/// Polarization-dependent loss: power transmission `transmission` on
/// `attenuated`, lossless on the orthogonal axis.
pub fn pdle(attenuated: Axis, transmission: f64) -> Result<JonesOperator> {
    if !(0.0..=1.0).contains(&transmission) {
        return Err(Error::domain(format!(
            "PDLE transmission must lie in [0, 1], got {transmission}"
        )));
    }
    let amp = Complex64::new(transmission.sqrt(), 0.0);
    let (h, v) = match attenuated {
        Axis::H => (amp, ONE),
        Axis::V => (ONE, amp),
    };
    Ok(JonesOperator(Matrix2::new(h, ZERO, ZERO, v)))
}
