//! Closed forms for projective spin-1/2 apparatuses.
//!
//! With `A = a·σ`, `B = b·σ`, state Bloch vector `r` and an apparatus that
//! projectively measures `O_A = o_a·σ`, every quantity in the relations is
//! a function of dot and triple products of these four vectors.

use serde::Serialize;

use crate::povm::{MeasurementModel, UncertaintyReport};
use crate::qmcore::{BlochVector, Operator2, SpinState, UnitAxis};
use crate::tolerance::rms_sqrt;
use crate::Result;

/// `ε = √(2 − 2 a·o_a) = 2|sin(α/2)|`.
pub fn error_exact(a: &UnitAxis, o_a: &UnitAxis) -> f64 {
    let d = a.dot(o_a).clamp(-1.0, 1.0);
    rms_sqrt("rms error", 2.0 - 2.0 * d, 4.0).expect("clamped dot product")
}

/// `η = √(2 − 2(b·o_a)²) = √2|sin β|`.
pub fn disturbance_exact(b: &UnitAxis, o_a: &UnitAxis) -> f64 {
    let d = b.dot(o_a).clamp(-1.0, 1.0);
    rms_sqrt("rms disturbance", 2.0 - 2.0 * d * d, 4.0).expect("clamped dot product")
}

/// `2|sin(α/2)|` from the enclosed angle.
pub fn error_from_angle(alpha: f64) -> f64 {
    2.0 * (alpha / 2.0).sin().abs()
}

/// `√2|sin β|` from the enclosed angle.
pub fn disturbance_from_angle(beta: f64) -> f64 {
    std::f64::consts::SQRT_2 * beta.sin().abs()
}

/// `σ = √(1 − (n·r)²)`.
pub fn std_dev(axis: &UnitAxis, r: &BlochVector) -> f64 {
    let d = axis.dot_bloch(r).clamp(-1.0, 1.0);
    rms_sqrt("standard deviation", 1.0 - d * d, 2.0).expect("clamped dot product")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bounds {
    /// `|r·(a×b)|`
    pub commutator_bound: f64,
    /// `a·b − (a·r)(b·r)`
    pub schroedinger_extra: f64,
    pub schroedinger_bound: f64,
}

pub fn bounds(a: &UnitAxis, b: &UnitAxis, r: &BlochVector) -> Bounds {
    let [cx, cy, cz] = a.cross(b);
    let commutator_bound = (r.x * cx + r.y * cy + r.z * cz).abs();
    let schroedinger_extra = a.dot(b) - a.dot_bloch(r) * b.dot_bloch(r);
    Bounds {
        commutator_bound,
        schroedinger_extra,
        schroedinger_bound: schroedinger_extra.hypot(commutator_bound),
    }
}

/// Two-outcome projective model `M_{±1} = ½(1 ± o_a·σ)`.
pub fn projective_apparatus(o_a: &UnitAxis) -> Result<MeasurementModel> {
    let o = o_a.to_array();
    let plus = Operator2::from_pauli(0.5, [0.5 * o[0], 0.5 * o[1], 0.5 * o[2]]);
    let minus = Operator2::from_pauli(0.5, [-0.5 * o[0], -0.5 * o[1], -0.5 * o[2]]);
    MeasurementModel::new(vec![(1.0, plus.to_dmatrix()), (-1.0, minus.to_dmatrix())])
}

/// Output operator `O_A = o_a·σ`.
pub fn output_operator(o_a: &UnitAxis) -> Operator2 {
    Operator2::spin(o_a)
}

/// Modified observable `O_B = Σ M_m† B M_m = (b·o_a) o_a·σ`.
pub fn modified_observable(b: &UnitAxis, o_a: &UnitAxis) -> Operator2 {
    Operator2::spin(o_a).scale(b.dot(o_a))
}

/// Observables, state and apparatus direction of one spin configuration.
#[derive(Clone, Copy, Debug)]
pub struct SpinConfig {
    pub a: UnitAxis,
    pub b: UnitAxis,
    pub psi: SpinState,
    pub o_a: UnitAxis,
}

impl SpinConfig {
    /// `A = σ_x`, `B = σ_y`, `ψ = |+z⟩`.
    pub fn standard(o_a: UnitAxis) -> Self {
        SpinConfig { a: UnitAxis::X, b: UnitAxis::Y, psi: SpinState::plus_z(), o_a }
    }

    pub fn r(&self) -> BlochVector {
        self.psi.bloch()
    }

    /// Full relation report from closed forms.
    pub fn report(&self) -> UncertaintyReport {
        let r = self.r();
        let bd = bounds(&self.a, &self.b, &r);
        UncertaintyReport::from_terms(
            error_exact(&self.a, &self.o_a),
            disturbance_exact(&self.b, &self.o_a),
            std_dev(&self.a, &r),
            std_dev(&self.b, &r),
            bd.commutator_bound,
            bd.schroedinger_extra,
        )
    }
}
