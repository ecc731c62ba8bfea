//! Three-state reconstruction of rms error and disturbance.
//!
//! Error and disturbance are recovered from expectation values of the
//! apparatus output `O` in three input states: `ψ`, `Xψ/‖Xψ‖` and
//! `(X+1)ψ/‖(X+1)ψ‖`. The estimators take only scalars: neither the
//! direction of `O_A` nor the noise operator is ever read.

use serde::Serialize;

use crate::qmcore::{Operator2, SpinState};
use crate::tolerance::rms_sqrt;
use crate::Result;

/// `ψ` together with its two auxiliary states for observable `X`.
#[derive(Clone, Copy, Debug)]
pub struct ThreeStateSet {
    pub base: SpinState,
    /// `Xψ/‖Xψ‖`; `None` if `Xψ = 0`.
    pub transformed: Option<SpinState>,
    /// `(X+1)ψ/‖(X+1)ψ‖`; `None` if `(X+1)ψ = 0`.
    pub shifted: Option<SpinState>,
    pub norms: AuxNorms,
    /// `‖Xψ‖²/‖X‖²`
    pub success_probability: f64,
    /// `‖(X+1)ψ‖²/‖X+1‖²`
    pub shifted_success_probability: f64,
}

/// `‖Xψ‖` and `‖(X+1)ψ‖`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AuxNorms {
    pub transformed: f64,
    pub shifted: f64,
}

/// Expectations of `O` in the normalized states `ψ`, `Xψ/‖Xψ‖`,
/// `(X+1)ψ/‖(X+1)ψ‖`. Terms for absent states are ignored.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Expectations {
    pub base: f64,
    pub transformed: f64,
    pub shifted: f64,
}

pub fn auxiliary_states(x: &Operator2, psi: &SpinState) -> ThreeStateSet {
    let xv = x.apply(psi.spinor());
    let sv = xv + *psi.spinor();
    let (transformed, t_norm) = split(SpinState::from_spinor(&xv));
    let (shifted, s_norm) = split(SpinState::from_spinor(&sv));
    let op_norm = x.hermitian_norm();
    let shifted_norm = (*x + Operator2::identity()).hermitian_norm();
    ThreeStateSet {
        base: *psi,
        transformed,
        shifted,
        norms: AuxNorms { transformed: t_norm, shifted: s_norm },
        success_probability: ratio(t_norm, op_norm),
        shifted_success_probability: ratio(s_norm, shifted_norm),
    }
}

fn split(v: Option<(SpinState, f64)>) -> (Option<SpinState>, f64) {
    match v {
        Some((s, n)) => (Some(s), n),
        None => (None, 0.0),
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        ((num * num) / (den * den)).min(1.0)
    } else {
        0.0
    }
}

/// General form with the two square terms supplied explicitly:
/// `r² = ⟨X²⟩ + ⟨O⁽²⁾⟩ + ⟨O⟩_ψ + ‖Xψ‖²⟨O⟩_Xψ − ‖(X+1)ψ‖²⟨O⟩_(X+1)ψ`.
pub fn estimate_general(
    square_terms: f64,
    e: &Expectations,
    norms: &AuxNorms,
    quantity: &'static str,
) -> Result<f64> {
    let t2 = norms.transformed * norms.transformed;
    let s2 = norms.shifted * norms.shifted;
    let terms = [
        square_terms,
        e.base,
        if t2 > 0.0 { t2 * e.transformed } else { 0.0 },
        if s2 > 0.0 { -s2 * e.shifted } else { 0.0 },
    ];
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    rms_sqrt(quantity, terms.iter().sum(), scale)
}

/// Spin form: `ε² = 2 + ⟨O_A⟩_ψ + ‖Aψ‖²⟨O_A⟩_Aψ − ‖(A+1)ψ‖²⟨O_A⟩_(A+1)ψ`.
pub fn estimate_error(e: &Expectations, norms: &AuxNorms) -> Result<f64> {
    estimate_general(2.0, e, norms, "rms error")
}

/// Spin form with `O_B` and the auxiliary states of `B`.
pub fn estimate_disturbance(e: &Expectations, norms: &AuxNorms) -> Result<f64> {
    estimate_general(2.0, e, norms, "rms disturbance")
}

/// Exact expectations of `O` in the three states of `set`.
pub fn exact_expectations(o: &Operator2, set: &ThreeStateSet) -> Result<Expectations> {
    let ev = |s: &Option<SpinState>| s.map_or(Ok(0.0), |s| crate::qmcore::expectation(o, &s));
    Ok(Expectations {
        base: crate::qmcore::expectation(o, &set.base)?,
        transformed: ev(&set.transformed)?,
        shifted: ev(&set.shifted)?,
    })
}

/// Three-state `(ε, η)` for a projective spin apparatus, fed with exact
/// expectations of `O_A = o_a·σ` and `O_B = (b·o_a) o_a·σ`.
pub fn exact_spin_estimates(cfg: &crate::spin::SpinConfig) -> Result<(f64, f64)> {
    let sa = auxiliary_states(&Operator2::spin(&cfg.a), &cfg.psi);
    let sb = auxiliary_states(&Operator2::spin(&cfg.b), &cfg.psi);
    let ea = exact_expectations(&crate::spin::output_operator(&cfg.o_a), &sa)?;
    let eb = exact_expectations(&crate::spin::modified_observable(&cfg.b, &cfg.o_a), &sb)?;
    Ok((estimate_error(&ea, &sa.norms)?, estimate_disturbance(&eb, &sb.norms)?))
}
