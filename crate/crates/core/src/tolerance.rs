//! Numerical tolerances shared across the crate.

/// Algebraic identities between closed forms evaluated in f64.
pub const ALGEBRAIC: f64 = 1e-12;

/// Unit-norm inputs (axes, pure-state Bloch vectors).
pub const UNIT_NORM: f64 = 1e-9;

/// Completeness and unitarity of d_S·d_P dimensional products.
pub const COMPLETENESS: f64 = 1e-10;

/// Hermiticity check on expectation values (imaginary part).
pub const HERMITIAN: f64 = 1e-10;

/// Squared rms quantities below `-NEGATIVE_RADICAND` are inconsistent input.
pub const NEGATIVE_RADICAND: f64 = 1e-10;

/// Branch probabilities below this have no post-measurement state.
pub const PROBABILITY_FLOOR: f64 = 1e-14;

/// Slack used when flagging whether an inequality holds.
pub const RELATION: f64 = 1e-9;

/// Radicands within this many ulps of the summed term magnitude are
/// indistinguishable from zero.
pub const RADICAND_ULPS: f64 = 16.0;

/// Square root of a quantity that is analytically a sum of squares.
///
/// `scale` is the sum of absolute values of the terms that produced
/// `value`; anything within the rounding floor of that scale maps to 0.
pub(crate) fn rms_sqrt(
    quantity: &'static str,
    value: f64,
    scale: f64,
) -> crate::Result<f64> {
    if value < -NEGATIVE_RADICAND || value.is_nan() {
        return Err(crate::Error::NegativeRadicand { quantity, value });
    }
    let floor = RADICAND_ULPS * f64::EPSILON * scale.abs().max(1.0);
    if value <= floor {
        Ok(0.0)
    } else {
        Ok(value.sqrt())
    }
}
