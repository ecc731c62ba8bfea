//! Two-level quantum mechanics: spinors, Pauli algebra and Bloch vectors.
//!
//! All state comparisons go through Bloch vectors or `|⟨φ|ψ⟩|`; global
//! phases are never compared.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::tolerance;
use crate::{Error, Result};

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Unit direction on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UnitAxis {
    x: f64,
    y: f64,
    z: f64,
}

impl UnitAxis {
    pub const X: UnitAxis = UnitAxis { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: UnitAxis = UnitAxis { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: UnitAxis = UnitAxis { x: 0.0, y: 0.0, z: 1.0 };

    /// Accepts components whose norm is 1 within [`tolerance::UNIT_NORM`].
    /// Components are stored as given.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > tolerance::UNIT_NORM {
            return Err(Error::NonUnitAxis { x, y, z, norm });
        }
        Ok(UnitAxis { x, y, z })
    }

    /// Rescales an arbitrary nonzero vector onto the sphere.
    pub fn normalized(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm = (x * x + y * y + z * z).sqrt();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::NonUnitAxis { x, y, z, norm });
        }
        Ok(UnitAxis { x: x / norm, y: y / norm, z: z / norm })
    }

    /// `(cos φ sin θ, sin φ sin θ, cos θ)`, θ measured from +z.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        UnitAxis { x: cp * st, y: sp * st, z: ct }
    }

    /// Polar and azimuthal angles `(θ, φ)` with φ in `(-π, π]`.
    pub fn angles(&self) -> (f64, f64) {
        (self.z.clamp(-1.0, 1.0).acos(), self.y.atan2(self.x))
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(&self, other: &UnitAxis) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn dot_bloch(&self, r: &BlochVector) -> f64 {
        self.x * r.x + self.y * r.y + self.z * r.z
    }

    /// Cross product; generally not unit, so returned as a plain array.
    pub fn cross(&self, other: &UnitAxis) -> [f64; 3] {
        [
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        ]
    }

    /// Angle to `other` in `[0, π]` via clamped arccos.
    pub fn angle_to(&self, other: &UnitAxis) -> f64 {
        self.dot(other).clamp(-1.0, 1.0).acos()
    }
}

impl Neg for UnitAxis {
    type Output = UnitAxis;

    fn neg(self) -> UnitAxis {
        UnitAxis { x: -self.x, y: -self.y, z: -self.z }
    }
}

impl fmt::Display for UnitAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// Real 3-vector `r` of a density matrix `½(1 + r·σ)`; `|r| ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let r = BlochVector { x, y, z };
        let norm = r.norm();
        if !norm.is_finite() || norm > 1.0 + tolerance::UNIT_NORM {
            return Err(Error::NonPhysicalBloch { norm });
        }
        Ok(r)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Direction of a pure-state vector.
    pub fn to_axis(&self) -> Result<UnitAxis> {
        UnitAxis::new(self.x, self.y, self.z)
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }
}

impl From<UnitAxis> for BlochVector {
    fn from(n: UnitAxis) -> Self {
        BlochVector { x: n.x, y: n.y, z: n.z }
    }
}

/// Unnormalized two-component vector in the z basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spinor(pub [C64; 2]);

impl Spinor {
    pub fn norm_sqr(&self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Spinor) -> C64 {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    pub fn scale(&self, s: C64) -> Spinor {
        Spinor([self.0[0] * s, self.0[1] * s])
    }

    /// Expectation of each Pauli matrix divided by `⟨v|v⟩`.
    fn bloch_components(&self) -> [f64; 3] {
        let [a, b] = self.0;
        let n2 = self.norm_sqr();
        let ab = a.conj() * b;
        [2.0 * ab.re / n2, 2.0 * ab.im / n2, (a.norm_sqr() - b.norm_sqr()) / n2]
    }
}

impl Add for Spinor {
    type Output = Spinor;

    fn add(self, rhs: Spinor) -> Spinor {
        Spinor([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1]])
    }
}

/// Normalized pure spin-1/2 state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinState {
    amps: Spinor,
}

impl Serialize for SpinState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let [p, m] = self.amps.0;
        let mut st = s.serialize_struct("SpinState", 2)?;
        st.serialize_field("amplitudes", &[[p.re, p.im], [m.re, m.im]])?;
        st.serialize_field("bloch", &self.bloch())?;
        st.end()
    }
}

impl SpinState {
    /// Amplitudes `(c₊, c₋)` in the z basis; must satisfy
    /// `|c₊|² + |c₋|² = 1` within [`tolerance::ALGEBRAIC`].
    pub fn new(plus: C64, minus: C64) -> Result<Self> {
        let amps = Spinor([plus, minus]);
        let norm_sqr = amps.norm_sqr();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > tolerance::ALGEBRAIC {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(SpinState { amps })
    }

    /// Normalizes `v`, returning the state together with `‖v‖`.
    /// `None` for a (numerically) zero vector.
    pub fn from_spinor(v: &Spinor) -> Option<(SpinState, f64)> {
        let norm = v.norm();
        if norm.is_nan() || norm <= tolerance::PROBABILITY_FLOOR.sqrt() {
            return None;
        }
        let amps = v.scale(C64::new(1.0 / norm, 0.0));
        Some((SpinState { amps }, norm))
    }

    /// `cos(θ/2)|+z⟩ + e^{iφ} sin(θ/2)|−z⟩`.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        SpinState { amps: Spinor([C64::new(c, 0.0), C64::from_polar(s, phi)]) }
    }

    /// Eigenstate `|+n⟩` of `n·σ` with eigenvalue +1.
    pub fn eigenstate(n: &UnitAxis) -> Self {
        let (theta, phi) = n.angles();
        Self::from_angles(theta, phi)
    }

    pub fn plus_z() -> Self {
        SpinState { amps: Spinor([ONE, ZERO]) }
    }

    pub fn minus_z() -> Self {
        SpinState { amps: Spinor([ZERO, ONE]) }
    }

    pub fn plus_x() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        SpinState { amps: Spinor([C64::new(h, 0.0), C64::new(h, 0.0)]) }
    }

    pub fn amplitudes(&self) -> [C64; 2] {
        self.amps.0
    }

    pub fn spinor(&self) -> &Spinor {
        &self.amps
    }

    /// Column vector for the general-dimension engine.
    pub fn ket(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.amps.0)
    }

    /// `r_i = ⟨ψ|σ_i|ψ⟩`.
    pub fn bloch(&self) -> BlochVector {
        let [x, y, z] = self.amps.bloch_components();
        BlochVector { x, y, z }
    }

    /// Bloch direction as a unit axis.
    pub fn axis(&self) -> UnitAxis {
        let [x, y, z] = self.amps.bloch_components();
        UnitAxis { x, y, z }
    }

    pub fn overlap(&self, other: &SpinState) -> C64 {
        self.amps.inner(&other.amps)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> Operator2 {
        let [a, b] = self.amps.0;
        Operator2([[a * a.conj(), a * b.conj()], [b * a.conj(), b * b.conj()]])
    }

    /// Same ray as `other` (global phase ignored).
    pub fn same_ray(&self, other: &SpinState, tol: f64) -> bool {
        (self.overlap(other).norm() - 1.0).abs() <= tol
    }
}

/// `bloch_from_state`: Bloch vector of a pure state.
pub fn bloch_from_state(psi: &SpinState) -> BlochVector {
    psi.bloch()
}

/// 2×2 complex matrix, row major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Operator2(pub [[C64; 2]; 2]);

impl Operator2 {
    pub fn identity() -> Self {
        Operator2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn zero() -> Self {
        Operator2([[ZERO; 2]; 2])
    }

    pub fn pauli_x() -> Self {
        Operator2([[ZERO, ONE], [ONE, ZERO]])
    }

    pub fn pauli_y() -> Self {
        Operator2([[ZERO, -I], [I, ZERO]])
    }

    pub fn pauli_z() -> Self {
        Operator2([[ONE, ZERO], [ZERO, -ONE]])
    }

    /// `c₀·1 + c·σ` with real coefficients.
    pub fn from_pauli(c0: f64, c: [f64; 3]) -> Self {
        let [x, y, z] = c;
        Operator2([
            [C64::new(c0 + z, 0.0), C64::new(x, -y)],
            [C64::new(x, y), C64::new(c0 - z, 0.0)],
        ])
    }

    /// `n·σ`.
    pub fn spin(n: &UnitAxis) -> Self {
        Self::from_pauli(0.0, n.to_array())
    }

    /// Decomposition `X = c₀·1 + c·σ` with complex coefficients.
    pub fn pauli_coefficients(&self) -> (C64, [C64; 3]) {
        let [[a, b], [c, d]] = self.0;
        let half = 0.5;
        (
            (a + d) * half,
            [(b + c) * half, I * (b - c) * half, (a - d) * half],
        )
    }

    pub fn adjoint(&self) -> Self {
        let [[a, b], [c, d]] = self.0;
        Operator2([[a.conj(), c.conj()], [b.conj(), d.conj()]])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: f64) -> Self {
        let m = self.0;
        Operator2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn apply(&self, v: &Spinor) -> Spinor {
        let [[a, b], [c, d]] = self.0;
        let [p, q] = v.0;
        Spinor([a * p + b * q, c * p + d * q])
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Operator2) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn unitarity_deviation(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Operator2::identity())
    }

    /// Eigenvalues `(λ_min, λ_max)` of a Hermitian matrix.
    pub fn hermitian_eigenvalues(&self) -> (f64, f64) {
        let (c0, c) = self.pauli_coefficients();
        let r = (c[0].re * c[0].re + c[1].re * c[1].re + c[2].re * c[2].re).sqrt();
        (c0.re - r, c0.re + r)
    }

    /// Operator norm of a Hermitian matrix: largest |eigenvalue|.
    pub fn hermitian_norm(&self) -> f64 {
        let (lo, hi) = self.hermitian_eigenvalues();
        lo.abs().max(hi.abs())
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(2, 2, |i, j| self.0[i][j])
    }

    pub fn from_dmatrix(m: &DMatrix<C64>) -> Result<Self> {
        if m.nrows() != 2 || m.ncols() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: m.nrows() });
        }
        Ok(Operator2([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]))
    }
}

impl Mul for Operator2 {
    type Output = Operator2;

    fn mul(self, rhs: Operator2) -> Operator2 {
        let a = self.0;
        let b = rhs.0;
        let mut out = [[ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Operator2(out)
    }
}

impl Add for Operator2 {
    type Output = Operator2;

    fn add(self, rhs: Operator2) -> Operator2 {
        let (a, b) = (self.0, rhs.0);
        Operator2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Operator2 {
    type Output = Operator2;

    fn sub(self, rhs: Operator2) -> Operator2 {
        self + rhs.scale(-1.0)
    }
}

/// `ρ = ½(1 + r·σ)`.
pub fn state_from_bloch(r: &BlochVector) -> Result<Operator2> {
    let r = BlochVector::new(r.x, r.y, r.z)?;
    Ok(Operator2::from_pauli(0.5, [0.5 * r.x, 0.5 * r.y, 0.5 * r.z]))
}

/// Observable `n·σ` with its spectral decomposition.
#[derive(Clone, Copy, Debug)]
pub struct SpinOperator {
    pub axis: UnitAxis,
    pub observable: Operator2,
    pub projector_plus: Operator2,
    pub projector_minus: Operator2,
    pub eigenstate_plus: SpinState,
    pub eigenstate_minus: SpinState,
}

pub fn spin_operator(n: &UnitAxis) -> Result<SpinOperator> {
    let n = UnitAxis::new(n.x, n.y, n.z)?;
    let half = n.to_array().map(|c| 0.5 * c);
    Ok(SpinOperator {
        axis: n,
        observable: Operator2::spin(&n),
        projector_plus: Operator2::from_pauli(0.5, half),
        projector_minus: Operator2::from_pauli(0.5, half.map(|c| -c)),
        eigenstate_plus: SpinState::eigenstate(&n),
        eigenstate_minus: SpinState::eigenstate(&-n),
    })
}

/// `⟨ψ|X|ψ⟩` for Hermitian `X`, evaluated through the Pauli decomposition
/// of `X` and the Bloch vector of `ψ`.
pub fn expectation(x: &Operator2, psi: &SpinState) -> Result<f64> {
    let deviation = x.hermiticity_deviation();
    if deviation > tolerance::HERMITIAN {
        return Err(Error::NotHermitian { deviation });
    }
    let (c0, c) = x.pauli_coefficients();
    let r = psi.bloch();
    let value = c0 + c[0] * r.x + c[1] * r.y + c[2] * r.z;
    if value.im.abs() > tolerance::HERMITIAN {
        return Err(Error::NotHermitian { deviation: value.im.abs() });
    }
    Ok(value.re)
}

/// `U_R = e^{iα n·σ} = cos α·1 + i sin α·n·σ`.
pub fn rotation_operator(n: &UnitAxis, alpha: f64) -> Operator2 {
    let (s, c) = alpha.sin_cos();
    let [x, y, z] = n.to_array();
    // i sin α (n·σ) entries
    Operator2([
        [C64::new(c, s * z), C64::new(s * y, s * x)],
        [C64::new(-s * y, s * x), C64::new(c, -s * z)],
    ])
}

/// Larmor precession `U_R|ψ⟩`: the Bloch vector turns by `2α` about `−n`.
pub fn rotate(n: &UnitAxis, alpha: f64, psi: &SpinState) -> SpinState {
    let v = rotation_operator(n, alpha).apply(psi.spinor());
    // U is unitary; renormalize to keep accumulated rounding out of chains
    SpinState::from_spinor(&v).expect("unitary image of a unit vector").0
}
