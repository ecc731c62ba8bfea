//! Finite-dimensional measurement models.
//!
//! A model is a family `{(m, M_m)}` of outcome labels and measurement
//! operators with `Σ M_m†M_m = 1`. Everything else here (moment operators,
//! rms error and disturbance, the non-selective operation) is derived from
//! that family alone.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::qmcore::C64;
use crate::tolerance::{self, rms_sqrt};
use crate::{Error, Result};

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub label: f64,
    pub operator: CMatrix,
}

#[derive(Clone, Debug)]
pub struct MeasurementModel {
    dim: usize,
    outcomes: Vec<Outcome>,
}

impl MeasurementModel {
    /// Validates square shapes, distinct labels and completeness within
    /// [`tolerance::COMPLETENESS`].
    pub fn new(outcomes: Vec<(f64, CMatrix)>) -> Result<Self> {
        let dim = outcomes
            .first()
            .map(|(_, m)| m.nrows())
            .ok_or_else(|| Error::InvalidParameter("measurement model has no outcomes".into()))?;
        let mut labels: Vec<f64> = Vec::with_capacity(outcomes.len());
        for (label, op) in &outcomes {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: op.nrows() });
            }
            if !label.is_finite() {
                return Err(Error::InvalidParameter(format!("outcome label {label}")));
            }
            if labels.iter().any(|l| l == label) {
                return Err(Error::DuplicateLabel(*label));
            }
            labels.push(*label);
        }
        let model = MeasurementModel {
            dim,
            outcomes: outcomes
                .into_iter()
                .map(|(label, operator)| Outcome { label, operator })
                .collect(),
        };
        let deviation = model.completeness_deviation();
        if deviation > tolerance::COMPLETENESS {
            return Err(Error::Incomplete { deviation });
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn labels(&self) -> Vec<f64> {
        self.outcomes.iter().map(|o| o.label).collect()
    }

    /// POVM elements `Π_m = M_m†M_m`.
    pub fn povm(&self) -> Vec<CMatrix> {
        self.outcomes.iter().map(|o| o.operator.adjoint() * &o.operator).collect()
    }

    pub fn completeness_deviation(&self) -> f64 {
        let sum = self
            .povm()
            .into_iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, p| acc + p);
        max_abs(&(sum - CMatrix::identity(self.dim, self.dim)))
    }

    /// All operators are Hermitian, idempotent and mutually orthogonal.
    pub fn is_projective(&self, tol: f64) -> bool {
        let ops: Vec<&CMatrix> = self.outcomes.iter().map(|o| &o.operator).collect();
        ops.iter().enumerate().all(|(i, p)| {
            max_abs(&(*p - p.adjoint())) <= tol
                && max_abs(&(*p * *p - *p)) <= tol
                && ops[i + 1..].iter().all(|q| max_abs(&(*p * *q)) <= tol)
        })
    }
}

/// Non-degenerate meter observable `M = Σ m|m⟩⟨m|`.
#[derive(Clone, Debug)]
pub struct Meter {
    eigenvalues: Vec<f64>,
    /// Eigenvectors as columns.
    eigenvectors: CMatrix,
}

impl Meter {
    pub fn new(eigenvalues: Vec<f64>, eigenvectors: CMatrix) -> Result<Self> {
        let d = eigenvalues.len();
        if eigenvectors.nrows() != d || eigenvectors.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: eigenvectors.ncols() });
        }
        for (i, m) in eigenvalues.iter().enumerate() {
            if eigenvalues[..i].iter().any(|l| (l - m).abs() <= tolerance::COMPLETENESS) {
                return Err(Error::DegenerateMeter(format!("eigenvalue {m} repeated")));
            }
        }
        let gram = eigenvectors.adjoint() * &eigenvectors;
        let deviation = max_abs(&(gram - CMatrix::identity(d, d)));
        if deviation > tolerance::COMPLETENESS {
            return Err(Error::DegenerateMeter(format!(
                "eigenvectors not orthonormal (deviation {deviation:e})"
            )));
        }
        Ok(Meter { eigenvalues, eigenvectors })
    }

    /// Computational basis with labels `0, 1, …, d−1`.
    pub fn computational(d: usize) -> Self {
        Meter {
            eigenvalues: (0..d).map(|m| m as f64).collect(),
            eigenvectors: CMatrix::identity(d, d),
        }
    }

    /// `σ_z` on a qubit probe: `|0⟩ ↦ +1`, `|1⟩ ↦ −1`.
    pub fn pauli_z() -> Self {
        Meter { eigenvalues: vec![1.0, -1.0], eigenvectors: CMatrix::identity(2, 2) }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvector(&self, i: usize) -> CVector {
        self.eigenvectors.column(i).into_owned()
    }

    pub fn observable(&self) -> CMatrix {
        let diag = CMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&m| C64::new(m, 0.0)),
        ));
        &self.eigenvectors * diag * self.eigenvectors.adjoint()
    }
}

/// Indirect measurement model: probe space, probe state `ξ`, interaction
/// `U` on system ⊗ probe and meter `M`. Composite index is
/// `system_index · d_P + probe_index`.
#[derive(Clone, Debug)]
pub struct IndirectModel {
    system_dim: usize,
    probe_state: CVector,
    interaction: CMatrix,
    meter: Meter,
}

impl IndirectModel {
    pub fn new(
        system_dim: usize,
        probe_state: CVector,
        interaction: CMatrix,
        meter: Meter,
    ) -> Result<Self> {
        let probe_dim = meter.dim();
        if probe_state.len() != probe_dim {
            return Err(Error::DimensionMismatch { expected: probe_dim, got: probe_state.len() });
        }
        let norm_sqr = probe_state.norm_squared();
        if (norm_sqr - 1.0).abs() > tolerance::COMPLETENESS {
            return Err(Error::NotNormalized { norm_sqr });
        }
        let n = system_dim * probe_dim;
        if interaction.nrows() != n || interaction.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: interaction.nrows() });
        }
        let deviation = max_abs(&(interaction.adjoint() * &interaction - CMatrix::identity(n, n)));
        if deviation > tolerance::COMPLETENESS {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(IndirectModel { system_dim, probe_state, interaction, meter })
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn probe_dim(&self) -> usize {
        self.meter.dim()
    }

    pub fn probe_state(&self) -> &CVector {
        &self.probe_state
    }

    pub fn interaction(&self) -> &CMatrix {
        &self.interaction
    }

    pub fn meter(&self) -> &Meter {
        &self.meter
    }
}

/// Measurement operators `M_m = ⟨m|U|ξ⟩`.
pub fn from_indirect(model: &IndirectModel) -> Result<MeasurementModel> {
    let ds = model.system_dim;
    let dp = model.probe_dim();
    let u = &model.interaction;
    let xi = &model.probe_state;
    let outcomes = (0..dp)
        .map(|idx| {
            let bra = model.meter.eigenvector(idx);
            let op = CMatrix::from_fn(ds, ds, |i, j| {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..dp {
                    for l in 0..dp {
                        acc += bra[k].conj() * u[(i * dp + k, j * dp + l)] * xi[l];
                    }
                }
                acc
            });
            (model.meter.eigenvalues[idx], op)
        })
        .collect();
    MeasurementModel::new(outcomes)
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub label: f64,
    pub probability: f64,
    /// `M_mψ/‖M_mψ‖`; absent when the branch probability is negligible.
    pub post_state: Option<CVector>,
}

/// Outcome probabilities `‖M_mψ‖²` and conditional post-measurement states.
pub fn apply(model: &MeasurementModel, psi: &CVector) -> Result<Vec<Branch>> {
    check_state(model.dim, psi)?;
    Ok(model
        .outcomes
        .iter()
        .map(|o| {
            let image = &o.operator * psi;
            let probability = image.norm_squared();
            let post_state = (probability >= tolerance::PROBABILITY_FLOOR)
                .then(|| image.unscale(probability.sqrt()));
            Branch { label: o.label, probability, post_state }
        })
        .collect())
}

/// `Tρ = Σ M_m ρ M_m†`.
pub fn nonselective(model: &MeasurementModel, rho: &CMatrix) -> Result<CMatrix> {
    check_density(model.dim, rho)?;
    Ok(model
        .outcomes
        .iter()
        .fold(CMatrix::zeros(model.dim, model.dim), |acc, o| {
            acc + &o.operator * rho * o.operator.adjoint()
        }))
}

/// `O_A^{(k)} = Σ m^k M_m†M_m`.
pub fn moment_output_operator(model: &MeasurementModel, k: u32) -> CMatrix {
    model
        .outcomes
        .iter()
        .fold(CMatrix::zeros(model.dim, model.dim), |acc, o| {
            acc + (o.operator.adjoint() * &o.operator).scale(o.label.powi(k as i32))
        })
}

/// `O_B^{(k)} = Σ M_m† B^k M_m`.
pub fn post_moment_operator(model: &MeasurementModel, b: &CMatrix, k: u32) -> Result<CMatrix> {
    check_hermitian(model.dim, b)?;
    let bk = matrix_power(b, k);
    Ok(model
        .outcomes
        .iter()
        .fold(CMatrix::zeros(model.dim, model.dim), |acc, o| {
            acc + o.operator.adjoint() * &bk * &o.operator
        }))
}

/// rms error from moment operators:
/// `ε² = ⟨ψ|O^{(2)} − O^{(1)}A − AO^{(1)} + A²|ψ⟩`.
pub fn rms_error(model: &MeasurementModel, a: &CMatrix, psi: &CVector) -> Result<f64> {
    check_hermitian(model.dim, a)?;
    check_state(model.dim, psi)?;
    let o1 = moment_output_operator(model, 1);
    let o2 = moment_output_operator(model, 2);
    moment_form("rms error", &o1, &o2, a, psi)
}

/// rms disturbance from post-measurement moment operators:
/// `η² = ⟨ψ|O_B^{(2)} − O_B^{(1)}B − BO_B^{(1)} + B²|ψ⟩`.
pub fn rms_disturbance(model: &MeasurementModel, b: &CMatrix, psi: &CVector) -> Result<f64> {
    check_state(model.dim, psi)?;
    let o1 = post_moment_operator(model, b, 1)?;
    let o2 = post_moment_operator(model, b, 2)?;
    moment_form("rms disturbance", &o1, &o2, b, psi)
}

fn moment_form(
    quantity: &'static str,
    o1: &CMatrix,
    o2: &CMatrix,
    x: &CMatrix,
    psi: &CVector,
) -> Result<f64> {
    let terms = [
        expect(psi, o2),
        -expect(psi, &(o1 * x)),
        -expect(psi, &(x * o1)),
        expect(psi, &(x * x)),
    ];
    let sum: C64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|t| t.norm()).sum();
    rms_sqrt(quantity, sum.re, scale)
}

/// `ε² = Σ_m ‖M_m(m − A)ψ‖²`.
pub fn rms_error_sum_form(model: &MeasurementModel, a: &CMatrix, psi: &CVector) -> Result<f64> {
    check_hermitian(model.dim, a)?;
    check_state(model.dim, psi)?;
    let a_psi = a * psi;
    let total: f64 = model
        .outcomes
        .iter()
        .map(|o| (&o.operator * (psi.scale(o.label) - &a_psi)).norm_squared())
        .sum();
    Ok(total.sqrt())
}

/// `η² = Σ_m ‖[M_m, B]ψ‖²`.
pub fn rms_disturbance_sum_form(
    model: &MeasurementModel,
    b: &CMatrix,
    psi: &CVector,
) -> Result<f64> {
    check_hermitian(model.dim, b)?;
    check_state(model.dim, psi)?;
    let total: f64 = model
        .outcomes
        .iter()
        .map(|o| ((&o.operator * b - b * &o.operator) * psi).norm_squared())
        .sum();
    Ok(total.sqrt())
}

/// `ε = ‖(O_A − A)ψ‖`, valid only for projective models.
pub fn rms_error_projective(
    model: &MeasurementModel,
    a: &CMatrix,
    psi: &CVector,
) -> Result<f64> {
    if !model.is_projective(tolerance::COMPLETENESS) {
        return Err(Error::InvalidParameter("model is not projective".into()));
    }
    check_hermitian(model.dim, a)?;
    check_state(model.dim, psi)?;
    let o1 = moment_output_operator(model, 1);
    Ok(((o1 - a) * psi).norm())
}

/// `σ(X) = √(⟨X²⟩ − ⟨X⟩²)`.
pub fn std_dev(x: &CMatrix, psi: &CVector) -> Result<f64> {
    check_hermitian(x.nrows(), x)?;
    check_state(x.nrows(), psi)?;
    let mean = expect(psi, x).re;
    let second = expect(psi, &(x * x)).re;
    rms_sqrt("standard deviation", second - mean * mean, second.abs() + mean * mean)
}

/// All terms of the Heisenberg-form, Ozawa, Robertson/Schrödinger and
/// combined relations for one configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct UncertaintyReport {
    pub eps: f64,
    pub eta: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    /// `½|⟨[A,B]⟩|` as the lower bound of `σ(A)σ(B)`.
    pub robertson_bound: f64,
    /// `½⟨{A−⟨A⟩, B−⟨B⟩}⟩`.
    pub schroedinger_extra: f64,
    pub schroedinger_bound: f64,
    /// `½|⟨[A,B]⟩|` as the lower bound of the error-disturbance relations.
    pub commutator_bound: f64,
    pub heisenberg_lhs: f64,
    pub ozawa_lhs: f64,
    pub combined_lhs: f64,
    pub heisenberg_ok: bool,
    pub ozawa_ok: bool,
    pub combined_ok: bool,
}

impl UncertaintyReport {
    pub fn from_terms(
        eps: f64,
        eta: f64,
        sigma_a: f64,
        sigma_b: f64,
        commutator_bound: f64,
        schroedinger_extra: f64,
    ) -> Self {
        let heisenberg_lhs = eps * eta;
        let ozawa_lhs = heisenberg_lhs + eps * sigma_b + sigma_a * eta;
        let combined_lhs = (eps + sigma_a) * (eta + sigma_b);
        let slack = tolerance::RELATION;
        UncertaintyReport {
            eps,
            eta,
            sigma_a,
            sigma_b,
            robertson_bound: commutator_bound,
            schroedinger_extra,
            schroedinger_bound: schroedinger_extra.hypot(commutator_bound),
            commutator_bound,
            heisenberg_lhs,
            ozawa_lhs,
            combined_lhs,
            heisenberg_ok: heisenberg_lhs >= commutator_bound - slack,
            ozawa_ok: ozawa_lhs >= commutator_bound - slack,
            // (ε+σ_A)(η+σ_B) ≥ |⟨[A,B]⟩|
            combined_ok: combined_lhs >= 2.0 * commutator_bound - slack,
        }
    }

    pub fn ozawa_margin(&self) -> f64 {
        self.ozawa_lhs - self.commutator_bound
    }

    pub fn heisenberg_margin(&self) -> f64 {
        self.heisenberg_lhs - self.commutator_bound
    }
}

/// `½|⟨[A,B]⟩|` and `½⟨{A−⟨A⟩, B−⟨B⟩}⟩`.
pub fn commutator_terms(a: &CMatrix, b: &CMatrix, psi: &CVector) -> (f64, f64) {
    let ab = expect(psi, &(a * b));
    let ma = expect(psi, a).re;
    let mb = expect(psi, b).re;
    (ab.im.abs(), ab.re - ma * mb)
}

pub fn evaluate_relations(
    model: &MeasurementModel,
    a: &CMatrix,
    b: &CMatrix,
    psi: &CVector,
) -> Result<UncertaintyReport> {
    let eps = rms_error(model, a, psi)?;
    let eta = rms_disturbance(model, b, psi)?;
    let sigma_a = std_dev(a, psi)?;
    let sigma_b = std_dev(b, psi)?;
    let (bound, extra) = commutator_terms(a, b, psi);
    Ok(UncertaintyReport::from_terms(eps, eta, sigma_a, sigma_b, bound, extra))
}

/// `⟨ψ|X|ψ⟩` without Hermiticity assumptions.
pub fn expect(psi: &CVector, x: &CMatrix) -> C64 {
    psi.dotc(&(x * psi))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn matrix_power(x: &CMatrix, k: u32) -> CMatrix {
    (0..k).fold(CMatrix::identity(x.nrows(), x.ncols()), |acc, _| acc * x)
}

fn check_state(dim: usize, psi: &CVector) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: psi.len() });
    }
    let norm_sqr = psi.norm_squared();
    if (norm_sqr - 1.0).abs() > tolerance::COMPLETENESS {
        return Err(Error::NotNormalized { norm_sqr });
    }
    Ok(())
}

fn check_hermitian(dim: usize, x: &CMatrix) -> Result<()> {
    if x.nrows() != dim || x.ncols() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: x.nrows() });
    }
    let deviation = max_abs(&(x - x.adjoint()));
    if deviation > tolerance::HERMITIAN {
        return Err(Error::NotHermitian { deviation });
    }
    Ok(())
}

fn check_density(dim: usize, rho: &CMatrix) -> Result<()> {
    check_hermitian(dim, rho).map_err(|e| Error::InvalidDensity(e.to_string()))?;
    let trace = rho.trace();
    if (trace - C64::new(1.0, 0.0)).norm() > tolerance::COMPLETENESS {
        return Err(Error::InvalidDensity(format!("trace {trace}")));
    }
    let min = rho
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min < -tolerance::COMPLETENESS {
        return Err(Error::InvalidDensity(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmcore::{Operator2, SpinState, UnitAxis};
    use crate::random;
    use crate::spin::projective_apparatus;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

    const TOL: f64 = 1e-12;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn ket(s: &SpinState) -> CVector {
        CVector::from_column_slice(&s.amplitudes())
    }

    fn sx() -> CMatrix {
        Operator2::pauli_x().to_dmatrix()
    }

    fn sy() -> CMatrix {
        Operator2::pauli_y().to_dmatrix()
    }

    fn sz() -> CMatrix {
        Operator2::pauli_z().to_dmatrix()
    }

    fn projective(axis: UnitAxis) -> MeasurementModel {
        projective_apparatus(&axis).unwrap()
    }

    /// Outcome probability via the partial-trace instrument formula,
    /// independent of the measurement-operator route.
    fn instrument_probability(model: &IndirectModel, idx: usize, rho: &CMatrix) -> f64 {
        let dp = model.probe_dim();
        let m = model.meter().eigenvector(idx);
        let proj = &m * m.adjoint();
        let lifted = CMatrix::identity(model.system_dim(), model.system_dim()).kronecker(&proj);
        let xi = model.probe_state();
        let joint = rho.kronecker(&(xi * xi.adjoint()));
        let u = model.interaction();
        let total = (u.adjoint() * lifted * u * joint).trace();
        assert_eq!(dp, model.meter().dim());
        total.re
    }

    #[test]
    fn no_interaction_gives_scalar_operators() {
        let xi = CVector::from_column_slice(&[c(0.6), C64::new(0.0, 0.8)]);
        let model = IndirectModel::new(2, xi, CMatrix::identity(4, 4), Meter::pauli_z()).unwrap();
        let mm = from_indirect(&model).unwrap();
        let eye = CMatrix::identity(2, 2);
        assert!(max_abs(&(&mm.outcomes()[0].operator - eye.scale(0.6))) < TOL);
        assert!(max_abs(&(&mm.outcomes()[1].operator - eye.map(|z| z * C64::new(0.0, 0.8)))) < TOL);
        let branches = apply(&mm, &ket(&SpinState::plus_x())).unwrap();
        assert_abs_diff_eq!(branches[0].probability, 0.36, epsilon = TOL);
        assert_abs_diff_eq!(branches[1].probability, 0.64, epsilon = TOL);
    }

    #[test]
    fn cnot_interaction_reproduces_z_measurement() {
        // system controls, probe is target; index = s·2 + p
        let mut u = CMatrix::zeros(4, 4);
        for (from, to) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            u[(to, from)] = c(1.0);
        }
        let xi = CVector::from_column_slice(&[c(1.0), c(0.0)]);
        let model = IndirectModel::new(2, xi, u, Meter::pauli_z()).unwrap();
        let mm = from_indirect(&model).unwrap();
        let expected = projective(UnitAxis::Z);
        for (got, want) in mm.outcomes().iter().zip(expected.outcomes()) {
            assert_eq!(got.label, want.label);
            assert!(max_abs(&(&got.operator - &want.operator)) < TOL);
        }
    }

    #[test]
    fn random_interaction_is_complete_and_matches_instrument() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (ds, dp) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
            let model = random::indirect_model(ds, dp, &mut rng);
            let mm = from_indirect(&model).unwrap();
            assert!(mm.completeness_deviation() < 1e-10);
            let psi = random::state(ds, &mut rng);
            let rho = &psi * psi.adjoint();
            let branches = apply(&mm, &psi).unwrap();
            for (idx, br) in branches.iter().enumerate() {
                assert_abs_diff_eq!(
                    br.probability,
                    instrument_probability(&model, idx, &rho),
                    epsilon = 1e-10
                );
            }
        }
    }

    #[test]
    fn rejects_invalid_indirect_models() {
        let xi = CVector::from_column_slice(&[c(1.0), c(0.0)]);
        let not_unitary = CMatrix::identity(4, 4).scale(1.1);
        assert!(matches!(
            IndirectModel::new(2, xi.clone(), not_unitary, Meter::pauli_z()),
            Err(Error::NotUnitary { .. })
        ));
        assert!(matches!(
            Meter::new(vec![1.0, 1.0], CMatrix::identity(2, 2)),
            Err(Error::DegenerateMeter(_))
        ));
    }

    #[test]
    fn rejects_incomplete_or_duplicate() {
        let half = CMatrix::identity(2, 2).scale(0.5);
        assert!(matches!(
            MeasurementModel::new(vec![(1.0, half.clone())]),
            Err(Error::Incomplete { .. })
        ));
        let p = Operator2::from_pauli(0.5, [0.0, 0.0, 0.5]).to_dmatrix();
        let q = Operator2::from_pauli(0.5, [0.0, 0.0, -0.5]).to_dmatrix();
        assert!(matches!(
            MeasurementModel::new(vec![(1.0, p), (1.0, q)]),
            Err(Error::DuplicateLabel(_))
        ));
    }

    #[test]
    fn apply_examples() {
        let up = ket(&SpinState::plus_z());
        let z = apply(&projective(UnitAxis::Z), &up).unwrap();
        assert_eq!(z[0].label, 1.0);
        assert_abs_diff_eq!(z[0].probability, 1.0, epsilon = TOL);
        let post = z[0].post_state.as_ref().unwrap();
        assert_abs_diff_eq!(post.dotc(&up).norm(), 1.0, epsilon = TOL);
        assert_abs_diff_eq!(z[1].probability, 0.0, epsilon = TOL);
        assert!(z[1].post_state.is_none());

        let x = apply(&projective(UnitAxis::X), &up).unwrap();
        assert_abs_diff_eq!(x[0].probability, 0.5, epsilon = TOL);
        assert_abs_diff_eq!(x[1].probability, 0.5, epsilon = TOL);

        let d = UnitAxis::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, 0.0).unwrap();
        let br = apply(&projective(d), &up).unwrap();
        assert_abs_diff_eq!(br[0].probability, 0.5, epsilon = TOL);
        let plus = ket(&SpinState::eigenstate(&d));
        let minus = ket(&SpinState::eigenstate(&-d));
        assert_abs_diff_eq!(br[0].post_state.as_ref().unwrap().dotc(&plus).norm(), 1.0, epsilon = TOL);
        assert_abs_diff_eq!(br[1].post_state.as_ref().unwrap().dotc(&minus).norm(), 1.0, epsilon = TOL);
    }

    #[test]
    fn nonselective_examples() {
        let up = SpinState::plus_z().density().to_dmatrix();
        let t = nonselective(&projective(UnitAxis::Z), &up).unwrap();
        assert!(max_abs(&(t - &up)) < TOL);

        let t = nonselective(&projective(UnitAxis::X), &up).unwrap();
        assert!(max_abs(&(t - CMatrix::identity(2, 2).scale(0.5))) < TOL);

        let mixed = CMatrix::identity(2, 2).scale(0.5);
        let n = UnitAxis::from_angles(0.3, 1.9);
        let t = nonselective(&projective(n), &mixed).unwrap();
        assert!(max_abs(&(t - &mixed)) < TOL);
    }

    #[test]
    fn nonselective_rejects_bad_density() {
        let bad = CMatrix::identity(2, 2);
        assert!(matches!(
            nonselective(&projective(UnitAxis::Z), &bad),
            Err(Error::InvalidDensity(_))
        ));
        let negative = Operator2::from_pauli(0.5, [0.0, 0.0, 0.9]).to_dmatrix();
        let negative = negative.scale(1.0) + Operator2::from_pauli(0.0, [0.0, 0.0, 0.0]).to_dmatrix();
        assert!(nonselective(&projective(UnitAxis::Z), &negative).is_err());
    }

    #[test]
    fn nonselective_preserves_states_for_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let model = from_indirect(&random::indirect_model(3, 2, &mut rng)).unwrap();
            let psi = random::state(3, &mut rng);
            let t = nonselective(&model, &(&psi * psi.adjoint())).unwrap();
            assert!(max_abs(&(&t - t.adjoint())) < 1e-10);
            assert_abs_diff_eq!(t.trace().re, 1.0, epsilon = 1e-10);
            let min = t.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min > -1e-10);
        }
    }

    #[test]
    fn moment_operator_examples() {
        let n = UnitAxis::from_angles(1.1, -0.4);
        let m = projective(n);
        assert!(max_abs(&(moment_output_operator(&m, 2) - CMatrix::identity(2, 2))) < TOL);
        assert!(max_abs(&(moment_output_operator(&m, 1) - Operator2::spin(&n).to_dmatrix())) < TOL);

        let third = CMatrix::identity(2, 2).scale(1.0 / 3f64.sqrt());
        let three = MeasurementModel::new(vec![
            (-1.0, third.clone()),
            (0.0, third.clone()),
            (1.0, third),
        ])
        .unwrap();
        assert!(
            max_abs(&(moment_output_operator(&three, 2) - CMatrix::identity(2, 2).scale(2.0 / 3.0)))
                < TOL
        );
    }

    #[test]
    fn post_moment_operator_examples() {
        let n = UnitAxis::from_angles(0.8, 2.0);
        let b = Operator2::spin(&n).to_dmatrix();
        assert!(max_abs(&(post_moment_operator(&projective(n), &b, 1).unwrap() - &b)) < TOL);

        let x = projective(UnitAxis::X);
        assert!(max_abs(&(post_moment_operator(&x, &sy(), 2).unwrap() - CMatrix::identity(2, 2))) < TOL);
        assert!(max_abs(&post_moment_operator(&x, &sy(), 1).unwrap()) < TOL);
    }

    #[test]
    fn post_moment_matches_output_state_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = from_indirect(&random::indirect_model(2, 3, &mut rng)).unwrap();
        let b = random::hermitian(2, &mut rng);
        let psi = random::state(2, &mut rng);
        let t = nonselective(&model, &(&psi * psi.adjoint())).unwrap();
        for k in 1..=2 {
            let direct = (&t * matrix_power(&b, k)).trace().re;
            let via_op = expect(&psi, &post_moment_operator(&model, &b, k).unwrap()).re;
            assert_abs_diff_eq!(direct, via_op, epsilon = 1e-10);
        }
    }

    #[test]
    fn post_moment_dimension_mismatch() {
        let b = CMatrix::identity(3, 3);
        assert!(matches!(
            post_moment_operator(&projective(UnitAxis::X), &b, 1),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rms_error_examples() {
        let psi = ket(&SpinState::from_angles(0.7, 0.2));
        let a = sx();
        assert_abs_diff_eq!(rms_error(&projective(UnitAxis::X), &a, &psi).unwrap(), 0.0, epsilon = TOL);
        assert_abs_diff_eq!(rms_error(&projective(-UnitAxis::X), &a, &psi).unwrap(), 2.0, epsilon = TOL);
        assert_abs_diff_eq!(rms_error(&projective(UnitAxis::Y), &a, &psi).unwrap(), SQRT_2, epsilon = TOL);
        assert_abs_diff_eq!(rms_error(&projective(UnitAxis::Z), &a, &psi).unwrap(), SQRT_2, epsilon = TOL);
    }

    #[test]
    fn rms_error_rejects_inconsistent_model() {
        // labels far from A's spectrum cannot make ε² negative; a
        // non-Hermitian A is the reachable error path
        let a = Operator2([[C64::new(0.0, 0.0), c(1.0)], [c(0.0), c(0.0)]]).to_dmatrix();
        let psi = ket(&SpinState::plus_z());
        assert!(matches!(
            rms_error(&projective(UnitAxis::X), &a, &psi),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn rms_disturbance_examples() {
        let psi = ket(&SpinState::from_angles(2.1, -1.3));
        let b = sy();
        assert_abs_diff_eq!(rms_disturbance(&projective(UnitAxis::Y), &b, &psi).unwrap(), 0.0, epsilon = TOL);
        assert_abs_diff_eq!(rms_disturbance(&projective(-UnitAxis::Y), &b, &psi).unwrap(), 0.0, epsilon = TOL);
        assert_abs_diff_eq!(rms_disturbance(&projective(UnitAxis::X), &b, &psi).unwrap(), SQRT_2, epsilon = TOL);
        let eta = rms_disturbance(&projective(UnitAxis::from_angles(0.4, 2.5)), &b, &psi).unwrap();
        assert!(eta <= 2.0);
    }

    #[test]
    fn projective_pythagorean_form_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = random::axis(&mut rng);
            let a = Operator2::spin(&random::axis(&mut rng)).to_dmatrix();
            let psi = random::state(2, &mut rng);
            let m = projective(n);
            let eq14 = rms_error(&m, &a, &psi).unwrap();
            let eq21 = rms_error_projective(&m, &a, &psi).unwrap();
            assert_abs_diff_eq!(eq14, eq21, epsilon = TOL);
        }
    }

    #[test]
    fn projective_form_rejects_general_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = from_indirect(&random::indirect_model(2, 2, &mut rng)).unwrap();
        assert!(rms_error_projective(&m, &sx(), &random::state(2, &mut rng)).is_err());
    }

    #[test]
    fn moment_and_sum_forms_agree_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let ds = 2 + (rand::Rng::random::<bool>(&mut rng) as usize);
            let model = from_indirect(&random::indirect_model(ds, 3, &mut rng)).unwrap();
            let a = random::hermitian(ds, &mut rng);
            let b = random::hermitian(ds, &mut rng);
            let psi = random::state(ds, &mut rng);
            assert_abs_diff_eq!(
                rms_error(&model, &a, &psi).unwrap(),
                rms_error_sum_form(&model, &a, &psi).unwrap(),
                epsilon = 1e-9
            );
            assert_abs_diff_eq!(
                rms_disturbance(&model, &b, &psi).unwrap(),
                rms_disturbance_sum_form(&model, &b, &psi).unwrap(),
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn evaluate_relations_standard_config() {
        let o = UnitAxis::from_angles(PI / 2.0, PI / 6.0);
        let psi = ket(&SpinState::plus_z());
        let r = evaluate_relations(&projective(o), &sx(), &sy(), &psi).unwrap();
        // 2 sin(π/12), √2 cos(π/6)
        assert_abs_diff_eq!(r.eps, 0.517_638_090_205_041_5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.eta, 1.224_744_871_391_589, epsilon = 1e-12);
        assert_abs_diff_eq!(r.commutator_bound, 1.0, epsilon = TOL);
        assert!(r.heisenberg_lhs < 1.0 && !r.heisenberg_ok);
        assert_abs_diff_eq!(r.heisenberg_lhs, 0.633_974_596_215_561_3, epsilon = 1e-12);
        assert_abs_diff_eq!(r.ozawa_lhs, 2.376_357_557_812_192, epsilon = 1e-12);
        assert!(r.ozawa_ok && r.combined_ok);
    }

    #[test]
    fn evaluate_relations_without_detuning() {
        let psi = ket(&SpinState::plus_z());
        let r = evaluate_relations(&projective(UnitAxis::X), &sx(), &sy(), &psi).unwrap();
        assert_abs_diff_eq!(r.eps, 0.0, epsilon = TOL);
        assert_abs_diff_eq!(r.heisenberg_lhs, 0.0, epsilon = TOL);
        assert_abs_diff_eq!(r.ozawa_lhs, SQRT_2, epsilon = TOL);
        assert!(r.ozawa_ok);
    }

    #[test]
    fn evaluate_relations_identical_observables() {
        let psi = ket(&SpinState::from_angles(1.0, 0.5));
        let r = evaluate_relations(&projective(UnitAxis::Y), &sz(), &sz(), &psi).unwrap();
        assert_abs_diff_eq!(r.commutator_bound, 0.0, epsilon = TOL);
        assert!(r.heisenberg_ok && r.ozawa_ok && r.combined_ok);
    }
}
