//! Seeded random configurations for property suites.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::povm::{CMatrix, CVector, IndirectModel, Meter};
use crate::qmcore::{SpinState, UnitAxis, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let (mut q, r) = g.qr().unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Uniformly distributed unit vector in `C^d`.
pub fn state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let v = DVector::from_fn(d, |_, _| gaussian(rng));
    let n = v.norm();
    v.unscale(n)
}

/// Hermitian matrix `(G + G†)/2` from a complex Gaussian `G`.
pub fn hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    (&g + g.adjoint()).scale(0.5)
}

/// Uniform direction on the Bloch sphere.
pub fn axis<R: Rng + ?Sized>(rng: &mut R) -> UnitAxis {
    let z: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    UnitAxis::from_angles(z.acos(), phi)
}

pub fn spin_state<R: Rng + ?Sized>(rng: &mut R) -> SpinState {
    SpinState::eigenstate(&axis(rng))
}

/// Haar-random interaction, random probe state, computational-basis meter
/// with labels `0..d_P`.
pub fn indirect_model<R: Rng + ?Sized>(system_dim: usize, probe_dim: usize, rng: &mut R) -> IndirectModel {
    let u = haar_unitary(system_dim * probe_dim, rng);
    let xi = state(probe_dim, rng);
    IndirectModel::new(system_dim, xi, u, Meter::computational(probe_dim))
        .expect("Haar unitary and normalized probe form a valid model")
}
