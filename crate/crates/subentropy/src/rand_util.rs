//! Seeded randomness: every stochastic routine in the crate takes its
//! generator (or a seed) explicitly so batch runs are reproducible.

use crate::linops::{c, cr, CMat, CVec, DensityOperator};
use nalgebra::DVector;
use rand::{RngExt, SeedableRng};

/// The crate-wide deterministic generator.
pub type SeedRng = rand_chacha::ChaCha12Rng;

/// Default seed for internal decompositions (overridable via options).
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    SeedRng::seed_from_u64(seed)
}

/// Standard normal via Box–Muller.
pub fn normal(rng: &mut SeedRng) -> f64 {
    loop {
        let u: f64 = rng.random();
        let v: f64 = rng.random();
        if u > 1e-300 {
            return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
        }
    }
}

pub fn complex_normal(rng: &mut SeedRng) -> nalgebra::Complex<f64> {
    c(normal(rng), normal(rng))
}

/// Ginibre matrix: i.i.d. complex normal entries.
pub fn ginibre(rows: usize, cols: usize, rng: &mut SeedRng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn random_hermitian(d: usize, rng: &mut SeedRng) -> CMat {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Random density matrix ρ = GG*/tr(GG*) with G of shape d×rank.
pub fn random_density(d: usize, rank: usize, rng: &mut SeedRng) -> DensityOperator {
    let g = ginibre(d, rank.max(1), rng);
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityOperator::state(m.unscale(tr)).expect("Ginibre state is valid")
}

pub fn random_unit_vector(d: usize, rng: &mut SeedRng) -> CVec {
    let v = DVector::from_fn(d, |_, _| complex_normal(rng));
    let n = v.norm();
    v.unscale(n)
}

pub fn random_pure(d: usize, rng: &mut SeedRng) -> DensityOperator {
    DensityOperator::pure(&random_unit_vector(d, rng)).expect("unit vector")
}

/// Haar-distributed unitary via QR of a Ginibre matrix with phase fixing.
pub fn haar_unitary(d: usize, rng: &mut SeedRng) -> CMat {
    let g = ginibre(d, d, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 1e-300 {
            rjj / cr(rjj.norm())
        } else {
            cr(1.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase.conj();
        }
    }
    q
}
