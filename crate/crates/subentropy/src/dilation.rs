//! Stinespring isometries for conditional expectations, purifications, and
//! the dilated/purified states the duality theorem compares.
//!
//! Tensor factors of dilated states are stored in (E, A) order — environment
//! first — so conditional entropies H(E|A) read off directly; a single
//! axis permutation converts from the construction's natural (A, E) order.

use crate::algebra::SubalgebraStructure;
use crate::linops::{
    cr, eig_hermitian, kron, max_abs_diff, partial_trace, permute_factors,
    permute_vector_factors, zeros, CMat, CVec, DensityOperator, LinopsError,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DilationError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Linops(#[from] LinopsError),
}

pub type Result<T> = std::result::Result<T, DilationError>;

/// Isometry V: H_A → H_A ⊗ H_E with tr_E(V x V*) = E_N(x) and, since E_N is
/// self-adjoint, V*(x ⊗ 1_E)V = E_N(x) as well. d_E = Σₖ mₖ².
#[derive(Debug, Clone)]
pub struct StinespringIsometry {
    dim_in: usize,
    dim_env: usize,
    /// (d·d_E) × d matrix in the natural (A, E) output order.
    matrix: CMat,
    kraus: Vec<CMat>,
}

impl StinespringIsometry {
    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_env(&self) -> usize {
        self.dim_env
    }

    /// The isometry with output indexed (A, E), A slowest.
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Kraus operators of E_N in the fixed enumeration (block-major, then
    /// multiplicity row, then column).
    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    /// Σᵣ Kᵣ x Kᵣ* — must equal E_N(x).
    pub fn apply_channel(&self, x: &CMat) -> CMat {
        let d = self.dim_in;
        let mut out = zeros(d, d);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    /// V*(x ⊗ 1_E)V, the unital-CP compression form.
    pub fn compress(&self, x: &CMat) -> CMat {
        let big = kron(x, &crate::linops::identity(self.dim_env));
        self.matrix.adjoint() * big * &self.matrix
    }
}

/// Stinespring dilation of E_N from its canonical Kraus family:
/// K_{k,i,j} = (1/√mₖ)(|i⟩⟨j|_{mₖ} ⊗ 1_{nₖ}) P_k per block k.
pub fn stinespring(n: &SubalgebraStructure) -> StinespringIsometry {
    let d = n.ambient_dim();
    let u = n.basis_unitary();
    let offsets = n.offsets();
    let mut kraus = Vec::new();
    for (k, &(m, nk)) in n.blocks().iter().enumerate() {
        let scale = 1.0 / (m as f64).sqrt();
        for i in 0..m {
            for j in 0..m {
                let mut kc = zeros(d, d);
                for b in 0..nk {
                    kc[(offsets[k] + i * nk + b, offsets[k] + j * nk + b)] = cr(scale);
                }
                kraus.push(u.adjoint() * kc * u);
            }
        }
    }
    let d_env = kraus.len();
    let mut v = zeros(d * d_env, d);
    for (r, k) in kraus.iter().enumerate() {
        // output index (a, e) = a·d_E + e
        for row in 0..d {
            for col in 0..d {
                v[(row * d_env + r, col)] = k[(row, col)];
            }
        }
    }
    StinespringIsometry {
        dim_in: d,
        dim_env: d_env,
        matrix: v,
        kraus,
    }
}

/// VρV* on H_E ⊗ H_A (environment first).
pub fn dilate_state(v: &StinespringIsometry, rho: &DensityOperator) -> Result<DensityOperator> {
    if rho.dim() != v.dim_in {
        return Err(DilationError::DimensionMismatch(format!(
            "state dim {} vs isometry input {}",
            rho.dim(),
            v.dim_in
        )));
    }
    let big = &v.matrix * rho.matrix() * v.matrix.adjoint();
    let ea = permute_factors(&big, &[v.dim_in, v.dim_env], &[1, 0])?;
    Ok(DensityOperator::new(ea, rho.substate_allowed())?)
}

/// Eigendecomposition purification |ψ⟩ ∈ H_A ⊗ H_F with d_F = rank(ρ),
/// eigenvalues descending, phases fixed by making each eigenvector's
/// largest-magnitude component real positive.
pub fn purify(rho: &DensityOperator) -> Result<(CVec, usize)> {
    let d = rho.dim();
    let (vals, vecs) = eig_hermitian(rho.matrix())?;
    let lmax = vals.iter().fold(0.0f64, |a, &l| a.max(l)).max(1e-300);
    let mut kept: Vec<(f64, CVec)> = Vec::new();
    for i in (0..vals.len()).rev() {
        if vals[i] > crate::linops::RANK_TOL * lmax {
            let mut col = CVec::from_column_slice(vecs.column(i).as_slice());
            let mut best = 0usize;
            for j in 0..d {
                if col[j].norm() > col[best].norm() {
                    best = j;
                }
            }
            let phase = col[best] / cr(col[best].norm().max(1e-300));
            col = col.map(|z| z * phase.conj());
            kept.push((vals[i], col));
        }
    }
    let d_f = kept.len().max(1);
    let mut psi = CVec::zeros(d * d_f);
    for (f, (lam, col)) in kept.iter().enumerate() {
        let amp = lam.max(0.0).sqrt();
        for a in 0..d {
            psi[a * d_f + f] += col[a] * cr(amp);
        }
    }
    Ok((psi, d_f))
}

/// Purification ξ_EAF = (V ⊗ 1_F)|ψ⟩ of VρV*, factors ordered (E, A, F).
#[derive(Debug, Clone)]
pub struct TripartitePureState {
    pub dim_e: usize,
    pub dim_a: usize,
    pub dim_f: usize,
    /// unit vector on H_E ⊗ H_A ⊗ H_F
    pub vector: CVec,
}

impl TripartitePureState {
    pub fn density(&self) -> CMat {
        &self.vector * self.vector.adjoint()
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.dim_e, self.dim_a, self.dim_f]
    }

    /// Marginal on a subset of {E, A, F} (indices 0, 1, 2), in that order.
    pub fn marginal(&self, keep: &[usize]) -> Result<CMat> {
        Ok(partial_trace(&self.density(), &self.dims(), keep)?)
    }
}

/// Build ξ_EAF from the isometry and a normalized state.
pub fn build_xi(v: &StinespringIsometry, rho: &DensityOperator) -> Result<TripartitePureState> {
    if rho.dim() != v.dim_in {
        return Err(DilationError::DimensionMismatch(format!(
            "state dim {} vs isometry input {}",
            rho.dim(),
            v.dim_in
        )));
    }
    let (psi, d_f) = purify(rho)?;
    let d = v.dim_in;
    let d_e = v.dim_env;
    // (V ⊗ 1_F)ψ: ψ indexed (a, f); output indexed ((a,e), f)
    let mut out = CVec::zeros(d * d_e * d_f);
    for a_out in 0..d {
        for e in 0..d_e {
            for a_in in 0..d {
                let vz = v.matrix[(a_out * d_e + e, a_in)];
                if vz.norm() > 0.0 {
                    for f in 0..d_f {
                        out[(a_out * d_e + e) * d_f + f] += vz * psi[a_in * d_f + f];
                    }
                }
            }
        }
    }
    // reorder (A, E, F) → (E, A, F)
    let vec = permute_vector_factors(&out, &[d, d_e, d_f], &[1, 0, 2])?;
    let norm = vec.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(DilationError::DimensionMismatch(format!(
            "ξ norm {norm} differs from 1"
        )));
    }
    Ok(TripartitePureState {
        dim_e: d_e,
        dim_a: d,
        dim_f: d_f,
        vector: vec,
    })
}

/// Sample report of the multiplicative-domain commutation test
/// (a ⊗ 1_E)VV* = VV*(a ⊗ 1_E) for a ∈ N.
#[derive(Debug, Clone, Default)]
pub struct SampleReport {
    pub member_checks: usize,
    pub member_max_violation: f64,
    pub nonmember_checks: usize,
    pub nonmember_min_violation: f64,
}

pub fn multiplicative_domain_check(
    n: &SubalgebraStructure,
    v: &StinespringIsometry,
    samples: usize,
    seed: u64,
) -> SampleReport {
    let mut rng = crate::rand_util::rng_from_seed(seed);
    let d = n.ambient_dim();
    let e_proj = &v.matrix * v.matrix.adjoint();
    let mut report = SampleReport {
        nonmember_min_violation: f64::INFINITY,
        ..Default::default()
    };
    let comm_norm = |a: &CMat| -> f64 {
        let big = kron(a, &crate::linops::identity(v.dim_env));
        max_abs_diff(&(&big * &e_proj), &(&e_proj * &big))
    };
    for _ in 0..samples {
        let member = n
            .conditional_expectation(&crate::rand_util::random_hermitian(d, &mut rng))
            .expect("dims");
        report.member_checks += 1;
        report.member_max_violation = report.member_max_violation.max(comm_norm(&member));

        let outside = crate::rand_util::random_hermitian(d, &mut rng);
        if !n.membership(&outside, 1e-9).expect("dims") {
            report.nonmember_checks += 1;
            report.nonmember_min_violation =
                report.nonmember_min_violation.min(comm_norm(&outside));
        }
    }
    report
}

/// Sample report of the operator inequality V E(x) V* ⪯ E(x) ⊗ 1_E on PSD x.
#[derive(Debug, Clone, Default)]
pub struct OrderReport {
    pub checks: usize,
    pub min_eigenvalue: f64,
}

pub fn order_inequality_check(
    n: &SubalgebraStructure,
    v: &StinespringIsometry,
    samples: usize,
    seed: u64,
) -> OrderReport {
    let mut rng = crate::rand_util::rng_from_seed(seed);
    let d = n.ambient_dim();
    let mut report = OrderReport {
        checks: 0,
        min_eigenvalue: f64::INFINITY,
    };
    for _ in 0..samples {
        let g = crate::rand_util::ginibre(d, d, &mut rng);
        let x = &g * g.adjoint();
        let ex = n.conditional_expectation(&x).expect("dims");
        let lhs = &v.matrix * &ex * v.matrix.adjoint();
        let rhs = kron(&ex, &crate::linops::identity(v.dim_env));
        let diff = rhs - lhs;
        let (vals, _) = eig_hermitian(&diff).expect("Hermitian");
        report.checks += 1;
        report.min_eigenvalue = report.min_eigenvalue.min(vals[0]);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{identity, max_abs, trace_re};
    use crate::rand_util::{random_density, random_pure, rng_from_seed};

    #[test]
    fn isometry_identity_and_channel_forms() {
        for n in [
            SubalgebraStructure::make_diagonal(3),
            SubalgebraStructure::make_trivial(2),
            SubalgebraStructure::make_tensor_factor(2, 2, true),
            SubalgebraStructure::make_full(3),
        ] {
            let v = stinespring(&n);
            let d = n.ambient_dim();
            let gram = v.matrix().adjoint() * v.matrix();
            assert!(max_abs_diff(&gram, &identity(d)) < 1e-12, "V*V ≠ I");
            let mut rng = rng_from_seed(3);
            for _ in 0..5 {
                let x = crate::rand_util::random_hermitian(d, &mut rng);
                let e = n.conditional_expectation(&x).unwrap();
                assert!(max_abs_diff(&v.apply_channel(&x), &e) < 1e-9);
                assert!(max_abs_diff(&v.compress(&x), &e) < 1e-9);
                let big = v.matrix() * &x * v.matrix().adjoint();
                let tr_e = partial_trace(&big, &[d, v.dim_env()], &[0]).unwrap();
                assert!(max_abs_diff(&tr_e, &e) < 1e-9);
            }
        }
    }

    #[test]
    fn diagonal_env_dimension_and_dephasing() {
        let n = SubalgebraStructure::make_diagonal(3);
        let v = stinespring(&n);
        assert_eq!(v.dim_env(), 3);
        let mut rng = rng_from_seed(5);
        let rho = random_density(3, 3, &mut rng);
        let out = v.apply_channel(rho.matrix());
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    assert!((out[(i, j)] - rho.matrix()[(i, j)]).norm() < 1e-12);
                } else {
                    assert!(out[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn trivial_env_dimension_and_depolarizing() {
        let n = SubalgebraStructure::make_trivial(3);
        let v = stinespring(&n);
        assert_eq!(v.dim_env(), 9);
        let mut rng = rng_from_seed(7);
        let rho = random_density(3, 3, &mut rng);
        let out = v.apply_channel(rho.matrix());
        assert!(max_abs_diff(&out, &identity(3).scale(1.0 / 3.0)) < 1e-12);
    }

    #[test]
    fn full_algebra_is_identity_embedding() {
        let n = SubalgebraStructure::make_full(2);
        let v = stinespring(&n);
        assert_eq!(v.dim_env(), 1);
        assert!(max_abs_diff(v.matrix(), &identity(2)) < 1e-12);
    }

    #[test]
    fn dilate_preserves_trace_rank_and_marginal() {
        let n = SubalgebraStructure::make_diagonal(2);
        let v = stinespring(&n);
        let mut rng = rng_from_seed(9);
        let pure = random_pure(2, &mut rng);
        let dil = dilate_state(&v, &pure).unwrap();
        assert!((dil.trace() - 1.0).abs() < 1e-12);
        assert_eq!(dil.rank(), 1, "isometry preserves rank");
        // tr_E(VρV*) = E_N(ρ) — with (E,A) order E is factor 0
        let marg = partial_trace(dil.matrix(), &[v.dim_env(), 2], &[1]).unwrap();
        let e = n.conditional_expectation(pure.matrix()).unwrap();
        assert!(max_abs_diff(&marg, &e) < 1e-9);
    }

    #[test]
    fn purify_marginals() {
        let mut rng = rng_from_seed(11);
        let pure = random_pure(3, &mut rng);
        let (_, df) = purify(&pure).unwrap();
        assert_eq!(df, 1);
        // maximally mixed qubit: Bell-like purification
        let mixed = DensityOperator::state(identity(2).scale(0.5)).unwrap();
        let (psi, df) = purify(&mixed).unwrap();
        assert_eq!(df, 2);
        let rho = &psi * psi.adjoint();
        let marg = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert!(max_abs_diff(&marg, &identity(2).scale(0.5)) < 1e-12);
        // random rank-3 state in d=4
        let r3 = random_density(4, 3, &mut rng);
        let (psi, df) = purify(&r3).unwrap();
        assert_eq!(df, 3);
        let rho = &psi * psi.adjoint();
        let marg = partial_trace(&rho, &[4, 3], &[0]).unwrap();
        assert!(max_abs_diff(&marg, r3.matrix()) < 1e-10);
    }

    #[test]
    fn xi_marginal_consistency() {
        let mut rng = rng_from_seed(13);
        for n in [
            SubalgebraStructure::make_diagonal(2),
            SubalgebraStructure::make_trivial(2),
        ] {
            let v = stinespring(&n);
            let rho = random_density(2, 2, &mut rng);
            let xi = build_xi(&v, &rho).unwrap();
            assert!((xi.vector.norm() - 1.0).abs() < 1e-12);
            let ea = xi.marginal(&[0, 1]).unwrap();
            let dil = dilate_state(&v, &rho).unwrap();
            assert!(max_abs_diff(&ea, dil.matrix()) < 1e-10);

            let pure = random_pure(2, &mut rng);
            let xi_p = build_xi(&v, &pure).unwrap();
            assert_eq!(xi_p.dim_f, 1);
        }
    }

    #[test]
    fn lemma_commutation_biconditional() {
        let n = SubalgebraStructure::make_diagonal(3);
        let v = stinespring(&n);
        let report = multiplicative_domain_check(&n, &v, 50, 17);
        assert!(report.member_max_violation <= 1e-9);
        assert!(report.nonmember_checks > 0);
        assert!(report.nonmember_min_violation > 1e-9);
        // identity commutes trivially
        let e_proj = v.matrix() * v.matrix().adjoint();
        let big = kron(&identity(3), &identity(v.dim_env()));
        assert!(max_abs_diff(&(&big * &e_proj), &(&e_proj * &big)) < 1e-15);
        // |+⟩⟨+|-style coherence against the diagonal algebra: visibly nonzero
        let plus = CMat::from_fn(3, 3, |i, j| if i < 2 && j < 2 { cr(0.5) } else { cr(0.0) });
        let bigp = kron(&plus, &identity(v.dim_env()));
        assert!(max_abs(&(&bigp * &e_proj - &e_proj * &bigp)) > 1e-3);
    }

    #[test]
    fn order_inequality_on_psd_samples() {
        for n in [
            SubalgebraStructure::make_diagonal(2),
            SubalgebraStructure::make_tensor_factor(2, 2, true),
        ] {
            let v = stinespring(&n);
            let report = order_inequality_check(&n, &v, 30, 19);
            assert!(report.min_eigenvalue >= -1e-8, "{report:?}");
            // x = I: E(I)⊗1 − VV* ⪰ 0
            let e_proj = v.matrix() * v.matrix().adjoint();
            let diff = identity(n.ambient_dim() * v.dim_env()) - e_proj;
            let (vals, _) = eig_hermitian(&diff).unwrap();
            assert!(vals[0] >= -1e-12);
        }
    }

    #[test]
    fn compression_equality_on_members() {
        // x ∈ N: V E(x) V* equals (E(x)⊗1)VV* compressed to the range of V
        let n = SubalgebraStructure::make_diagonal(2);
        let v = stinespring(&n);
        let mut rng = rng_from_seed(21);
        let x = n
            .conditional_expectation(&crate::rand_util::random_hermitian(2, &mut rng))
            .unwrap();
        let lhs = v.matrix() * &x * v.matrix().adjoint();
        let e_proj = v.matrix() * v.matrix().adjoint();
        let rhs = &e_proj * kron(&x, &identity(v.dim_env())) * &e_proj;
        assert!(max_abs_diff(&lhs, &rhs) < 1e-10);
        let _ = trace_re(&lhs);
    }
}
