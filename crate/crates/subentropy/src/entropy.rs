//! Public entropy API: subalgebra divergences computed by two independent
//! routes (direct structured programs vs conditional entropies of the
//! Stinespring-dilated state), the duality and triple-duality checks that
//! compare them, and finite-n AEP scans.

use crate::algebra::SubalgebraStructure;
use crate::dilation::{build_xi, dilate_state, stinespring};
use crate::linops::{kron, partial_trace, CMat, DensityOperator};
use crate::solver::dmin::smooth_dmin_subalgebra;
use crate::solver::pair;
use crate::solver::problems::{
    dh_subalgebra, dmax_eps_fixed_sigma, fmax_one_sided, fmax_subalgebra,
    hmin_eps, smooth_dmax_subalgebra, SolverError,
};
use crate::solver::renyi_opt::{conditional_renyi, renyi_subalgebra, vn_entropy};
use crate::solver::{CertifiedSolve, SolverOptions};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("algebra error: {0}")]
    Algebra(#[from] crate::algebra::AlgebraError),
    #[error("dilation error: {0}")]
    Dilation(#[from] crate::dilation::DilationError),
    #[error("linops error: {0}")]
    Linops(#[from] crate::linops::LinopsError),
}

pub type Result<T> = std::result::Result<T, EntropyError>;

/// Which divergence or entropy a report row carries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Quantity {
    D,
    Dalpha(f64),
    Dmax,
    Dmin,
    DmaxEps(f64),
    DminEps(f64),
    DH(f64),
    Hmin,
    Hmax,
    HminEps(f64),
    HmaxEps(f64),
    H,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Direct,
    Dilated,
}

/// One computed value with its provenance.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyReport {
    pub quantity: Quantity,
    /// bits; +∞ sentinel on support violations
    pub value_bits: f64,
    pub route: Route,
    pub certificate_gap: Option<f64>,
}

/// D(ρ‖σ) in bits; +∞ when supp ρ ⊄ supp σ.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> f64 {
    pair::relative_entropy(rho.matrix(), sigma.matrix())
}

/// D(ρ‖N) = D(ρ‖E_N(ρ)).
pub fn subalgebra_relative_entropy(rho: &DensityOperator, n: &SubalgebraStructure) -> f64 {
    let e = n
        .conditional_expectation(rho.matrix())
        .expect("dimensions match");
    pair::relative_entropy(rho.matrix(), &e)
}

/// Conditional-entropy kinds of the public interface (conditioning on the
/// second tensor factor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CondKind {
    Hmin,
    Hmax,
    Halpha(f64),
    H,
}

/// Conditional entropy H(1|2) of a bipartite state with `dims = (d1, d2)`;
/// ε smooths the min/max kinds (ε = 0 for the plain quantities).
pub fn conditional_entropy(
    rho12: &CMat,
    dims: (usize, usize),
    kind: CondKind,
    eps: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let (d1, d2) = dims;
    match kind {
        CondKind::H => {
            let w2 = partial_trace(rho12, &[d1, d2], &[1])?;
            Ok(vn_entropy(rho12) - vn_entropy(&w2))
        }
        CondKind::Halpha(alpha) => Ok(conditional_renyi(rho12, d1, d2, alpha, opts)?.value_bits),
        CondKind::Hmin => Ok(hmin_eps(rho12, d1, d2, eps, opts)?.value_bits),
        CondKind::Hmax => {
            if eps == 0.0 {
                Ok(fmax_one_sided(rho12, d1, d2, opts)?.fidelity_sq_log2_twice)
            } else {
                // purification duality: H_max^ε(1|2)_ρ = −H_min^ε(1|F)_ψ
                let rho = DensityOperator::substate(rho12.clone())?;
                let (psi, df) = crate::dilation::purify(&rho)?;
                let full = &psi * psi.adjoint();
                let omega_1f = partial_trace(&full, &[d1, d2, df], &[0, 2])?;
                Ok(-hmin_eps(&omega_1f, d1, df, eps, opts)?.value_bits)
            }
        }
    }
}

/// Smoothed max divergence D_max^ε(ρ‖N), direct route, with certificate.
pub fn dmax_eps_direct(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    opts: &SolverOptions,
) -> Result<(f64, CertifiedSolve)> {
    let r = smooth_dmax_subalgebra(rho, n, eps, opts)?;
    Ok((r.value_bits, r.solved))
}

/// D_max^ε(ρ‖N) through the dilation: −H_min^ε(E|A) on VρV*.
pub fn dmax_eps_dilated(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    opts: &SolverOptions,
) -> Result<(f64, CertifiedSolve)> {
    let v = stinespring(n);
    let omega = dilate_state(&v, rho)?;
    let r = hmin_eps(omega.matrix(), v.dim_env(), v.dim_in(), eps, opts)?;
    Ok((-r.value_bits, r.solved))
}

/// Smoothed min divergence D_min^ε(ρ‖N), direct route (cutting planes over
/// the purification cap).
pub fn dmin_eps_direct(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    Ok(smooth_dmin_subalgebra(rho, n, eps, opts)?.value_bits)
}

/// D_min^ε(ρ‖N) through the dilation: −H_max^ε(E|A) on VρV*, computed via
/// the purification ξ_EAF (H_min^ε(E|F) SDP for ε > 0).
pub fn dmin_eps_dilated(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let v = stinespring(n);
    let xi = build_xi(&v, rho)?;
    let omega_ef = xi.marginal(&[0, 2])?;
    let r = hmin_eps(&omega_ef, xi.dim_e, xi.dim_f, eps, opts)?;
    Ok(r.value_bits)
}

/// D_α(ρ‖N) through the dilation: −H_α(E|A) on VρV*.
pub fn renyi_dilated(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    alpha: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let v = stinespring(n);
    let omega = dilate_state(&v, rho)?;
    Ok(-conditional_renyi(omega.matrix(), v.dim_env(), v.dim_in(), alpha, opts)?.value_bits)
}

#[derive(Debug, Clone, Serialize)]
pub struct DualityRow {
    pub quantity: Quantity,
    pub direct: f64,
    pub dilated: f64,
    pub diff: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct DualityReport {
    pub rows: Vec<DualityRow>,
    pub max_diff: f64,
    pub all_pass: bool,
}

/// Compare direct subalgebra solvers against conditional-entropy solvers on
/// the dilated state, for D_max^ε, D_min^ε over `eps_list` and D_α over
/// `alpha_list`. Tolerance per row: max(1e−5, 20·opts.tol).
pub fn duality_check(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps_list: &[f64],
    alpha_list: &[f64],
    opts: &SolverOptions,
) -> Result<DualityReport> {
    let tol_check = (20.0 * opts.tol).max(1e-5);
    let mut rows = Vec::new();
    for &eps in eps_list {
        let (dmax_d, _) = dmax_eps_direct(rho, n, eps, opts)?;
        let (dmax_t, _) = dmax_eps_dilated(rho, n, eps, opts)?;
        rows.push(make_row(Quantity::DmaxEps(eps), dmax_d, dmax_t, tol_check));
        let dmin_d = dmin_eps_direct(rho, n, eps, opts)?;
        let dmin_t = dmin_eps_dilated(rho, n, eps, opts)?;
        rows.push(make_row(Quantity::DminEps(eps), dmin_d, dmin_t, tol_check));
    }
    for &alpha in alpha_list {
        let direct = renyi_subalgebra(rho, n, alpha, opts)?.value_bits;
        let dilated = renyi_dilated(rho, n, alpha, opts)?;
        rows.push(make_row(Quantity::Dalpha(alpha), direct, dilated, tol_check));
    }
    let max_diff = rows.iter().fold(0.0f64, |a, r| a.max(r.diff));
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(DualityReport {
        rows,
        max_diff,
        all_pass,
    })
}

fn make_row(q: Quantity, direct: f64, dilated: f64, tol: f64) -> DualityRow {
    let diff = if direct.is_infinite() && dilated.is_infinite() {
        0.0
    } else {
        (direct - dilated).abs()
    };
    DualityRow {
        quantity: q,
        direct,
        dilated,
        diff,
        pass: diff <= tol,
    }
}

/// Triple-duality report: D_max^ε/D_min^ε against H_max^ε/H_min^ε of the
/// (E|F) marginal of ξ_EAF, plus the α↔β conjugate-pair rows (2 = 1/α+1/β).
pub fn triple_duality_check(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    alpha_list: &[f64],
    opts: &SolverOptions,
) -> Result<DualityReport> {
    let tol_check = (20.0 * opts.tol).max(1e-5);
    let v = stinespring(n);
    let xi = build_xi(&v, rho)?;
    let omega_ef = xi.marginal(&[0, 2])?;
    let (d_e, d_f) = (xi.dim_e, xi.dim_f);
    let mut rows = Vec::new();

    // D_max^ε(ρ‖N) = H_max^ε(E|F)_ξ — the right side through a fresh
    // purification of the EF marginal
    let (dmax_d, _) = dmax_eps_direct(rho, n, eps, opts)?;
    let hmax_ef = if eps == 0.0 {
        fmax_one_sided(&omega_ef, d_e, d_f, opts)?.fidelity_sq_log2_twice
    } else {
        let w = DensityOperator::substate(omega_ef.clone())?;
        let (psi, d_f2) = crate::dilation::purify(&w)?;
        let full = &psi * psi.adjoint();
        let omega_ef2 = partial_trace(&full, &[d_e * d_f, d_f2], &[0])?;
        // keep E, trace the original F, keep the fresh purifier
        let omega_e_f2 = partial_trace(
            &crate::linops::permute_factors(&(&psi * psi.adjoint()), &[d_e, d_f, d_f2], &[0, 1, 2])?,
            &[d_e, d_f, d_f2],
            &[0, 2],
        )?;
        let _ = omega_ef2;
        -hmin_eps(&omega_e_f2, d_e, d_f2, eps, opts)?.value_bits
    };
    rows.push(make_row(Quantity::DmaxEps(eps), dmax_d, hmax_ef, tol_check));

    // D_min^ε(ρ‖N) = H_min^ε(E|F)_ξ
    let dmin_d = dmin_eps_direct(rho, n, eps, opts)?;
    let hmin_ef = hmin_eps(&omega_ef, d_e, d_f, eps, opts)?.value_bits;
    rows.push(make_row(Quantity::DminEps(eps), dmin_d, hmin_ef, tol_check));

    // conjugate pairs: D_α(ρ‖N) = H_β(E|F)_ξ with 1/α + 1/β = 2
    for &alpha in alpha_list {
        let beta = if alpha.is_infinite() {
            0.5
        } else if alpha == 0.5 {
            f64::INFINITY
        } else {
            1.0 / (2.0 - 1.0 / alpha)
        };
        let direct = renyi_subalgebra(rho, n, alpha, opts)?.value_bits;
        let rhs = conditional_renyi(&omega_ef, d_e, d_f, beta, opts)?.value_bits;
        rows.push(make_row(Quantity::Dalpha(alpha), direct, rhs, tol_check));
    }
    let max_diff = rows.iter().fold(0.0f64, |a, r| a.max(r.diff));
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(DualityReport {
        rows,
        max_diff,
        all_pass,
    })
}

/// One row of the finite-n AEP table (all per-copy values in bits).
#[derive(Debug, Clone, Serialize)]
pub struct AepRow {
    pub n: usize,
    pub dmax_eps_per_n: f64,
    /// certificate gap of the smoothing program behind the D_max^ε cell
    pub dmax_gap: f64,
    /// dilated-route value; None when the (E,F) dimension cap is exceeded
    pub dmin_eps_per_n: Option<f64>,
    pub dh_eps_per_n: f64,
    pub d: f64,
    /// (1/n)·D_max^ε(ρⁿ‖E(ρ)ⁿ) — the proof's one-sided upper bound
    pub dmax_fixed_bound_per_n: f64,
    /// eq:3 lower bound on D_H^ε per copy
    pub dh_lower_per_n: f64,
    /// measured-fidelity upper bound on D_H^ε per copy (None when ε ≥ F²)
    pub dh_upper_per_n: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AepTable {
    pub epsilon: f64,
    pub rows: Vec<AepRow>,
}

/// Finite-n AEP scan of (1/n)·D_max^ε, D_min^ε, D_H^ε on ρⁿ vs N^⊗n,
/// against the constant line D(ρ‖N). Dimension cap: d^n_max ≤ 512; the
/// dilated D_min^ε row additionally needs d_E·d_F ≤ 64.
pub fn aep_trace(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    n_max: usize,
    opts: &SolverOptions,
) -> Result<AepTable> {
    let d_line = subalgebra_relative_entropy(rho, n);
    let e_rho = n.conditional_expectation(rho.matrix())?;
    let mut rows = Vec::new();
    let mut rho_n = rho.matrix().clone();
    let mut e_n = e_rho.clone();
    for copies in 1..=n_max {
        if copies > 1 {
            rho_n = kron(&rho_n, rho.matrix());
            e_n = kron(&e_n, &e_rho);
        }
        let n_pow = n.tensor_power(copies)?;
        let rho_big = DensityOperator::state(rho_n.clone())?;
        let inv_n = 1.0 / copies as f64;

        let dmax_solve = smooth_dmax_subalgebra(&rho_big, &n_pow, eps, opts)?;
        let dmax = dmax_solve.value_bits;
        let dmax_gap = dmax_solve.solved.cert.gap;
        let dh = dh_subalgebra(&rho_big, &n_pow, eps, opts)?.value_bits;
        let vshape = stinespring(&n_pow);
        let df = rho_big.rank();
        let dmin = if vshape.dim_env() * df <= 64 {
            Some(dmin_eps_dilated(&rho_big, &n_pow, eps, opts)?)
        } else {
            None
        };
        let dmax_fixed = dmax_eps_fixed_sigma(&rho_big, &e_n, eps, opts)?.value_bits;

        // eq:3: D_H^ε ≥ D_max^{√(1−ε)} − log₂(1/(1−ε))
        let eps_big = (1.0 - eps).sqrt();
        let dh_lower = smooth_dmax_subalgebra(&rho_big, &n_pow, eps_big, opts)?.value_bits
            - (1.0 / (1.0 - eps)).log2();
        // measured-fidelity: D_H^ε ≤ −2·log₂(2^{−D_min/2} − √ε)
        let dmin0 = {
            let f = fmax_subalgebra(rho_big.matrix(), &n_pow, opts)?.fidelity;
            -2.0 * f.max(1e-300).log2()
        };
        let root = 2.0f64.powf(-dmin0 / 2.0) - eps.sqrt();
        let dh_upper = if root > 0.0 {
            Some(-2.0 * root.log2() * inv_n)
        } else {
            None
        };

        rows.push(AepRow {
            n: copies,
            dmax_eps_per_n: dmax * inv_n,
            dmax_gap,
            dmin_eps_per_n: dmin.map(|v| v * inv_n),
            dh_eps_per_n: dh * inv_n,
            d: d_line,
            dmax_fixed_bound_per_n: dmax_fixed * inv_n,
            dh_lower_per_n: dh_lower * inv_n,
            dh_upper_per_n: dh_upper,
        });
    }
    Ok(AepTable {
        epsilon: eps,
        rows,
    })
}

/// D_H^ε(ρ^⊗copies‖N^⊗copies) together with its eq:3 lower bound and the
/// measured-fidelity upper bound (per copy for the upper bound; absolute
/// bits otherwise). Drives the Stein finite-n scan.
pub fn dh_and_bounds_bits(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    copies: usize,
    opts: &SolverOptions,
) -> Result<(f64, f64, Option<f64>)> {
    let n_pow = n.tensor_power(copies)?;
    let mut rho_n = rho.matrix().clone();
    for _ in 1..copies {
        rho_n = kron(&rho_n, rho.matrix());
    }
    let rho_big = DensityOperator::state(rho_n)?;
    let dh = dh_subalgebra(&rho_big, &n_pow, eps, opts)?.value_bits;
    let eps_big = (1.0 - eps).sqrt();
    let lower = smooth_dmax_subalgebra(&rho_big, &n_pow, eps_big, opts)?.value_bits
        - (1.0 / (1.0 - eps)).log2();
    let f = fmax_subalgebra(rho_big.matrix(), &n_pow, opts)?.fidelity;
    let dmin0 = -2.0 * f.max(1e-300).log2();
    let root = 2.0f64.powf(-dmin0 / 2.0) - eps.sqrt();
    let upper = if root > 0.0 {
        Some(-2.0 * root.log2() / copies as f64)
    } else {
        None
    };
    Ok((dh, lower, upper))
}

/// Eq. (eq:3) slack D_H^ε(ρ‖N) + log₂(1/(1−ε)) − D_max^{√(1−ε)}(ρ‖N);
/// nonnegative when the inequality holds.
pub fn eq3_slack(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    let dh = dh_subalgebra(rho, n, eps, opts)?.value_bits;
    let dmax_sm = smooth_dmax_subalgebra(rho, n, (1.0 - eps).sqrt(), opts)?.value_bits;
    Ok(dh + (1.0 / (1.0 - eps)).log2() - dmax_sm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{cr, identity, trace_re, CVec};
    use crate::rand_util::{random_density, random_pure, rng_from_seed};

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    fn plus() -> DensityOperator {
        DensityOperator::pure(&CVec::from_vec(vec![cr(1.0), cr(1.0)])).unwrap()
    }

    #[test]
    fn relative_entropy_trivial_algebra_closed_form() {
        // D(ρ‖C1) = log₂ d − H(ρ)
        let mut rng = rng_from_seed(1);
        for _ in 0..5 {
            let rho = random_density(3, 3, &mut rng);
            let n = SubalgebraStructure::make_trivial(3);
            let d = subalgebra_relative_entropy(&rho, &n);
            let expect = 3.0f64.log2() - vn_entropy(rho.matrix());
            assert!((d - expect).abs() < 1e-9, "{d} vs {expect}");
        }
    }

    #[test]
    fn subalgebra_relative_entropy_additivity() {
        let mut rng = rng_from_seed(2);
        let n = SubalgebraStructure::make_diagonal(2);
        let rho = random_density(2, 2, &mut rng);
        let d1 = subalgebra_relative_entropy(&rho, &n);
        let n2 = n.tensor_power(2).unwrap();
        let rho2 = DensityOperator::state(kron(rho.matrix(), rho.matrix())).unwrap();
        let d2 = subalgebra_relative_entropy(&rho2, &n2);
        assert!((d2 - 2.0 * d1).abs() < 1e-9, "{d2} vs {}", 2.0 * d1);
        // member → 0
        let member = n.random_state(&mut rng);
        assert!(subalgebra_relative_entropy(&member, &n).abs() < 1e-10);
        // |+⟩⟨+| → 1 bit
        assert!((subalgebra_relative_entropy(&plus(), &n) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn conditional_entropy_anchors() {
        let mut rng = rng_from_seed(3);
        // product state: H(A|B) = H(ρ_A)
        let a = random_density(2, 2, &mut rng);
        let b = random_density(2, 2, &mut rng);
        let prod = kron(a.matrix(), b.matrix());
        let h = conditional_entropy(&prod, (2, 2), CondKind::H, 0.0, &opts()).unwrap();
        assert!((h - vn_entropy(a.matrix())).abs() < 1e-9);
        // pure ρ_A in a product: H_min(A|B) = 0
        let pure_a = random_pure(2, &mut rng);
        let prod2 = kron(pure_a.matrix(), b.matrix());
        let hmin = conditional_entropy(&prod2, (2, 2), CondKind::Hmin, 0.0, &opts()).unwrap();
        assert!(hmin.abs() < 1e-6, "{hmin}");
        // maximally entangled: H_min(A|B) = −1
        let mut bell = CVec::zeros(4);
        bell[0] = cr(1.0 / 2.0f64.sqrt());
        bell[3] = cr(1.0 / 2.0f64.sqrt());
        let rho = &bell * bell.adjoint();
        let hm = conditional_entropy(&rho, (2, 2), CondKind::Hmin, 0.0, &opts()).unwrap();
        assert!((hm + 1.0).abs() < 1e-6, "{hm}");
    }

    #[test]
    fn hmax_duality_against_direct_sdp() {
        // H_max^ε via purification duality equals the ε=0 SDP at ε=0
        let mut rng = rng_from_seed(5);
        let rho = random_density(4, 4, &mut rng);
        let direct = conditional_entropy(rho.matrix(), (2, 2), CondKind::Hmax, 0.0, &opts())
            .unwrap();
        // tiny ε should approach it from below (smoothing shrinks H_max)
        let sm = conditional_entropy(rho.matrix(), (2, 2), CondKind::Hmax, 1e-4, &opts())
            .unwrap();
        assert!(sm <= direct + 1e-4, "{sm} vs {direct}");
        assert!((sm - direct).abs() < 0.05);
    }

    #[test]
    fn duality_qubit_battery_small() {
        let mut rng = rng_from_seed(7);
        for n in [
            SubalgebraStructure::make_diagonal(2),
            SubalgebraStructure::make_trivial(2),
            SubalgebraStructure::make_full(2),
        ] {
            for _ in 0..3 {
                let rho = random_density(2, 2, &mut rng);
                let rep = duality_check(&rho, &n, &[0.0, 0.1], &[0.5, 1.0, 2.0, f64::INFINITY], &opts())
                    .unwrap();
                assert!(
                    rep.all_pass,
                    "duality failed on {:?}: {:#?}",
                    n.blocks(),
                    rep.rows
                );
            }
        }
    }

    #[test]
    fn duality_alpha_one_is_exact_identity() {
        // α = 1: −H(E|A)_{VρV*} = D(ρ‖N) via H(E_N ρ) − H(ρ)
        let mut rng = rng_from_seed(9);
        let n = SubalgebraStructure::make_tensor_factor(2, 2, true);
        let rho = random_density(4, 4, &mut rng);
        let direct = subalgebra_relative_entropy(&rho, &n);
        let dilated = renyi_dilated(&rho, &n, 1.0, &opts()).unwrap();
        assert!((direct - dilated).abs() < 1e-9, "{direct} vs {dilated}");
    }

    #[test]
    fn triple_duality_qubit() {
        let mut rng = rng_from_seed(11);
        let n = SubalgebraStructure::make_diagonal(2);
        for eps in [0.0, 0.1] {
            let rho = random_density(2, 2, &mut rng);
            let rep = triple_duality_check(&rho, &n, eps, &[0.5, 1.0, 2.0], &opts()).unwrap();
            assert!(rep.all_pass, "ε={eps}: {:#?}", rep.rows);
        }
    }

    #[test]
    fn aep_member_rows_vanish() {
        let mut rng = rng_from_seed(13);
        let n = SubalgebraStructure::make_diagonal(2);
        let member = n.random_state(&mut rng);
        let table = aep_trace(&member, &n, 0.1, 2, &opts()).unwrap();
        for row in &table.rows {
            assert!(row.d.abs() < 1e-9);
            assert!(row.dmax_eps_per_n <= 1e-6, "{}", row.dmax_eps_per_n);
            // D_H^ε of a member is exactly log₂(1/(1−ε))/n
            let expect = (1.0f64 / 0.9).log2() / row.n as f64;
            assert!((row.dh_eps_per_n - expect).abs() < 1e-6);
        }
    }

    #[test]
    fn aep_plus_state_d_row_constant() {
        let n = SubalgebraStructure::make_diagonal(2);
        let table = aep_trace(&plus(), &n, 0.1, 3, &opts()).unwrap();
        for row in &table.rows {
            assert!((row.d - 1.0).abs() < 1e-9);
            // proof-side bound: smoothing against N is at most smoothing
            // against the fixed E(ρ)-power
            assert!(row.dmax_eps_per_n <= row.dmax_fixed_bound_per_n + 1e-6);
            // eq:3 window around D_H
            assert!(row.dh_eps_per_n >= row.dh_lower_per_n - 1e-6);
            if let Some(up) = row.dh_upper_per_n {
                assert!(row.dh_eps_per_n <= up + 1e-6);
            }
        }
        // gap shrinkage toward D between n = 1 and n = 3
        let g1 = (table.rows[0].dmax_eps_per_n - 1.0).abs();
        let g3 = (table.rows[2].dmax_eps_per_n - 1.0).abs();
        assert!(g3 < g1, "gap did not shrink: {g1} -> {g3}");
    }

    #[test]
    fn aep_eps_monotone() {
        let n = SubalgebraStructure::make_diagonal(2);
        let t1 = aep_trace(&plus(), &n, 0.1, 2, &opts()).unwrap();
        let t2 = aep_trace(&plus(), &n, 0.3, 2, &opts()).unwrap();
        for (r1, r2) in t1.rows.iter().zip(&t2.rows) {
            assert!(r2.dmax_eps_per_n <= r1.dmax_eps_per_n + 1e-7);
        }
    }

    #[test]
    fn eq3_holds_on_random_instances() {
        let mut rng = rng_from_seed(15);
        for n in [
            SubalgebraStructure::make_diagonal(2),
            SubalgebraStructure::make_trivial(3),
        ] {
            for eps in [0.1, 0.3] {
                let rho = random_density(n.ambient_dim(), n.ambient_dim(), &mut rng);
                let slack = eq3_slack(&rho, &n, eps, &opts()).unwrap();
                assert!(slack >= -1e-6, "eq:3 violated: slack {slack}");
            }
        }
    }

    #[test]
    fn report_serializes() {
        let rep = EntropyReport {
            quantity: Quantity::DmaxEps(0.1),
            value_bits: 1.0,
            route: Route::Direct,
            certificate_gap: Some(1e-8),
        };
        let s = serde_json::to_string(&rep).unwrap();
        assert!(s.contains("value_bits"));
        let _ = identity(2);
        let _ = trace_re(&identity(2));
    }
}
