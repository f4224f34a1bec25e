//! Closed-form two-state divergences: relative entropy, sandwiched Rényi,
//! max- and min-relative entropy. Support violations return the +∞ sentinel
//! rather than an error so batch scans complete.

use crate::linops::{
    eig_hermitian, matrix_power, root_fidelity_raw, trace_re, CMat, RANK_TOL,
};

/// Mass of ρ outside the support of σ (σ given by its eigendecomposition).
fn mass_outside_support(rho: &CMat, svals: &[f64], svecs: &CMat) -> f64 {
    let lmax = svals.iter().fold(0.0f64, |a, &l| a.max(l)).max(1e-300);
    let mut mass = 0.0;
    for (i, &l) in svals.iter().enumerate() {
        if l <= RANK_TOL * lmax {
            let v = svecs.column(i);
            mass += (v.adjoint() * rho * v)[(0, 0)].re;
        }
    }
    mass.max(0.0)
}

/// D(ρ‖σ) = tr ρ(log₂ρ − log₂σ); +∞ when supp ρ ⊄ supp σ.
pub fn relative_entropy(rho: &CMat, sigma: &CMat) -> f64 {
    let (rvals, _rvecs) = eig_hermitian(rho).expect("Hermitian state");
    let (svals, svecs) = eig_hermitian(sigma).expect("Hermitian state");
    if mass_outside_support(rho, svals.as_slice(), &svecs) > 1e-10 {
        return f64::INFINITY;
    }
    let rmax = rvals.iter().fold(0.0f64, |a, &l| a.max(l)).max(1e-300);
    let mut h = 0.0; // tr ρ log₂ ρ
    for &l in rvals.iter() {
        if l > RANK_TOL * rmax {
            h += l * l.log2();
        }
    }
    let smax = svals.iter().fold(0.0f64, |a, &l| a.max(l)).max(1e-300);
    let mut cross = 0.0; // tr ρ log₂ σ
    for (j, &mu) in svals.iter().enumerate() {
        if mu > RANK_TOL * smax {
            let v = svecs.column(j);
            let w = (v.adjoint() * rho * v)[(0, 0)].re;
            cross += w * mu.log2();
        }
    }
    h - cross
}

/// D_max(ρ‖σ) = log₂ λ_max(σ^{−1/2} ρ σ^{−1/2}) on the support of σ;
/// +∞ sentinel on support violation.
pub fn dmax_pair(rho: &CMat, sigma: &CMat) -> f64 {
    let (svals, svecs) = eig_hermitian(sigma).expect("Hermitian state");
    if mass_outside_support(rho, svals.as_slice(), &svecs) > 1e-10 {
        return f64::INFINITY;
    }
    let isq = matrix_power(sigma, -0.5).expect("PSD");
    let m = &isq * rho * isq;
    let (vals, _) = eig_hermitian(&m).expect("Hermitian");
    let top = vals[vals.len() - 1].max(0.0);
    if top <= 0.0 {
        return f64::NEG_INFINITY;
    }
    top.log2()
}

/// D_min(ρ‖σ) = −2 log₂ tr|√ρ√σ| (the D_{1/2} convention).
pub fn dmin_pair(rho: &CMat, sigma: &CMat) -> f64 {
    let sr = matrix_power(rho, 0.5).expect("PSD");
    let ss = matrix_power(sigma, 0.5).expect("PSD");
    let f: f64 = (&sr * &ss).svd(false, false).singular_values.iter().sum();
    if f <= 0.0 {
        return f64::INFINITY;
    }
    -2.0 * f.log2()
}

/// Sandwiched Rényi divergence
/// D_α(ρ‖σ) = (1/(α−1)) log₂ tr[(σ^{(1−α)/2α} ρ σ^{(1−α)/2α})^α].
///
/// α = 1 dispatches to the relative entropy, α = ∞ to D_max, α = 1/2 to
/// −2log₂ tr|√ρ√σ|. For α > 1 a support violation returns +∞.
pub fn renyi_pair(rho: &CMat, sigma: &CMat, alpha: f64) -> f64 {
    assert!(alpha >= 0.5, "sandwiched Rényi needs α ≥ 1/2");
    if alpha == 1.0 {
        return relative_entropy(rho, sigma);
    }
    if alpha.is_infinite() {
        return dmax_pair(rho, sigma);
    }
    if alpha > 1.0 {
        let (svals, svecs) = eig_hermitian(sigma).expect("Hermitian state");
        if mass_outside_support(rho, svals.as_slice(), &svecs) > 1e-10 {
            return f64::INFINITY;
        }
    }
    let expo = (1.0 - alpha) / (2.0 * alpha);
    let sc = matrix_power(sigma, expo).expect("PSD");
    let inner = &sc * rho * &sc;
    let (vals, _) = eig_hermitian(&inner).expect("Hermitian");
    let q: f64 = vals
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| l.powf(alpha))
        .sum();
    if q <= 0.0 {
        return f64::INFINITY;
    }
    q.log2() / (alpha - 1.0)
}

/// Root fidelity of raw PSD substate matrices, re-exported next to the
/// divergences that consume it.
pub fn fidelity_pair(rho: &CMat, sigma: &CMat) -> f64 {
    root_fidelity_raw(rho, sigma)
}

/// log₂ min{λ : ρ ⪯ λ·E_N(ρ)} — the pinning-relative max divergence.
pub fn dmax_pinned_pair(rho: &CMat, pinned: &CMat) -> f64 {
    dmax_pair(rho, pinned)
}

/// Trace helper for bits-valued objective conversions.
pub fn trace_bits(m: &CMat) -> f64 {
    trace_re(m).log2()
}
