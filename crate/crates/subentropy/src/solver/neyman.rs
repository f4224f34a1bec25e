//! Exact Neyman–Pearson optimizer for the binary test
//! min tr(Qσ) s.t. 0 ⪯ Q ⪯ 1, tr(Qρ) ≥ 1−ε.
//!
//! The optimal test is a spectral threshold on the pencil ρ − sσ plus a
//! randomized completion on its near-kernel: bisection brackets the
//! multiplier s, then eigendirections are filled in eigenvalue order with a
//! fractional weight on the crossing direction so tr(Qρ) = 1−ε exactly.

use crate::linops::{eig_hermitian, identity, CMat};

#[derive(Debug, Clone)]
pub struct NeymanPearsonResult {
    /// minimal type-II error β = tr(Qσ)
    pub beta: f64,
    /// the optimal test operator
    pub q: CMat,
    /// −log₂ β, i.e. D_H^ε(ρ‖σ)
    pub dh_bits: f64,
}

/// Solve the Neyman–Pearson problem for states ρ, σ and 0 ≤ ε < 1.
pub fn neyman_pearson(rho: &CMat, sigma: &CMat, eps: f64) -> NeymanPearsonResult {
    assert!((0.0..1.0).contains(&eps), "ε must lie in [0,1)");
    let d = rho.nrows();
    let target = 1.0 - eps;

    // type-I success of the strict-threshold test at multiplier s
    let alpha_at = |s: f64| -> f64 {
        let m = rho - sigma.scale(s);
        let (vals, vecs) = eig_hermitian(&m).expect("Hermitian");
        let mut a = 0.0;
        for i in 0..d {
            if vals[i] > 0.0 {
                let v = vecs.column(i);
                a += (v.adjoint() * rho * v)[(0, 0)].re;
            }
        }
        a
    };

    // bracket the crossing of α(s) = target
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while alpha_at(hi) > target && hi < 1e12 {
        hi *= 4.0;
    }
    if alpha_at(hi) > target {
        // σ vanishes on enough of ρ's support to reach the constraint free
        let (q, beta) = fill_test(rho, sigma, hi, target);
        let dh = if beta <= 1e-300 {
            f64::INFINITY
        } else {
            -beta.log2()
        };
        return NeymanPearsonResult { beta, q, dh_bits: dh };
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if alpha_at(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * hi.max(1.0) {
            break;
        }
    }

    let (q, beta) = fill_test(rho, sigma, hi, target);
    let dh = if beta <= 1e-300 {
        f64::INFINITY
    } else {
        -beta.log2()
    };
    NeymanPearsonResult { beta, q, dh_bits: dh }
}

/// Fill eigendirections of ρ − sσ in descending eigenvalue order until the
/// type-I constraint is met, with a fractional weight on the last one.
fn fill_test(rho: &CMat, sigma: &CMat, s: f64, target: f64) -> (CMat, f64) {
    let d = rho.nrows();
    let m = rho - sigma.scale(s);
    let (vals, vecs) = eig_hermitian(&m).expect("Hermitian");
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let mut q = CMat::zeros(d, d);
    let mut acc = 0.0;
    for &i in &order {
        let v = vecs.column(i);
        let w = (v.adjoint() * rho * v)[(0, 0)].re.max(0.0);
        let proj = v * v.adjoint();
        if acc + w < target - 1e-15 {
            q += proj;
            acc += w;
        } else {
            let gamma = if w > 1e-300 {
                ((target - acc) / w).clamp(0.0, 1.0)
            } else {
                0.0
            };
            q += proj.scale(gamma);
            acc += gamma * w;
            if gamma < 1.0 {
                break;
            }
        }
    }
    let beta = crate::linops::trace_re(&(&q * sigma)).max(0.0);
    (q, beta)
}

/// The same problem as a generic SDP (cross-validation of the spectral
/// optimizer): min tr(Qσ) s.t. 0 ⪯ Q ⪯ 1, tr(Qρ) ≥ 1−ε, for ε > 0.
pub fn neyman_pearson_sdp(
    rho: &CMat,
    sigma: &CMat,
    eps: f64,
    opts: &super::ipm::SolverOptions,
) -> Result<(f64, super::ipm::CertifiedSolve), super::ipm::IpmError> {
    use super::ipm::{ConeProgram, LinBlock, PsdBlock};
    assert!(eps > 0.0, "the SDP route needs a strict interior (ε > 0)");
    let d = rho.nrows();
    let mut prog = ConeProgram::new();
    let q = prog.herm_var(d, &identity(d).scale(1.0 - eps / 2.0));
    // objective tr(Qσ)
    for local in 0..super::ipm::herm_param_count(d) {
        let mut coeff = 0.0;
        for (r, c2, w) in super::ipm::herm_param_entries(d, local) {
            coeff += (w * sigma[(c2, r)]).re;
        }
        prog.objective[q.offset + local] = coeff;
    }
    let mut pos = PsdBlock::new(d);
    pos.add_herm(q, &[(0, 1)], 1.0);
    prog.psd.push(pos);
    let mut cap = PsdBlock::new(d);
    cap.f0 = identity(d);
    cap.add_herm(q, &[(0, 1)], -1.0);
    prog.psd.push(cap);
    let mut lin = LinBlock {
        g0: -(1.0 - eps),
        a: Vec::new(),
    };
    for local in 0..super::ipm::herm_param_count(d) {
        let mut coeff = 0.0;
        for (r, c2, w) in super::ipm::herm_param_entries(d, local) {
            coeff += (w * rho[(c2, r)]).re;
        }
        if coeff.abs() > 1e-300 {
            lin.a.push((q.offset + local, coeff));
        }
    }
    prog.lin.push(lin);
    let cert = super::ipm::solve(&prog, opts)?;
    let value = cert.value;
    Ok((value, super::ipm::CertifiedSolve { program: prog, cert }))
}
