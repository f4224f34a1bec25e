//! Assemblers for the structured cone programs behind the subalgebra
//! entropies.
//!
//! Smoothing programs use a reduced formulation: the smoothed substate ρ'
//! never appears as a variable. The fidelity cross block Z (rows on the
//! support of the anchor state) determines ρ' = Z*D⁻¹Z via the Schur
//! complement, the ball radius becomes the linear constraint
//! Re tr(V_r Z) ≥ √(1−ε²), and tr ρ' ≤ 1 becomes ‖D^{−1/2}Z‖_F ≤ 1.
//! The reduction is exact because the ball ranges over substates.

use crate::algebra::SubalgebraStructure;
use crate::linops::{
    cr, eig_hermitian, identity, matrix_power, trace_re, CMat, DensityOperator, RANK_TOL,
};
use crate::solver::ipm::{
    self, herm_param_count, herm_param_entries, CertifiedSolve, ConeProgram, GenVar, HermVar,
    IpmError, LinBlock, PsdBlock, SocBlock, SolverOptions,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("interior point failure: {0}")]
    Ipm(#[from] IpmError),
    #[error("epsilon {0} outside [0, 1)")]
    InvalidEpsilon(f64),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("problem infeasible: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, SolverError>;

/// Eigen-restriction of a PSD matrix to its support.
pub struct SupportBasis {
    /// kept eigenvalues, descending
    pub vals: Vec<f64>,
    /// d×r matrix of the matching eigenvectors
    pub vr: CMat,
    pub rank: usize,
}

pub fn support_basis(m: &CMat) -> SupportBasis {
    let (vals, vecs) = eig_hermitian(m).expect("Hermitian");
    let lmax = vals.iter().fold(0.0f64, |a, &l| a.max(l)).max(1e-300);
    let mut kept = Vec::new();
    for i in (0..vals.len()).rev() {
        if vals[i] > RANK_TOL * lmax {
            kept.push(i);
        }
    }
    let r = kept.len().max(1);
    let mut vr = CMat::zeros(m.nrows(), r);
    let mut kv = Vec::with_capacity(r);
    for (c, &i) in kept.iter().enumerate() {
        vr.set_column(c, &vecs.column(i));
        kv.push(vals[i]);
    }
    if kept.is_empty() {
        kv.push(lmax);
    }
    SupportBasis {
        vals: kv,
        vr,
        rank: r,
    }
}

/// Fidelity-optimal cross block for anchor (D_r, V_r) and candidate ρ':
/// Z = D^{1/2} V_r* √ρ' Ω with the Uhlmann phase Ω, so that
/// Z*D⁻¹Z ⪯ ρ' and Re tr(V_r Z) = tr|√ρ√ρ'|.
pub fn uhlmann_cross(sb: &SupportBasis, rho_prime: &CMat) -> CMat {
    let r = sb.rank;
    let sqrt_rp = matrix_power(rho_prime, 0.5).expect("PSD");
    let mut d_half = CMat::zeros(r, r);
    for i in 0..r {
        d_half[(i, i)] = cr(sb.vals[i].max(0.0).sqrt());
    }
    // Z = D^{1/2}·Q*·√ρ' with Q the polar isometry of M̃ = √ρ'·√ρ·V_r:
    // then Z*D⁻¹Z = √ρ'·QQ*·√ρ' ⪯ ρ' (support preserved) while
    // Re tr(V_r Z) = ‖M̃‖₁ = tr|√ρ√ρ'|.
    let m_tilde = &sqrt_rp * &sb.vr * &d_half; // d×r
    let svd = m_tilde.svd(true, true);
    let u1 = svd.u.expect("requested");
    let v1t = svd.v_t.expect("requested");
    d_half * v1t.adjoint() * u1.adjoint() * sqrt_rp
}

/// Coefficients of v ↦ tr(X(v)·C) over the real parameters of Hermitian X.
pub fn herm_inner_coeffs(c_mat: &CMat) -> Vec<f64> {
    let p = c_mat.nrows();
    let mut out = vec![0.0; herm_param_count(p)];
    for (local, coeff) in out.iter_mut().enumerate() {
        for (r, c2, w) in herm_param_entries(p, local) {
            *coeff += (w * c_mat[(c2, r)]).re;
        }
    }
    out
}

/// Coefficients of Re tr(L·Z) over the (re, im) parameters of Z (p×q),
/// L being q×p.
pub fn gen_trace_coeffs_pub(l: &CMat, p: usize, q: usize) -> Vec<f64> {
    gen_trace_coeffs(l, p, q)
}

fn gen_trace_coeffs(l: &CMat, p: usize, q: usize) -> Vec<f64> {
    let mut out = vec![0.0; 2 * p * q];
    for i in 0..p {
        for j in 0..q {
            out[2 * (i * q + j)] = l[(j, i)].re;
            out[2 * (i * q + j) + 1] = -l[(j, i)].im;
        }
    }
    out
}

/// Attach the ε-ball machinery (LIN fidelity floor + SOC trace cap) for a
/// cross variable Z anchored at (D_r, V_r).
fn add_ball_constraints(
    prog: &mut ConeProgram,
    z: GenVar,
    sb: &SupportBasis,
    eps: f64,
) {
    let coeffs = gen_trace_coeffs(&sb.vr, z.p, z.q);
    let floor = (1.0 - eps * eps).max(0.0).sqrt();
    let lin = LinBlock {
        g0: -floor,
        a: coeffs
            .iter()
            .enumerate()
            .filter(|(_, c2)| c2.abs() > 1e-300)
            .map(|(i, c2)| (z.offset + i, *c2))
            .collect(),
    };
    prog.lin.push(lin);

    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new()];
    let mut s0 = vec![1.0];
    for i in 0..z.p {
        let w = 1.0 / sb.vals[i].max(1e-300).sqrt();
        for j in 0..z.q {
            for k in 0..2 {
                rows.push(vec![(z.offset + 2 * (i * z.q + j) + k, w)]);
                s0.push(0.0);
            }
        }
    }
    prog.soc.push(SocBlock { s0, rows });
}

fn diag_block(vals: &[f64]) -> CMat {
    let r = vals.len();
    CMat::from_fn(r, r, |i, j| if i == j { cr(vals[i]) } else { cr(0.0) })
}

/// Add the canonical block variables of σ ∈ N (components x_k ⪰ 0 implied by
/// the enclosing LMI) and return them with their trace-weight coefficients.
fn add_sigma_blocks(
    prog: &mut ConeProgram,
    n: &SubalgebraStructure,
    init_scale: f64,
) -> Vec<HermVar> {
    n.blocks()
        .iter()
        .map(|&(_, nk)| prog.herm_var(nk, &identity(nk).scale(init_scale)))
        .collect()
}

/// Result of the unsmoothed D_max(ρ‖N) program
/// min tr X s.t. X ∈ N, X ⪰ ρ.
pub struct DmaxSubalgebra {
    pub value_bits: f64,
    pub x_components: Vec<CMat>,
    /// the optimizer σ* = X*/tr X*
    pub sigma_opt: DensityOperator,
    pub solved: CertifiedSolve,
}

pub fn dmax_subalgebra(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    opts: &SolverOptions,
) -> Result<DmaxSubalgebra> {
    let d = n.ambient_dim();
    if rho.dim() != d {
        return Err(SolverError::DimensionMismatch(format!(
            "state dim {} vs ambient {}",
            rho.dim(),
            d
        )));
    }
    let rho_c = n.to_canonical(rho.matrix());
    let (vals, _) = eig_hermitian(&rho_c).expect("Hermitian");
    let lmax = vals[vals.len() - 1].max(0.0);

    let mut prog = ConeProgram::new();
    let xs: Vec<HermVar> = n
        .blocks()
        .iter()
        .map(|&(_, nk)| prog.herm_var(nk, &identity(nk).scale(lmax + 1.0)))
        .collect();
    for (k, &(m, nk)) in n.blocks().iter().enumerate() {
        for i in 0..nk {
            prog.objective[xs[k].offset + i] = m as f64;
        }
    }
    let mut blk = PsdBlock::new(d);
    blk.f0 = -rho_c.clone();
    let offs = n.offsets();
    for (k, &(m, nk)) in n.blocks().iter().enumerate() {
        let copies: Vec<(usize, usize)> = (0..m).map(|a| (offs[k] + a * nk, 1)).collect();
        blk.add_herm(xs[k], &copies, 1.0);
    }
    prog.psd.push(blk);

    let cert = ipm::solve(&prog, opts)?;
    let x_components: Vec<CMat> = n
        .blocks()
        .iter()
        .zip(&xs)
        .map(|(&(_, nk), xv)| {
            ipm::herm_build(&cert.primal[xv.offset..xv.offset + nk * nk], nk)
        })
        .collect();
    let x_amb = n
        .element_from_components(&x_components)
        .expect("component shapes");
    let tr = trace_re(&x_amb);
    let sigma_opt = DensityOperator::state(x_amb.unscale(tr))
        .map_err(|e| SolverError::DimensionMismatch(e.to_string()))?;
    Ok(DmaxSubalgebra {
        value_bits: cert.value.log2(),
        x_components,
        sigma_opt,
        solved: CertifiedSolve {
            program: prog,
            cert,
        },
    })
}

/// Result of the composite hypothesis-testing program
/// D_H^ε(ρ‖N) = −log₂ min { t : 0 ⪯ Q ⪯ 1, tr(Qρ) ≥ 1−ε, A_k(Q) ⪯ t·1 }.
pub struct DhSubalgebra {
    pub value_bits: f64,
    /// optimal test in ambient coordinates
    pub q_ambient: CMat,
    /// a worst-case state of S(N) read off the active block
    pub worst_sigma: DensityOperator,
    pub solved: CertifiedSolve,
}

pub fn dh_subalgebra(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    opts: &SolverOptions,
) -> Result<DhSubalgebra> {
    if !(0.0..1.0).contains(&eps) {
        return Err(SolverError::InvalidEpsilon(eps));
    }
    let d = n.ambient_dim();
    if rho.dim() != d {
        return Err(SolverError::DimensionMismatch(format!(
            "state dim {} vs ambient {}",
            rho.dim(),
            d
        )));
    }
    let rho_c = n.to_canonical(rho.matrix());
    let offs = n.offsets();

    if eps == 0.0 {
        return dh_subalgebra_eps0(rho, n, &rho_c, opts);
    }

    let mut prog = ConeProgram::new();
    let q = prog.herm_var(d, &identity(d).scale(1.0 - eps / 2.0));
    let t = prog.scalar_var(1.5);
    prog.objective[t.offset] = 1.0;

    let mut pos = PsdBlock::new(d);
    pos.add_herm(q, &[(0, 1)], 1.0);
    prog.psd.push(pos);
    let mut cap = PsdBlock::new(d);
    cap.f0 = identity(d);
    cap.add_herm(q, &[(0, 1)], -1.0);
    prog.psd.push(cap);
    for (k, &(m, nk)) in n.blocks().iter().enumerate() {
        let mut bk = PsdBlock::new(nk);
        bk.add_scalar(t, &identity(nk), 0);
        bk.add_herm_block_compress(q, offs[k], m, nk, 0, -1.0);
        prog.psd.push(bk);
    }
    let coeffs = herm_inner_coeffs(&rho_c);
    prog.lin.push(LinBlock {
        g0: -(1.0 - eps),
        a: coeffs
            .iter()
            .enumerate()
            .filter(|(_, c2)| c2.abs() > 1e-300)
            .map(|(i, c2)| (q.offset + i, *c2))
            .collect(),
    });

    let cert = ipm::solve(&prog, opts)?;
    let q_c = ipm::herm_build(&cert.primal[q.offset..q.offset + d * d], d);
    finish_dh(rho, n, q_c, cert, prog)
}

fn dh_subalgebra_eps0(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    rho_c: &CMat,
    opts: &SolverOptions,
) -> Result<DhSubalgebra> {
    let d = n.ambient_dim();
    let sb = support_basis(rho_c);
    let r = sb.rank;
    let offs = n.offsets();
    let p_supp = &sb.vr * sb.vr.adjoint();

    if r == d {
        // Q = 1 is forced; the program is trivial
        let q_amb = identity(d);
        let worst = n.random_state(&mut crate::rand_util::rng_from_seed(opts.seed));
        let prog = ConeProgram::new();
        let cert = ipm::SolverCertificate {
            value: 1.0,
            primal: vec![],
            dual_psd: vec![],
            dual_soc: vec![],
            dual_lin: vec![],
            gap: 0.0,
            dual_residual: 0.0,
            iterations: 0,
            tol: opts.tol,
        };
        return Ok(DhSubalgebra {
            value_bits: 0.0,
            q_ambient: n.from_canonical(&q_amb),
            worst_sigma: worst,
            solved: CertifiedSolve {
                program: prog,
                cert,
            },
        });
    }

    // complement basis
    let (vals, vecs) = eig_hermitian(rho_c).expect("Hermitian");
    let lmax = vals.iter().fold(0.0f64, |a, &l| a.max(l)).max(1e-300);
    let mut b = CMat::zeros(d, d - r);
    let mut col = 0;
    for i in 0..d {
        if vals[i] <= RANK_TOL * lmax {
            b.set_column(col, &vecs.column(i));
            col += 1;
        }
    }

    let mut prog = ConeProgram::new();
    let rv = prog.herm_var(d - r, &identity(d - r).scale(0.5));
    let t = prog.scalar_var(1.5);
    prog.objective[t.offset] = 1.0;

    let mut pos = PsdBlock::new(d - r);
    pos.add_herm(rv, &[(0, 1)], 1.0);
    prog.psd.push(pos);
    let mut cap = PsdBlock::new(d - r);
    cap.f0 = identity(d - r);
    cap.add_herm(rv, &[(0, 1)], -1.0);
    prog.psd.push(cap);

    // per-block: t·1 − A_k(P + B R B*) ⪰ 0 with dense directions for R
    for (k, &(m, nk)) in n.blocks().iter().enumerate() {
        let mut bk = PsdBlock::new(nk);
        bk.f0 = -compress_canonical_block(&p_supp, offs[k], m, nk);
        bk.add_scalar(t, &identity(nk), 0);
        for local in 0..herm_param_count(d - r) {
            let mut dir = CMat::zeros(d - r, d - r);
            for (rr, cc, w) in herm_param_entries(d - r, local) {
                dir[(rr, cc)] += w;
            }
            let big = &b * dir * b.adjoint();
            let comp = compress_canonical_block(&big, offs[k], m, nk);
            bk.add_dense_param(rv.offset + local, &(-comp), 0);
        }
        prog.psd.push(bk);
    }

    let cert = ipm::solve(&prog, opts)?;
    let r_opt = ipm::herm_build(
        &cert.primal[rv.offset..rv.offset + (d - r) * (d - r)],
        d - r,
    );
    let q_c = &p_supp + &b * r_opt * b.adjoint();
    finish_dh(rho, n, q_c, cert, prog)
}

/// (1/m)·Σ_a M[off+a·n+i, off+a·n+j] for a canonical-coordinates matrix.
fn compress_canonical_block(m_mat: &CMat, off: usize, m: usize, n: usize) -> CMat {
    let mut z = CMat::zeros(n, n);
    for a in 0..m {
        let base = off + a * n;
        for i in 0..n {
            for j in 0..n {
                z[(i, j)] += m_mat[(base + i, base + j)];
            }
        }
    }
    z.unscale(m as f64)
}

fn finish_dh(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    q_c: CMat,
    cert: ipm::SolverCertificate,
    prog: ConeProgram,
) -> Result<DhSubalgebra> {
    let offs = n.offsets();
    // worst σ: unit vector in the block whose compression peaks
    let mut best = (0usize, f64::NEG_INFINITY, CMat::zeros(1, 1));
    for (k, &(m, nk)) in n.blocks().iter().enumerate() {
        let a_k = compress_canonical_block(&q_c, offs[k], m, nk);
        let (vals, vecs) = eig_hermitian(&a_k).expect("Hermitian");
        let top = vals[nk - 1];
        if top > best.1 {
            let v = vecs.column(nk - 1);
            best = (k, top, &v * v.adjoint());
        }
    }
    let comps: Vec<CMat> = n
        .blocks()
        .iter()
        .enumerate()
        .map(|(k, &(m, nk))| {
            if k == best.0 {
                best.2.clone().unscale(m as f64)
            } else {
                CMat::zeros(nk, nk)
            }
        })
        .collect();
    let sigma = n.element_from_components(&comps).expect("shapes");
    let worst_sigma = DensityOperator::state(sigma)
        .map_err(|e| SolverError::DimensionMismatch(e.to_string()))?;
    let value_bits = -cert.value.log2();
    let _ = rho;
    Ok(DhSubalgebra {
        value_bits,
        q_ambient: n.from_canonical(&q_c),
        worst_sigma,
        solved: CertifiedSolve {
            program: prog,
            cert,
        },
    })
}

/// Result of the smoothed program
/// D_max^ε(ρ‖N) = log₂ min { tr X : X ∈ N, X ⪰ ρ', ρ' ∈ B_ε(ρ) }.
pub struct SmoothDmaxSubalgebra {
    pub value_bits: f64,
    /// the smoothing optimizer (substate witness Z*D⁻¹Z)
    pub rho_smoothed: DensityOperator,
    pub x_components: Vec<CMat>,
    pub sigma_opt: DensityOperator,
    pub solved: CertifiedSolve,
}

pub fn smooth_dmax_subalgebra(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    opts: &SolverOptions,
) -> Result<SmoothDmaxSubalgebra> {
    if !(0.0..1.0).contains(&eps) {
        return Err(SolverError::InvalidEpsilon(eps));
    }
    if eps == 0.0 {
        let base = dmax_subalgebra(rho, n, opts)?;
        return Ok(SmoothDmaxSubalgebra {
            value_bits: base.value_bits,
            rho_smoothed: rho.clone(),
            x_components: base.x_components,
            sigma_opt: base.sigma_opt,
            solved: base.solved,
        });
    }
    let d = n.ambient_dim();
    if rho.dim() != d {
        return Err(SolverError::DimensionMismatch(format!(
            "state dim {} vs ambient {}",
            rho.dim(),
            d
        )));
    }
    let rho_c = n.to_canonical(rho.matrix());
    let sb = support_basis(&rho_c);
    let r = sb.rank;
    let offs = n.offsets();
    let lmax = sb.vals[0];

    let mut prog = ConeProgram::new();
    let delta = 1e-3f64.min((1.0 - (1.0 - eps * eps).sqrt()) / 2.0);
    let z_init = uhlmann_cross(&sb, &rho_c).scale(1.0 - delta);
    let z = prog.gen_var(r, d, &z_init);
    let xs = add_sigma_blocks(&mut prog, n, lmax + 1.0);
    for (k, &(m, nk)) in n.blocks().iter().enumerate() {
        for i in 0..nk {
            prog.objective[xs[k].offset + i] = m as f64;
        }
    }

    let mut blk = PsdBlock::new(r + d);
    blk.f0
        .view_mut((0, 0), (r, r))
        .copy_from(&diag_block(&sb.vals));
    blk.add_gen(z, 0, r, 1.0);
    for (k, &(m, nk)) in n.blocks().iter().enumerate() {
        let copies: Vec<(usize, usize)> = (0..m).map(|a| (r + offs[k] + a * nk, 1)).collect();
        blk.add_herm(xs[k], &copies, 1.0);
    }
    prog.psd.push(blk);
    add_ball_constraints(&mut prog, z, &sb, eps);

    let cert = ipm::solve(&prog, opts)?;
    let z_opt = ipm::gen_build(&cert.primal[z.offset..z.offset + 2 * r * d], r, d);
    let dinv = diag_block(&sb.vals.iter().map(|&v| 1.0 / v).collect::<Vec<_>>());
    let rho_prime_c = z_opt.adjoint() * dinv * &z_opt;
    let rho_smoothed = DensityOperator::substate(n.from_canonical(&rho_prime_c))
        .map_err(|e| SolverError::DimensionMismatch(e.to_string()))?;
    let x_components: Vec<CMat> = n
        .blocks()
        .iter()
        .zip(&xs)
        .map(|(&(_, nk), xv)| ipm::herm_build(&cert.primal[xv.offset..xv.offset + nk * nk], nk))
        .collect();
    let x_amb = n.element_from_components(&x_components).expect("shapes");
    let tr = trace_re(&x_amb);
    let sigma_opt = DensityOperator::state(x_amb.unscale(tr))
        .map_err(|e| SolverError::DimensionMismatch(e.to_string()))?;
    Ok(SmoothDmaxSubalgebra {
        value_bits: cert.value.log2(),
        rho_smoothed,
        x_components,
        sigma_opt,
        solved: CertifiedSolve {
            program: prog,
            cert,
        },
    })
}

/// Smoothed max divergence against a fixed target:
/// D_max^ε(ρ‖τ) = log₂ min { λ : ρ' ⪯ λτ, ρ' ∈ B_ε(ρ) }.
pub struct SmoothDmaxFixed {
    pub value_bits: f64,
    pub rho_smoothed: DensityOperator,
    pub solved: Option<CertifiedSolve>,
}

pub fn dmax_eps_fixed_sigma(
    rho: &DensityOperator,
    tau: &CMat,
    eps: f64,
    opts: &SolverOptions,
) -> Result<SmoothDmaxFixed> {
    if !(0.0..1.0).contains(&eps) {
        return Err(SolverError::InvalidEpsilon(eps));
    }
    let d = rho.dim();
    if eps == 0.0 {
        let v = crate::solver::pair::dmax_pair(rho.matrix(), tau);
        return Ok(SmoothDmaxFixed {
            value_bits: v,
            rho_smoothed: rho.clone(),
            solved: None,
        });
    }
    let rho_c = rho.matrix().clone();
    let sb = support_basis(&rho_c);
    let r = sb.rank;

    // feasibility: enough fidelity mass inside supp τ
    let tb = support_basis(tau);
    let p_tau = &tb.vr * tb.vr.adjoint();
    let inside = trace_re(&(&p_tau * &rho_c * &p_tau)).clamp(0.0, 1.0);
    let floor = (1.0 - eps * eps).sqrt();
    if inside.sqrt() < floor - 1e-12 {
        return Ok(SmoothDmaxFixed {
            value_bits: f64::INFINITY,
            rho_smoothed: rho.clone(),
            solved: None,
        });
    }

    // strictly feasible start: compress ρ into supp τ, mix toward flat-on-τ
    let mut start = &p_tau * &rho_c * &p_tau;
    let mix = 1e-4;
    start = start.scale(1.0 - mix) + p_tau.scale(mix / tb.rank as f64);
    let s_tr = trace_re(&start);
    let shrink = ((1.0 - 1e-6) / s_tr).min(1.0 - 1e-9);
    start = start.scale(shrink);
    if crate::linops::root_fidelity_raw(&rho_c, &start) <= floor + 1e-9 {
        return Err(SolverError::Infeasible(
            "ball boundary too tight against supp τ".into(),
        ));
    }

    let mut prog = ConeProgram::new();
    let z_init = uhlmann_cross(&sb, &start);
    let z = prog.gen_var(r, d, &z_init);
    let lam0 = {
        let v = crate::solver::pair::dmax_pair(&start, tau);
        2.0f64.powf(v) * 1.5 + 1e-6
    };
    let lam = prog.scalar_var(lam0);
    prog.objective[lam.offset] = 1.0;

    let mut blk = PsdBlock::new(r + d);
    blk.f0
        .view_mut((0, 0), (r, r))
        .copy_from(&diag_block(&sb.vals));
    blk.add_gen(z, 0, r, 1.0);
    blk.add_scalar(lam, tau, r);
    prog.psd.push(blk);
    add_ball_constraints(&mut prog, z, &sb, eps);

    let cert = ipm::solve(&prog, opts)?;
    let z_opt = ipm::gen_build(&cert.primal[z.offset..z.offset + 2 * r * d], r, d);
    let dinv = diag_block(&sb.vals.iter().map(|&v| 1.0 / v).collect::<Vec<_>>());
    let rho_prime = z_opt.adjoint() * dinv * &z_opt;
    let rho_smoothed = DensityOperator::substate(rho_prime)
        .map_err(|e| SolverError::DimensionMismatch(e.to_string()))?;
    Ok(SmoothDmaxFixed {
        value_bits: cert.value.log2(),
        rho_smoothed,
        solved: Some(CertifiedSolve {
            program: prog,
            cert,
        }),
    })
}

/// Smooth conditional min-entropy H_min^ε(1|2)_ω of a bipartite (sub)state:
/// −log₂ min { tr Y : ω' ⪯ 1₁⊗Y, ω' ∈ B_ε(ω) }.
pub struct HminEps {
    pub value_bits: f64,
    pub y_opt: CMat,
    pub solved: CertifiedSolve,
}

pub fn hmin_eps(
    omega: &CMat,
    d1: usize,
    d2: usize,
    eps: f64,
    opts: &SolverOptions,
) -> Result<HminEps> {
    if !(0.0..1.0).contains(&eps) {
        return Err(SolverError::InvalidEpsilon(eps));
    }
    let n = d1 * d2;
    if omega.nrows() != n {
        return Err(SolverError::DimensionMismatch(format!(
            "state is {}×{}, dims give {}",
            omega.nrows(),
            omega.ncols(),
            n
        )));
    }
    let sb = support_basis(omega);
    let lmax = sb.vals[0];

    let mut prog = ConeProgram::new();
    if eps == 0.0 {
        let y = prog.herm_var(d2, &identity(d2).scale(lmax * d1 as f64 + 1.0));
        for i in 0..d2 {
            prog.objective[y.offset + i] = 1.0;
        }
        let mut blk = PsdBlock::new(n);
        blk.f0 = -omega.clone();
        let copies: Vec<(usize, usize)> = (0..d1).map(|e| (e * d2, 1)).collect();
        blk.add_herm(y, &copies, 1.0);
        prog.psd.push(blk);
        let cert = ipm::solve(&prog, opts)?;
        let y_opt = ipm::herm_build(&cert.primal[y.offset..y.offset + d2 * d2], d2);
        return Ok(HminEps {
            value_bits: -cert.value.log2(),
            y_opt,
            solved: CertifiedSolve {
                program: prog,
                cert,
            },
        });
    }

    let r = sb.rank;
    let delta = 1e-3f64.min((1.0 - (1.0 - eps * eps).sqrt()) / 2.0);
    let z_init = uhlmann_cross(&sb, omega).scale(1.0 - delta);
    let z = prog.gen_var(r, n, &z_init);
    let y = prog.herm_var(d2, &identity(d2).scale(lmax * d1 as f64 + 1.0));
    for i in 0..d2 {
        prog.objective[y.offset + i] = 1.0;
    }
    let mut blk = PsdBlock::new(r + n);
    blk.f0
        .view_mut((0, 0), (r, r))
        .copy_from(&diag_block(&sb.vals));
    blk.add_gen(z, 0, r, 1.0);
    let copies: Vec<(usize, usize)> = (0..d1).map(|e| (r + e * d2, 1)).collect();
    blk.add_herm(y, &copies, 1.0);
    prog.psd.push(blk);
    add_ball_constraints(&mut prog, z, &sb, eps);

    let cert = ipm::solve(&prog, opts)?;
    let y_opt = ipm::herm_build(&cert.primal[y.offset..y.offset + d2 * d2], d2);
    Ok(HminEps {
        value_bits: -cert.value.log2(),
        y_opt,
        solved: CertifiedSolve {
            program: prog,
            cert,
        },
    })
}

/// max_{σ∈S(N)} tr|√ρ'·√σ| — the fidelity radius of a substate to the
/// subalgebra state space.
pub struct FmaxSubalgebra {
    pub fidelity: f64,
    pub sigma_opt: DensityOperator,
    pub solved: CertifiedSolve,
}

pub fn fmax_subalgebra(
    rho_prime: &CMat,
    n: &SubalgebraStructure,
    opts: &SolverOptions,
) -> Result<FmaxSubalgebra> {
    let d = n.ambient_dim();
    let rho_c = n.to_canonical(rho_prime);
    let sb = support_basis(&rho_c);
    let r = sb.rank;
    let offs = n.offsets();

    let mut prog = ConeProgram::new();
    let z = prog.gen_var(r, d, &CMat::zeros(r, d));
    let xs = add_sigma_blocks(&mut prog, n, 0.999 / d as f64);
    let coeffs = gen_trace_coeffs(&sb.vr, r, d);
    for (i, c2) in coeffs.iter().enumerate() {
        prog.objective[z.offset + i] = -c2;
    }

    let mut blk = PsdBlock::new(r + d);
    blk.f0
        .view_mut((0, 0), (r, r))
        .copy_from(&diag_block(&sb.vals));
    blk.add_gen(z, 0, r, 1.0);
    for (k, &(m, nk)) in n.blocks().iter().enumerate() {
        let copies: Vec<(usize, usize)> = (0..m).map(|a| (r + offs[k] + a * nk, 1)).collect();
        blk.add_herm(xs[k], &copies, 1.0);
    }
    prog.psd.push(blk);
    let mut lin = LinBlock {
        g0: 1.0,
        a: Vec::new(),
    };
    for (k, &(m, nk)) in n.blocks().iter().enumerate() {
        for i in 0..nk {
            lin.a.push((xs[k].offset + i, -(m as f64)));
        }
    }
    prog.lin.push(lin);

    let cert = ipm::solve(&prog, opts)?;
    let comps: Vec<CMat> = n
        .blocks()
        .iter()
        .zip(&xs)
        .map(|(&(_, nk), xv)| ipm::herm_build(&cert.primal[xv.offset..xv.offset + nk * nk], nk))
        .collect();
    let sig = n.element_from_components(&comps).expect("shapes");
    let tr = trace_re(&sig);
    let sigma_opt = DensityOperator::state(sig.unscale(tr))
        .map_err(|e| SolverError::DimensionMismatch(e.to_string()))?;
    Ok(FmaxSubalgebra {
        fidelity: (-cert.value).clamp(0.0, 1.0),
        sigma_opt,
        solved: CertifiedSolve {
            program: prog,
            cert,
        },
    })
}

/// max over states σ on the second factor of tr|√ω·√(1₁⊗σ)| — drives the
/// unsmoothed conditional max-entropy H_max(1|2) = 2·log₂(max F).
pub struct FmaxOneSided {
    pub fidelity_sq_log2_twice: f64,
    pub sigma_opt: CMat,
    pub solved: CertifiedSolve,
}

pub fn fmax_one_sided(
    omega: &CMat,
    d1: usize,
    d2: usize,
    opts: &SolverOptions,
) -> Result<FmaxOneSided> {
    let n = d1 * d2;
    if omega.nrows() != n {
        return Err(SolverError::DimensionMismatch(format!(
            "state is {}×{}, dims give {}",
            omega.nrows(),
            omega.ncols(),
            n
        )));
    }
    let sb = support_basis(omega);
    let r = sb.rank;

    let mut prog = ConeProgram::new();
    let z = prog.gen_var(r, n, &CMat::zeros(r, n));
    let s2 = prog.herm_var(d2, &identity(d2).scale(0.999 / d2 as f64));
    let coeffs = gen_trace_coeffs(&sb.vr, r, n);
    for (i, c2) in coeffs.iter().enumerate() {
        prog.objective[z.offset + i] = -c2;
    }
    let mut blk = PsdBlock::new(r + n);
    blk.f0
        .view_mut((0, 0), (r, r))
        .copy_from(&diag_block(&sb.vals));
    blk.add_gen(z, 0, r, 1.0);
    let copies: Vec<(usize, usize)> = (0..d1).map(|e| (r + e * d2, 1)).collect();
    blk.add_herm(s2, &copies, 1.0);
    prog.psd.push(blk);
    let mut lin = LinBlock {
        g0: 1.0,
        a: Vec::new(),
    };
    for i in 0..d2 {
        lin.a.push((s2.offset + i, -1.0));
    }
    prog.lin.push(lin);

    let cert = ipm::solve(&prog, opts)?;
    let f = (-cert.value).max(1e-300);
    let sigma_opt = ipm::herm_build(&cert.primal[s2.offset..s2.offset + d2 * d2], d2);
    Ok(FmaxOneSided {
        fidelity_sq_log2_twice: 2.0 * f.log2(),
        sigma_opt,
        solved: CertifiedSolve {
            program: prog,
            cert,
        },
    })
}
