//! Direct route for the smoothed min-relative entropy
//! D_min^ε(ρ‖N) = sup_{ρ'∈B_ε(ρ)} inf_{σ∈S(N)} −2log₂ tr|√ρ'√σ|.
//!
//! Parametrizing the smoothing substate by its purification matrix Φ
//! (anchor ψ = vec(√ρ)) turns the inner objective into the nuclear norm
//! ‖√σ·Φ‖₁ — convex in Φ — while the ball becomes the convex cap
//! {‖Φ‖_F ≤ 1, Re tr(√ρ·Φ) ≥ √(1−ε²)}. The outer minimization is solved
//! by cutting planes: each master step minimizes max over the collected σ's
//! via nuclear-norm epigraph LMIs, each oracle step finds the worst σ by
//! the fidelity SDP. Restarts with perturbed initial cuts report the spread.

use crate::algebra::SubalgebraStructure;
use crate::linops::{matrix_power, trace_re, CMat, DensityOperator};
use crate::solver::ipm::{self, ConeProgram, LinBlock, PsdBlock, SocBlock, SolverOptions};
use crate::solver::problems::{fmax_subalgebra, Result, SolverError};

#[derive(Debug)]
pub struct SmoothDmin {
    pub value_bits: f64,
    /// the smoothing optimizer ρ' = ΦΦ*
    pub rho_smoothed: DensityOperator,
    /// worst-case σ ∈ S(N) at the optimizer
    pub sigma_worst: DensityOperator,
    /// certificate of the final inner fidelity solve at the optimizer
    pub oracle_solve: crate::solver::CertifiedSolve,
    /// spread of the restart values (reported; tiny for a convex program)
    pub restart_spread: f64,
    /// value did not move on the last master iteration
    pub converged: bool,
}

/// Kelley master step: minimize s over the cap s.t. ‖L_i·Φ‖₁ ≤ s for the
/// collected √σ factors L_i.
fn master_step(
    sqrt_rho: &CMat,
    cuts: &[CMat],
    eps: f64,
    phi_init: &CMat,
    opts: &SolverOptions,
) -> Result<(CMat, f64)> {
    let d = sqrt_rho.nrows();
    let delta = 1e-4f64;
    // pull the incumbent strictly inside the cap by blending toward an
    // interior anchor c·√ρ (fidelity c, norm c, with floor < c < 1)
    let floor = (1.0 - eps * eps).max(0.0).sqrt();
    let anchor = sqrt_rho.scale((1.0 + floor) / 2.0);
    let tau = 1e-3;
    let phi0 = phi_init.scale(1.0 - tau) + anchor.scale(tau);

    // aux inits from the SVD of each M_i = L_i·Φ₀
    struct CutInit {
        a0: CMat,
        b0: CMat,
        nuc: f64,
    }
    let mut cut_inits = Vec::with_capacity(cuts.len());
    let mut s_init = 0.0f64;
    for l in cuts {
        let m = l * &phi0;
        let svd = m.svd(true, true);
        let u = svd.u.expect("requested");
        let vt = svd.v_t.expect("requested");
        let mut sig = CMat::zeros(d, d);
        let mut nuc = 0.0;
        for i in 0..svd.singular_values.len().min(d) {
            sig[(i, i)] = crate::linops::cr(svd.singular_values[i]);
            nuc += svd.singular_values[i];
        }
        let a0 = &u * &sig * u.adjoint() + crate::linops::identity(d).scale(delta);
        let b0 = vt.adjoint() * &sig * &vt + crate::linops::identity(d).scale(delta);
        s_init = s_init.max(nuc + delta * d as f64);
        cut_inits.push(CutInit { a0, b0, nuc });
    }
    let _ = cut_inits.iter().map(|ci| ci.nuc).sum::<f64>();

    let mut prog = ConeProgram::new();
    let phi = prog.gen_var(d, d, &phi0);
    let s = prog.scalar_var(s_init + 0.01);
    prog.objective[s.offset] = 1.0;

    for (l, ci) in cuts.iter().zip(&cut_inits) {
        // ‖LΦ‖₁ ≤ s ⟺ ∃A,B ⪰ 0: [[A, LΦ],[Φ*L*, B]] ⪰ 0, (trA+trB)/2 ≤ s
        let a = prog.herm_var(d, &ci.a0);
        let b = prog.herm_var(d, &ci.b0);
        let mut blk = PsdBlock::new(2 * d);
        blk.add_herm(a, &[(0, 1)], 1.0);
        blk.add_herm(b, &[(d, 1)], 1.0);
        blk.add_gen_left_mul(phi, l, 0, d, 1.0);
        prog.psd.push(blk);
        let mut lin = LinBlock {
            g0: 0.0,
            a: vec![(s.offset, 1.0)],
        };
        for i in 0..d {
            lin.a.push((a.offset + i, -0.5));
            lin.a.push((b.offset + i, -0.5));
        }
        prog.lin.push(lin);
    }

    // cap: ‖Φ‖_F ≤ 1 and Re tr(√ρ·Φ) ≥ √(1−ε²)
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new()];
    let mut s0 = vec![1.0];
    for i in 0..2 * d * d {
        rows.push(vec![(phi.offset + i, 1.0)]);
        s0.push(0.0);
    }
    prog.soc.push(SocBlock { s0, rows });
    let mut lin = LinBlock {
        g0: -(1.0 - eps * eps).max(0.0).sqrt(),
        a: Vec::new(),
    };
    for i in 0..d {
        for j in 0..d {
            let w = sqrt_rho[(j, i)];
            if w.norm() > 1e-300 {
                lin.a.push((phi.offset + 2 * (i * d + j), w.re));
                lin.a.push((phi.offset + 2 * (i * d + j) + 1, -w.im));
            }
        }
    }
    prog.lin.push(lin);

    let cert = ipm::solve(&prog, opts)?;
    let phi_opt = ipm::gen_build(&cert.primal[phi.offset..phi.offset + 2 * d * d], d, d);
    Ok((phi_opt, cert.primal[s.offset]))
}

pub fn smooth_dmin_subalgebra(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    opts: &SolverOptions,
) -> Result<SmoothDmin> {
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
    // ε = 0: single fidelity SDP
    if eps == 0.0 {
        let f = fmax_subalgebra(rho.matrix(), n, opts)?;
        return Ok(SmoothDmin {
            value_bits: -2.0 * f.fidelity.max(1e-300).log2(),
            rho_smoothed: rho.clone(),
            sigma_worst: f.sigma_opt,
            oracle_solve: f.solved,
            restart_spread: 0.0,
            converged: true,
        });
    }

    let rho_c = n.to_canonical(rho.matrix());
    let sqrt_rho = matrix_power(&rho_c, 0.5).expect("PSD");
    let mut rng = crate::rand_util::rng_from_seed(opts.seed);

    type RunOut = (f64, CMat, DensityOperator, crate::solver::CertifiedSolve, bool);
    let run = |initial_cut_states: Vec<CMat>| -> Result<RunOut> {
        let mut cuts: Vec<CMat> = initial_cut_states
            .iter()
            .map(|sig| matrix_power(sig, 0.5).expect("PSD"))
            .collect();
        let mut phi = sqrt_rho.clone();
        let mut fval = f64::INFINITY;
        let mut converged = false;
        for round in 0..25 {
            // oracle: worst σ for the current ρ' = ΦΦ*
            let rho_prime_c = &phi * phi.adjoint();
            let rho_prime = n.from_canonical(&rho_prime_c);
            let best = fmax_subalgebra(&rho_prime, n, opts)?;
            let sig_c = n.to_canonical(best.sigma_opt.matrix());
            if best.fidelity < fval - 1e-12 {
                fval = best.fidelity;
            }
            cuts.push(matrix_power(&sig_c, 0.5).expect("PSD"));
            if cuts.len() > 12 {
                cuts.remove(0);
            }
            // master: minimize the collected max
            let (phi_new, s_new) = master_step(&sqrt_rho, &cuts, eps, &phi, opts)?;
            let drop = fval - s_new;
            phi = phi_new;
            if drop < 0.2 * opts.tol.max(1e-9) && round > 1 {
                converged = true;
                break;
            }
        }
        // final exact evaluation at the incumbent
        let rho_prime_c = &phi * phi.adjoint();
        let rho_prime = n.from_canonical(&rho_prime_c);
        let fin = fmax_subalgebra(&rho_prime, n, opts)?;
        let f_at = fin.fidelity.min(fval);
        Ok((f_at, rho_prime, fin.sigma_opt, fin.solved, converged))
    };

    // restarts: the conditional expectation of ρ, plus a random member
    let start_a = vec![{
        let e = n.conditional_expectation(rho.matrix()).expect("dims");
        let tr = trace_re(&e);
        n.to_canonical(&e.unscale(tr))
    }];
    let start_b = vec![n.to_canonical(n.random_state(&mut rng).matrix())];

    let (f1, rp1, sw1, os1, c1) = run(start_a)?;
    let (f2, rp2, sw2, os2, c2) = run(start_b)?;
    let spread = (f1 - f2).abs();
    let (f_best, rp, sw, osolve, conv) = if f1 <= f2 {
        (f1, rp1, sw1, os1, c1)
    } else {
        (f2, rp2, sw2, os2, c2)
    };
    let rho_smoothed = DensityOperator::substate(rp.scale(1.0 / rp.trace().re.max(1.0)))
        .map_err(|e| SolverError::DimensionMismatch(e.to_string()))?;
    Ok(SmoothDmin {
        value_bits: -2.0 * f_best.max(1e-300).log2(),
        rho_smoothed,
        sigma_worst: sw,
        oracle_solve: osolve,
        restart_spread: spread,
        converged: conv,
    })
}
