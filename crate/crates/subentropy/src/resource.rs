//! Resource theory of subalgebra coherence: MIO/DIO predicates, the
//! explicit dilution channels preparing a target state from the maximally
//! coherent state of a diagonal source algebra, and the one-shot cost
//! bracket they realize.

use crate::algebra::SubalgebraStructure;
use crate::linops::{
    cr, eig_hermitian, identity, max_abs, max_abs_diff, zeros, CMat, CVec, DensityOperator,
};
use crate::solver::pair::dmax_pair;
use crate::solver::problems::{smooth_dmax_subalgebra, SolverError};
use crate::solver::SolverOptions;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("channel failed validation: {0}")]
    InvalidChannel(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub type Result<T> = std::result::Result<T, ResourceError>;

/// CPTP map stored as a Kraus list with the Choi matrix cached.
#[derive(Debug, Clone)]
pub struct QuantumChannel {
    pub dim_in: usize,
    pub dim_out: usize,
    pub kraus: Vec<CMat>,
    choi: CMat,
}

impl QuantumChannel {
    /// Validate Σ K*K = I and cache the Choi matrix (both to 1e−9).
    pub fn from_kraus(dim_in: usize, dim_out: usize, kraus: Vec<CMat>) -> Result<Self> {
        for k in &kraus {
            if k.nrows() != dim_out || k.ncols() != dim_in {
                return Err(ResourceError::DimensionMismatch(format!(
                    "Kraus operator is {}×{}, expected {dim_out}×{dim_in}",
                    k.nrows(),
                    k.ncols()
                )));
            }
        }
        let mut sum = zeros(dim_in, dim_in);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        if max_abs_diff(&sum, &identity(dim_in)) > 1e-9 {
            return Err(ResourceError::InvalidChannel(format!(
                "Σ K*K deviates from identity by {:.3e}",
                max_abs_diff(&sum, &identity(dim_in))
            )));
        }
        let choi = choi_from_kraus(dim_in, dim_out, &kraus);
        Ok(Self {
            dim_in,
            dim_out,
            kraus,
            choi,
        })
    }

    /// Channel from its action on matrix units (measure-and-prepare forms
    /// are easiest to state that way); Kraus operators come from the Choi
    /// eigendecomposition.
    pub fn from_action(
        dim_in: usize,
        dim_out: usize,
        action: impl Fn(&CMat) -> CMat,
    ) -> Result<Self> {
        let mut choi = zeros(dim_in * dim_out, dim_in * dim_out);
        for i in 0..dim_in {
            for j in 0..dim_in {
                let mut e = zeros(dim_in, dim_in);
                e[(i, j)] = cr(1.0);
                let out = action(&e);
                for a in 0..dim_out {
                    for b in 0..dim_out {
                        choi[(i * dim_out + a, j * dim_out + b)] = out[(a, b)];
                    }
                }
            }
        }
        let (vals, vecs) = eig_hermitian(&choi).map_err(|e| {
            ResourceError::InvalidChannel(format!("Choi not Hermitian: {e}"))
        })?;
        let lmax = vals.iter().fold(0.0f64, |a, &l| a.max(l)).max(1e-300);
        if vals[0] < -1e-8 * lmax {
            return Err(ResourceError::InvalidChannel(format!(
                "Choi has negative eigenvalue {:.3e}",
                vals[0]
            )));
        }
        // clamp boundary noise to the cone, then renormalize the Kraus
        // family so Σ K*K = I holds exactly
        let mut kraus = Vec::new();
        for idx in 0..vals.len() {
            let l = vals[idx];
            if l > 1e-14 * lmax {
                let col = vecs.column(idx);
                let mut k = zeros(dim_out, dim_in);
                for i in 0..dim_in {
                    for a in 0..dim_out {
                        k[(a, i)] = col[i * dim_out + a] * cr(l.sqrt());
                    }
                }
                kraus.push(k);
            }
        }
        let mut s = zeros(dim_in, dim_in);
        for k in &kraus {
            s += k.adjoint() * k;
        }
        let s_inv_half = crate::linops::matrix_power(&s, -0.5)
            .map_err(|e| ResourceError::InvalidChannel(e.to_string()))?;
        for k in &mut kraus {
            *k = k.clone() * &s_inv_half;
        }
        Self::from_kraus(dim_in, dim_out, kraus)
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    pub fn apply(&self, x: &CMat) -> CMat {
        let mut out = zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        out
    }

    /// Choi PSD, trace preservation (tr_out Choi = 1_in), Kraus completeness.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let (vals, _) = eig_hermitian(&self.choi)
            .map_err(|e| ResourceError::InvalidChannel(e.to_string()))?;
        let lmax = vals.iter().fold(0.0f64, |a, &l| a.max(l)).max(1.0);
        if vals[0] < -tol * lmax {
            return Err(ResourceError::InvalidChannel(format!(
                "Choi eigenvalue {:.3e}",
                vals[0]
            )));
        }
        let marg = crate::linops::partial_trace(
            &self.choi,
            &[self.dim_in, self.dim_out],
            &[0],
        )
        .map_err(|e| ResourceError::InvalidChannel(e.to_string()))?;
        if max_abs_diff(&marg, &identity(self.dim_in)) > tol {
            return Err(ResourceError::InvalidChannel(
                "Choi partial trace differs from identity".into(),
            ));
        }
        Ok(())
    }
}

fn choi_from_kraus(dim_in: usize, dim_out: usize, kraus: &[CMat]) -> CMat {
    let mut choi = zeros(dim_in * dim_out, dim_in * dim_out);
    for k in kraus {
        // vec over input index: Choi = Σ (1⊗K)|Ω⟩⟨Ω|(1⊗K)* with |Ω⟩=Σ|ii⟩
        let mut v = CVec::zeros(dim_in * dim_out);
        for i in 0..dim_in {
            for a in 0..dim_out {
                v[i * dim_out + a] = k[(a, i)];
            }
        }
        choi += &v * v.adjoint();
    }
    choi
}

/// Superoperator distance max over matrix units of ‖Φ₁(E_ij) − Φ₂(E_ij)‖∞.
fn superop_distance(
    dim_in: usize,
    f1: impl Fn(&CMat) -> CMat,
    f2: impl Fn(&CMat) -> CMat,
) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..dim_in {
        for j in 0..dim_in {
            let mut e = zeros(dim_in, dim_in);
            e[(i, j)] = cr(1.0);
            worst = worst.max(max_abs_diff(&f1(&e), &f2(&e)));
        }
    }
    worst
}

/// Φ is M→N maximally incoherent iff Φ∘E_M = E_N∘Φ∘E_M (free states land
/// on free states). Checked on the matrix-unit basis and spot-verified on
/// random members of S(M).
pub fn is_mio(
    phi: &QuantumChannel,
    source: &SubalgebraStructure,
    target: &SubalgebraStructure,
    tol: f64,
) -> Result<bool> {
    check_dims(phi, source, target)?;
    let dist = superop_distance(
        phi.dim_in,
        |x| phi.apply(&source.conditional_expectation(x).expect("dims")),
        |x| {
            target
                .conditional_expectation(&phi.apply(&source.conditional_expectation(x).expect("dims")))
                .expect("dims")
        },
    );
    if dist > tol {
        return Ok(false);
    }
    let mut rng = crate::rand_util::rng_from_seed(0x15_10);
    for _ in 0..20 {
        let sigma = source.random_state(&mut rng);
        let out = phi.apply(sigma.matrix());
        if !target.membership(&out, tol.max(1e-9) * 10.0).expect("dims") {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Φ is M→N dephasing-covariant iff Φ∘E_M = E_N∘Φ.
pub fn is_dio(
    phi: &QuantumChannel,
    source: &SubalgebraStructure,
    target: &SubalgebraStructure,
    tol: f64,
) -> Result<bool> {
    check_dims(phi, source, target)?;
    let dist = superop_distance(
        phi.dim_in,
        |x| phi.apply(&source.conditional_expectation(x).expect("dims")),
        |x| target.conditional_expectation(&phi.apply(x)).expect("dims"),
    );
    Ok(dist <= tol)
}

fn check_dims(
    phi: &QuantumChannel,
    source: &SubalgebraStructure,
    target: &SubalgebraStructure,
) -> Result<()> {
    if phi.dim_in != source.ambient_dim() || phi.dim_out != target.ambient_dim() {
        return Err(ResourceError::DimensionMismatch(format!(
            "channel {}→{} vs algebras {}→{}",
            phi.dim_in,
            phi.dim_out,
            source.ambient_dim(),
            target.ambient_dim()
        )));
    }
    Ok(())
}

/// Maximally coherent state e_M = (1/n)Σ_{ij}E_ij of the diagonal source.
pub fn max_coherent_diagonal(n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| cr(1.0 / n as f64))
}

/// MIO dilution channel from the cost theorem's achievability proof:
/// Φ(x) = n/(n−1)·(tr x − tr(e_M x))·(σ − ρ'/n) + tr(e_M x)·ρ',
/// completely positive exactly when n·σ ⪰ ρ'.
///
/// `n = 1` degenerates to unconditional preparation of ρ' (MIO iff ρ' ∈ N).
pub fn build_mio_dilution(
    rho_prime: &DensityOperator,
    sigma: &DensityOperator,
    n_levels: usize,
) -> Result<QuantumChannel> {
    let d = rho_prime.dim();
    if sigma.dim() != d {
        return Err(ResourceError::DimensionMismatch(
            "ρ' and σ must share the target dimension".into(),
        ));
    }
    if n_levels == 1 {
        let rp = rho_prime.matrix().clone();
        return QuantumChannel::from_action(1, d, move |x| rp.scale(x[(0, 0)].re));
    }
    let gap = sigma.matrix().scale(n_levels as f64) - rho_prime.matrix();
    let (vals, _) = eig_hermitian(&gap).map_err(|e| {
        ResourceError::PreconditionViolated(format!("n·σ − ρ' not Hermitian: {e}"))
    })?;
    if vals[0] < -1e-9 * max_abs(&gap).max(1.0) {
        return Err(ResourceError::PreconditionViolated(format!(
            "n·σ ⪱ ρ' (λ_min = {:.3e})",
            vals[0]
        )));
    }
    let e_m = max_coherent_diagonal(n_levels);
    let nf = n_levels as f64;
    let head = sigma.matrix() - rho_prime.matrix().unscale(nf);
    let rp = rho_prime.matrix().clone();
    QuantumChannel::from_action(n_levels, d, move |x| {
        let w = crate::linops::hs_inner(&e_m, x); // tr(e_M x), e_M Hermitian
        let t = x.trace();
        head.scale(1.0) * ((t - w) * cr(nf / (nf - 1.0))) + rp.scale(1.0) * w
    })
}

/// DIO dilution channel:
/// Φ(x) = n/(n−1)·(tr x − tr(e_M x))·(E_N(ρ') − ρ'/n) + tr(e_M x)·ρ',
/// completely positive exactly when ρ' ⪯ n·E_N(ρ').
pub fn build_dio_dilution(
    rho_prime: &DensityOperator,
    target: &SubalgebraStructure,
    n_levels: usize,
) -> Result<QuantumChannel> {
    let d = rho_prime.dim();
    if target.ambient_dim() != d {
        return Err(ResourceError::DimensionMismatch(
            "ρ' dimension vs target algebra".into(),
        ));
    }
    let e_rho = target
        .conditional_expectation(rho_prime.matrix())
        .expect("dims");
    if n_levels == 1 {
        let rp = rho_prime.matrix().clone();
        return QuantumChannel::from_action(1, d, move |x| rp.scale(x[(0, 0)].re));
    }
    let gap = e_rho.scale(n_levels as f64) - rho_prime.matrix();
    let (vals, _) = eig_hermitian(&gap).expect("Hermitian");
    if vals[0] < -1e-9 * max_abs(&gap).max(1.0) {
        return Err(ResourceError::PreconditionViolated(format!(
            "ρ' ⪱ n·E_N(ρ') (λ_min = {:.3e})",
            vals[0]
        )));
    }
    let e_m = max_coherent_diagonal(n_levels);
    let nf = n_levels as f64;
    let head = &e_rho - &rho_prime.matrix().unscale(nf);
    let rp = rho_prime.matrix().clone();
    QuantumChannel::from_action(n_levels, d, move |x| {
        let w = crate::linops::hs_inner(&e_m, x);
        let t = x.trace();
        head.scale(1.0) * ((t - w) * cr(nf / (nf - 1.0))) + rp.scale(1.0) * w
    })
}

/// D_max,E_N(ρ) = D_max(ρ‖E_N(ρ)) — the pinning-relative max divergence.
pub fn dmax_pinned(rho: &DensityOperator, n: &SubalgebraStructure) -> f64 {
    let e = n.conditional_expectation(rho.matrix()).expect("dims");
    dmax_pair(rho.matrix(), &e)
}

/// Smoothed D_max,E_N over the ε-ball. The joint problem is bilinear, but
/// for a fixed multiplier λ the constraint λ·E_N(ρ') − ρ' ⪰ 0 is linear in
/// ρ', so the quantity is quasiconvex: bisection on λ with a phase-I
/// feasibility SDP over the ball at each step.
pub fn dmax_pinned_eps(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    if eps == 0.0 {
        return Ok(dmax_pinned(rho, n));
    }
    let upper = dmax_pinned(rho, n);
    let mut hi = 2.0f64.powf(upper); // feasible: ρ' = ρ
    let mut lo = 1.0f64; // λ < 1 is never feasible (trace comparison)
    if hi <= lo + 1e-12 {
        return Ok(upper.max(0.0));
    }
    for _ in 0..40 {
        let mid = (lo * hi).sqrt();
        if pinned_feasible(rho, n, eps, mid, opts)? {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi / lo).log2() < opts.tol.max(1e-9) {
            break;
        }
    }
    Ok(hi.log2())
}

/// Phase-I SDP: is there ρ' in the ε-ball of ρ with λ·E_N(ρ') ⪰ ρ'?
/// Minimizes t with λE_N(ρ') − ρ' + t·1 ⪰ 0 and reports t* ≤ 0.
fn pinned_feasible(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    lambda: f64,
    opts: &SolverOptions,
) -> Result<bool> {
    use crate::solver::ipm::{self, ConeProgram, LinBlock, PsdBlock, SocBlock};
    let d = n.ambient_dim();
    let rho_c = n.to_canonical(rho.matrix());
    let sb = crate::solver::problems::support_basis(&rho_c);
    let r = sb.rank;
    let offs = n.offsets();

    let mut prog = ConeProgram::new();
    // explicit smoothing variable (E_N acts linearly on it); full-rank init
    let eta = 1e-4;
    let rho_init = (rho_c.scale(1.0 - eta) + identity(d).scale(eta / d as f64)).scale(1.0 - 1e-5);
    let rp = prog.herm_var(d, &rho_init);
    // Ω-free cross keeps ρ'₀ − Z₀*D⁻¹Z₀ ≻ 0 strictly
    let sqrt_init = crate::linops::matrix_power(&rho_init, 0.5).expect("PSD");
    let mut d_half = CMat::zeros(r, r);
    for i in 0..r {
        d_half[(i, i)] = cr(sb.vals[i].max(0.0).sqrt());
    }
    let z_init = (&d_half * sb.vr.adjoint() * &sqrt_init).scale(1.0 - 1e-5);
    let z = prog.gen_var(r, d, &z_init);
    let t0 = {
        let e = n.conditional_expectation(&rho_init).expect("dims");
        let gap = e.scale(lambda) - &rho_init;
        let (vals, _) = eig_hermitian(&gap).expect("Hermitian");
        (-vals[0]).max(0.0) + 1e-3
    };
    let t = prog.scalar_var(t0);
    prog.objective[t.offset] = 1.0;

    // fidelity block ties Z to ρ': [[D_r, Z],[Z*, ρ']] ⪰ 0
    let mut fid = PsdBlock::new(r + d);
    fid.f0.view_mut((0, 0), (r, r)).copy_from(&CMat::from_fn(
        r,
        r,
        |i, j| if i == j { cr(sb.vals[i]) } else { cr(0.0) },
    ));
    fid.add_gen(z, 0, r, 1.0);
    fid.add_herm(rp, &[(r, 1)], 1.0);
    prog.psd.push(fid);

    // ρ' ⪰ 0
    let mut pos = PsdBlock::new(d);
    pos.add_herm(rp, &[(0, 1)], 1.0);
    prog.psd.push(pos);

    // λ·E_N(ρ') − ρ' + t·1 ⪰ 0 : compress-and-expand placement per block
    let mut pin = PsdBlock::new(d);
    pin.add_scalar(t, &identity(d), 0);
    pin.add_herm(rp, &[(0, 1)], -1.0);
    for (k, &(m, nk)) in n.blocks().iter().enumerate() {
        for b in 0..m {
            pin.add_herm_block_compress(rp, offs[k], m, nk, offs[k] + b * nk, lambda);
        }
    }
    prog.psd.push(pin);

    // ball: fidelity floor via Z, trace cap on ρ'
    let coeffs = crate::solver::problems::gen_trace_coeffs_pub(&sb.vr, r, d);
    let floor = (1.0 - eps * eps).max(0.0).sqrt();
    prog.lin.push(LinBlock {
        g0: -floor,
        a: coeffs
            .iter()
            .enumerate()
            .filter(|(_, c2)| c2.abs() > 1e-300)
            .map(|(i, c2)| (z.offset + i, *c2))
            .collect(),
    });
    let mut lin_tr = LinBlock {
        g0: 1.0,
        a: Vec::new(),
    };
    for i in 0..d {
        lin_tr.a.push((rp.offset + i, -1.0));
    }
    prog.lin.push(lin_tr);
    let _ = SocBlock {
        s0: vec![],
        rows: vec![],
    };

    let cert = ipm::solve(&prog, opts).map_err(SolverError::Ipm)?;
    Ok(cert.value <= 1e-7)
}

/// Constructive one-shot dilution record.
#[derive(Debug)]
pub struct DilutionResult {
    pub source_levels: usize,
    pub channel: QuantumChannel,
    pub fidelity_achieved: f64,
    pub cost_bits: f64,
}

/// One-shot ε-N-coherent cost bracket under MIO:
/// lower = D_max^ε(ρ‖N); upper realized by the explicit channel from the
/// smoothing optimizer, with log₂ n ≤ lower + 1.
pub struct CostBracket {
    pub lower_bits: f64,
    pub upper_bits: f64,
    /// certificate gap of the smoothing program behind the lower bound
    pub lower_gap: f64,
    pub witness: DilutionResult,
}

pub fn one_shot_cost_bracket(
    rho: &DensityOperator,
    n: &SubalgebraStructure,
    eps: f64,
    opts: &SolverOptions,
) -> Result<CostBracket> {
    let sm = smooth_dmax_subalgebra(rho, n, eps, opts)?;
    let lower = sm.value_bits;
    let lower_gap = sm.solved.cert.gap;
    let rho_sub = sm.rho_smoothed;
    let sigma = sm.sigma_opt;
    // n from the substate witness keeps log₂ n ≤ lower + 1 exactly
    let mu_sub = dmax_pair(rho_sub.matrix(), sigma.matrix());
    let raw = 2.0f64.powf(mu_sub);
    let levels = if (raw - raw.round()).abs() < 1e-9 {
        raw.round() as usize
    } else {
        raw.ceil() as usize
    }
    .max(1);
    // levels = 1 means ρ' ⪯ σ: preparing σ unconditionally is MIO with
    // cost 0 and, since fidelity is monotone in its PSD argument,
    // F(ρ, σ) ≥ F(ρ, ρ') ≥ √(1−ε²) ≥ 1−ε
    let channel = if levels == 1 {
        let sig = sigma.matrix().clone();
        QuantumChannel::from_action(1, rho.dim(), move |x| sig.scale(x[(0, 0)].re))?
    } else {
        // The channel formula needs a unit-trace target. Normalizing the
        // witness can push its max divergence just past log₂(levels), so
        // mix minimally toward σ to restore levels·σ ⪰ target; the
        // fidelity slack √(1−ε²) − (1−ε) absorbs the mixing.
        let tau = rho_sub.trace();
        let normalized = rho_sub.matrix().unscale(tau);
        let mu_norm = 2.0f64.powf(dmax_pair(&normalized, sigma.matrix()));
        let q = if mu_norm > levels as f64 {
            ((mu_norm - levels as f64) / (mu_norm - 1.0) + 1e-9).min(1.0)
        } else {
            0.0
        };
        let target = DensityOperator::state(
            normalized.scale(1.0 - q) + sigma.matrix().scale(q),
        )
        .map_err(|e| ResourceError::DimensionMismatch(e.to_string()))?;
        build_mio_dilution(&target, &sigma, levels)?
    };
    channel.validate(1e-9)?;
    let source = SubalgebraStructure::make_diagonal(levels);
    if !is_mio(&channel, &source, n, 1e-9)? {
        return Err(ResourceError::InvalidChannel(
            "constructed dilution is not MIO".into(),
        ));
    }
    let produced = channel.apply(&max_coherent_diagonal(levels));
    let fidelity = crate::linops::root_fidelity_raw(rho.matrix(), &produced);
    let cost = (levels as f64).log2();
    Ok(CostBracket {
        lower_bits: lower,
        upper_bits: cost.max(lower),
        lower_gap,
        witness: DilutionResult {
            source_levels: levels,
            channel,
            fidelity_achieved: fidelity,
            cost_bits: cost,
        },
    })
}
