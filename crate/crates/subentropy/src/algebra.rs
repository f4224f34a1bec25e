//! Finite-dimensional von Neumann subalgebras N ⊆ B(H): canonical block
//! structure ⊕ₖ 1_{m_k} ⊗ M_{n_k}, trace-preserving conditional
//! expectations, the Pimsner–Popa index with its variational oracle, and
//! structure decomposition from generators.
//!
//! Blocks are stored as `(m_k, n_k)` = (multiplicity, matrix dimension).
//! The index formula in this convention is λ⁻¹ = Σₖ min{m_k, n_k}·m_k; the
//! variational oracle [`index_by_sdp`](SubalgebraStructure::index_by_sdp)
//! cross-checks it on every structure the tests touch.

use crate::linops::{
    self, cr, eig_hermitian, hermitize, identity, kron, max_abs, max_abs_diff, CMat, CVec,
    Projection,
};
use crate::rand_util::{ginibre, rng_from_seed, SeedRng};
use rand::RngExt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("blocks inconsistent with ambient dimension: Σ mₖnₖ = {sum}, d = {dim}")]
    BadBlocks { sum: usize, dim: usize },
    #[error("basis matrix is not unitary (defect {0:.3e})")]
    NotUnitary(f64),
    #[error("dimension too large: {0} exceeds the {1} cap")]
    DimensionTooLarge(usize, usize),
    #[error("degenerate random sample persisted after {0} retries")]
    DegenerateSample(usize),
    #[error("generated set is not closed under adjoints")]
    NotClosedUnderStar,
    #[error("index projection construction failed: residual {0:.3e}")]
    ConstructionFailed(f64),
    #[error("index oracle did not converge: {0}")]
    NonConvergence(String),
}

pub type Result<T> = std::result::Result<T, AlgebraError>;

/// Cap on ambient dimensions produced by tensor powers.
pub const DIM_CAP: usize = 512;
/// Eigenvalue gap below which eigenspaces are merged during decomposition.
const DEGENERACY_GAP: f64 = 1e-7;

/// Pimsner–Popa index λ(B(H):N) as an exact fraction 1/inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PimsnerPopaIndex {
    pub inverse: usize,
}

impl PimsnerPopaIndex {
    pub fn lambda(&self) -> f64 {
        1.0 / self.inverse as f64
    }

    /// log₂ λ⁻¹, the maximal D_α(·‖N) over all states.
    pub fn log_inverse_bits(&self) -> f64 {
        (self.inverse as f64).log2()
    }
}

/// A subalgebra N ⊆ B(C^d) given by its block sizes and the unitary mapping
/// ambient coordinates to the canonical ⊕ₖ C^{m_k}⊗C^{n_k} coordinates.
#[derive(Debug, Clone)]
pub struct SubalgebraStructure {
    ambient_dim: usize,
    /// (multiplicity, matrix dimension) per block, sorted (n desc, m desc).
    blocks: Vec<(usize, usize)>,
    /// canonical = U · ambient. Operators transform y = U x U*.
    basis_unitary: CMat,
}

impl SubalgebraStructure {
    /// Validates Σ mₖnₖ = d and unitarity, and sorts blocks (n desc, m desc)
    /// with the matching row segments of the unitary.
    pub fn new(ambient_dim: usize, blocks: Vec<(usize, usize)>, basis_unitary: CMat) -> Result<Self> {
        let sum: usize = blocks.iter().map(|&(m, n)| m * n).sum();
        if sum != ambient_dim || ambient_dim == 0 {
            return Err(AlgebraError::BadBlocks {
                sum,
                dim: ambient_dim,
            });
        }
        if blocks.iter().any(|&(m, n)| m == 0 || n == 0) {
            return Err(AlgebraError::BadBlocks {
                sum,
                dim: ambient_dim,
            });
        }
        if basis_unitary.nrows() != ambient_dim || basis_unitary.ncols() != ambient_dim {
            return Err(AlgebraError::DimensionMismatch(
                "basis unitary shape".into(),
            ));
        }
        let defect = max_abs_diff(
            &(basis_unitary.adjoint() * &basis_unitary),
            &identity(ambient_dim),
        );
        if defect > 1e-10 {
            return Err(AlgebraError::NotUnitary(defect));
        }

        // Stable sort by (n desc, m desc); ties keep construction order.
        let mut order: Vec<usize> = (0..blocks.len()).collect();
        order.sort_by(|&a, &b| {
            blocks[b]
                .1
                .cmp(&blocks[a].1)
                .then(blocks[b].0.cmp(&blocks[a].0))
                .then(a.cmp(&b))
        });
        let offsets = block_offsets(&blocks);
        let mut sorted_blocks = Vec::with_capacity(blocks.len());
        let mut u = CMat::zeros(ambient_dim, ambient_dim);
        let mut row = 0usize;
        for &k in &order {
            let (m, n) = blocks[k];
            sorted_blocks.push((m, n));
            for r in 0..m * n {
                u.set_row(row, &basis_unitary.row(offsets[k] + r));
                row += 1;
            }
        }
        Ok(Self {
            ambient_dim,
            blocks: sorted_blocks,
            basis_unitary: u,
        })
    }

    /// The incoherent (diagonal) subalgebra: d blocks (1,1), identity basis.
    pub fn make_diagonal(d: usize) -> Self {
        Self::new(d, vec![(1, 1); d], identity(d)).expect("diagonal structure is valid")
    }

    /// The trivial subalgebra C·1: one block (d,1).
    pub fn make_trivial(d: usize) -> Self {
        Self::new(d, vec![(d, 1)], identity(d)).expect("trivial structure is valid")
    }

    /// Tensor-factor subalgebra of B(C^m ⊗ C^n).
    ///
    /// `keep_first` = true gives N = M_m ⊗ 1_n (blocks [(n, m)] after the
    /// swap to canonical coordinates), false gives N = 1_m ⊗ M_n
    /// (blocks [(m, n)], identity basis).
    pub fn make_tensor_factor(m: usize, n: usize, keep_first: bool) -> Self {
        let d = m * n;
        if keep_first {
            // canonical coords put the multiplicity factor first: swap m↔n
            let mut u = CMat::zeros(d, d);
            for i in 0..m {
                for j in 0..n {
                    // ambient index i·n+j  →  canonical index j·m+i
                    u[(j * m + i, i * n + j)] = cr(1.0);
                }
            }
            Self::new(d, vec![(n, m)], u).expect("factor structure is valid")
        } else {
            Self::new(d, vec![(m, n)], identity(d)).expect("factor structure is valid")
        }
    }

    /// The full algebra B(C^d): single block (1, d).
    pub fn make_full(d: usize) -> Self {
        Self::new(d, vec![(1, d)], identity(d)).expect("full structure is valid")
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    pub fn basis_unitary(&self) -> &CMat {
        &self.basis_unitary
    }

    /// Offset of each block in canonical coordinates.
    pub fn offsets(&self) -> Vec<usize> {
        block_offsets(&self.blocks)
    }

    pub fn to_canonical(&self, x: &CMat) -> CMat {
        &self.basis_unitary * x * self.basis_unitary.adjoint()
    }

    pub fn from_canonical(&self, y: &CMat) -> CMat {
        self.basis_unitary.adjoint() * y * &self.basis_unitary
    }

    /// Assemble an ambient-coordinates element of N from matrix components
    /// x_k ∈ M_{n_k} (each block carries 1_{m_k} ⊗ x_k).
    pub fn element_from_components(&self, comps: &[CMat]) -> Result<CMat> {
        if comps.len() != self.blocks.len() {
            return Err(AlgebraError::DimensionMismatch(
                "component count != block count".into(),
            ));
        }
        let mut y = CMat::zeros(self.ambient_dim, self.ambient_dim);
        let offs = self.offsets();
        for (k, &(m, n)) in self.blocks.iter().enumerate() {
            if comps[k].nrows() != n || comps[k].ncols() != n {
                return Err(AlgebraError::DimensionMismatch(format!(
                    "component {k} must be {n}×{n}"
                )));
            }
            for a in 0..m {
                let base = offs[k] + a * n;
                for i in 0..n {
                    for j in 0..n {
                        y[(base + i, base + j)] = comps[k][(i, j)];
                    }
                }
            }
        }
        Ok(self.from_canonical(&y))
    }

    /// Matrix components of E_N(x) per block (tr over multiplicity of the
    /// canonical diagonal block, divided by m_k).
    pub fn compress_blocks(&self, x: &CMat) -> Result<Vec<CMat>> {
        if x.nrows() != self.ambient_dim || x.ncols() != self.ambient_dim {
            return Err(AlgebraError::DimensionMismatch(format!(
                "operator is {}×{}, ambient dim {}",
                x.nrows(),
                x.ncols(),
                self.ambient_dim
            )));
        }
        let y = self.to_canonical(x);
        let offs = self.offsets();
        let mut comps = Vec::with_capacity(self.blocks.len());
        for (k, &(m, n)) in self.blocks.iter().enumerate() {
            let mut z = CMat::zeros(n, n);
            for a in 0..m {
                let base = offs[k] + a * n;
                for i in 0..n {
                    for j in 0..n {
                        z[(i, j)] += y[(base + i, base + j)];
                    }
                }
            }
            comps.push(z.unscale(m as f64));
        }
        Ok(comps)
    }

    /// Trace-preserving conditional expectation onto N: per block,
    /// E(x) = 1_{m_k}/m_k ⊗ tr_mult(P_k x P_k), off-block entries zeroed.
    pub fn conditional_expectation(&self, x: &CMat) -> Result<CMat> {
        let comps = self.compress_blocks(x)?;
        self.element_from_components(&comps)
    }

    /// ‖E_N(x) − x‖∞ ≤ tol.
    pub fn membership(&self, x: &CMat, tol: f64) -> Result<bool> {
        let e = self.conditional_expectation(x)?;
        Ok(max_abs_diff(&e, x) <= tol)
    }

    /// Index from the block formula λ⁻¹ = Σₖ min{m_k, n_k}·m_k.
    pub fn pimsner_popa_index(&self) -> PimsnerPopaIndex {
        let inverse = self
            .blocks
            .iter()
            .map(|&(m, n)| m.min(n) * m)
            .sum::<usize>();
        PimsnerPopaIndex { inverse }
    }

    /// Variational index oracle: λ = min over unit ψ of
    /// 1/⟨ψ|E_N(|ψ⟩⟨ψ|)⁺|ψ⟩, located by multi-start projected ascent plus
    /// the analytic candidate from [`index_projection`](Self::index_projection).
    ///
    /// Independent of the block formula; serves as its cross-check.
    pub fn index_by_sdp(&self, seed: u64) -> Result<f64> {
        let d = self.ambient_dim;
        let mut rng = rng_from_seed(seed);
        let f = |psi: &CVec| -> f64 {
            let rho = psi * psi.adjoint();
            let e = self.conditional_expectation(&rho).expect("dims match");
            let pinv = linops::matrix_power(&e, -1.0).expect("PSD");
            (psi.adjoint() * pinv * psi)[(0, 0)].re
        };

        let mut starts: Vec<CVec> = Vec::new();
        if let Ok((e, _)) = self.index_projection() {
            // top eigenvector of the analytic index-achieving projection
            let (vals, vecs) = eig_hermitian(e.matrix()).expect("projection");
            let top = vals.len() - 1;
            starts.push(CVec::from_column_slice(vecs.column(top).as_slice()));
        }
        for _ in 0..14 {
            starts.push(crate::rand_util::random_unit_vector(d, &mut rng));
        }

        let mut best: Vec<f64> = Vec::new();
        for s in &starts {
            let v = ascend_sphere(s, &f, 400);
            best.push(v);
        }
        best.sort_by(|a, b| b.total_cmp(a));
        let top = best[0];
        let cluster = best.iter().filter(|&&v| top - v < 1e-5 * top.max(1.0)).count();
        if cluster < 2 {
            return Err(AlgebraError::NonConvergence(format!(
                "only {cluster} start(s) reached the best value {top:.8}"
            )));
        }
        Ok(1.0 / top)
    }

    /// Index-achieving projection pair: a rank-one e with
    /// E_N(e) = λ·f for a projection f ∈ N.
    ///
    /// Built as |φ⟩⟨φ| with |φ⟩ = Σₖ √(λ·rₖmₖ)·|φₖ⟩, where |φₖ⟩ is the
    /// maximally entangled vector of Schmidt rank rₖ = min{mₖ,nₖ} in block k;
    /// the weights make E_N(e) proportional to a projection across blocks.
    pub fn index_projection(&self) -> Result<(Projection, Projection)> {
        let d = self.ambient_dim;
        let idx = self.pimsner_popa_index();
        let lambda = idx.lambda();
        let offs = self.offsets();
        let mut phi = CVec::zeros(d);
        let mut f_canon = CMat::zeros(d, d);
        for (k, &(m, n)) in self.blocks.iter().enumerate() {
            let r = m.min(n);
            let w = lambda * (r * m) as f64;
            for i in 0..r {
                phi[offs[k] + i * n + i] = cr((w / r as f64).sqrt());
            }
            // f has 1_{m}⊗P_r on block k
            for a in 0..m {
                for i in 0..r {
                    let p = offs[k] + a * n + i;
                    f_canon[(p, p)] = cr(1.0);
                }
            }
        }
        let phi_amb = self.basis_unitary.adjoint() * phi;
        let e_mat = &phi_amb * phi_amb.adjoint();
        let f_mat = self.from_canonical(&f_canon);
        let e_exp = self.conditional_expectation(&e_mat).expect("dims");
        let residual = max_abs_diff(&e_exp, &f_mat.scale(lambda));
        if residual > 1e-9 {
            return Err(AlgebraError::ConstructionFailed(residual));
        }
        let e = Projection::new(e_mat).map_err(|_| AlgebraError::ConstructionFailed(residual))?;
        let f = Projection::new(f_mat).map_err(|_| AlgebraError::ConstructionFailed(residual))?;
        Ok((e, f))
    }

    /// The maximally N-coherent state e/tr(e).
    pub fn max_coherent_state(&self) -> Result<crate::linops::DensityOperator> {
        let (e, _) = self.index_projection()?;
        let tr = linops::trace_re(e.matrix());
        crate::linops::DensityOperator::state(e.matrix().unscale(tr))
            .map_err(|_| AlgebraError::ConstructionFailed(0.0))
    }

    /// N^⊗n with blocks over all block tuples and the permuted tensor basis.
    pub fn tensor_power(&self, n: usize) -> Result<SubalgebraStructure> {
        assert!(n >= 1);
        let d = self.ambient_dim;
        let dn = d.checked_pow(n as u32).unwrap_or(usize::MAX);
        if dn > DIM_CAP {
            return Err(AlgebraError::DimensionTooLarge(dn, DIM_CAP));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        let base_offsets = self.offsets();
        let nb = self.blocks.len();

        // Lexicographic block tuples, then canonical sort in `new`.
        let mut tuples: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..n {
            let mut next = Vec::with_capacity(tuples.len() * nb);
            for t in &tuples {
                for k in 0..nb {
                    let mut t2 = t.clone();
                    t2.push(k);
                    next.push(t2);
                }
            }
            tuples = next;
        }
        let prod_blocks: Vec<(usize, usize)> = tuples
            .iter()
            .map(|t| {
                let m: usize = t.iter().map(|&k| self.blocks[k].0).product();
                let nn: usize = t.iter().map(|&k| self.blocks[k].1).product();
                (m, nn)
            })
            .collect();
        let prod_offsets = block_offsets(&prod_blocks);

        // Map each U^⊗n-coordinate (per-copy canonical index) into the
        // product-canonical layout (block tuple, joint multiplicity, joint
        // matrix index).
        let mut perm_rows = vec![0usize; dn];
        for (src, row) in perm_rows.iter_mut().enumerate() {
            let mut rest = src;
            let mut ks = Vec::with_capacity(n);
            let mut aas = Vec::with_capacity(n);
            let mut bbs = Vec::with_capacity(n);
            let mut digits = vec![0usize; n];
            for i in (0..n).rev() {
                digits[i] = rest % d;
                rest /= d;
            }
            for &ci in &digits {
                let k = match base_offsets.binary_search(&ci) {
                    Ok(k) => k,
                    Err(k) => k - 1,
                };
                let within = ci - base_offsets[k];
                let (_, bn) = self.blocks[k];
                ks.push(k);
                aas.push(within / bn);
                bbs.push(within % bn);
            }
            let tuple_id = ks.iter().fold(0usize, |acc, &k| acc * nb + k);
            let (_, nn) = prod_blocks[tuple_id];
            let mut aj = 0usize;
            let mut bj = 0usize;
            for i in 0..n {
                let (m_i, n_i) = self.blocks[ks[i]];
                aj = aj * m_i + aas[i];
                bj = bj * n_i + bbs[i];
            }
            *row = prod_offsets[tuple_id] + aj * nn + bj;
        }

        // U_total = P · U^⊗n
        let mut un = identity(1);
        for _ in 0..n {
            un = kron(&un, &self.basis_unitary);
        }
        let mut u_total = CMat::zeros(dn, dn);
        for (src, &dst) in perm_rows.iter().enumerate() {
            u_total.set_row(dst, &un.row(src));
        }
        SubalgebraStructure::new(dn, prod_blocks, u_total)
    }

    /// Sample a random state of S(N) (full rank within N's support pattern).
    pub fn random_state(&self, rng: &mut SeedRng) -> crate::linops::DensityOperator {
        let comps: Vec<CMat> = self
            .blocks
            .iter()
            .map(|&(_, n)| {
                let g = ginibre(n, n, rng);
                &g * g.adjoint()
            })
            .collect();
        let raw = self
            .element_from_components(&comps)
            .expect("component shapes match");
        let tr = linops::trace_re(&raw);
        crate::linops::DensityOperator::state(raw.unscale(tr)).expect("PSD with unit trace")
    }

    /// Verify the free-state axioms on sampled states of S(N^⊗k), k ≤ n_max.
    pub fn axioms_check(&self, n_max: usize, samples: usize, seed: u64) -> Result<AxiomsReport> {
        let d = self.ambient_dim;
        if d.pow(n_max as u32) > DIM_CAP {
            return Err(AlgebraError::DimensionTooLarge(d.pow(n_max as u32), DIM_CAP));
        }
        let mut rng = rng_from_seed(seed);
        let tol = 1e-9;
        let powers: Vec<SubalgebraStructure> =
            (1..=n_max).map(|k| self.tensor_power(k).expect("cap checked")).collect();
        let mut report = AxiomsReport::default();

        for _ in 0..samples {
            // Axiom 1: convexity (mixtures of members stay members).
            let k = 1 + (rng.random::<u32>() as usize) % n_max;
            let nk = &powers[k - 1];
            let s1 = nk.random_state(&mut rng);
            let s2 = nk.random_state(&mut rng);
            let t: f64 = rng.random();
            let mix = s1.matrix().scale(t) + s2.matrix().scale(1.0 - t);
            report.record(1, violation(nk, &mix), tol);

            // Axiom 2: σ^⊗k membership for full-rank σ ∈ S(N).
            let sigma = self.random_state(&mut rng);
            let mut pow = sigma.matrix().clone();
            for _ in 1..k {
                pow = kron(&pow, sigma.matrix());
            }
            report.record(2, violation(&powers[k - 1], &pow), tol);

            // Axiom 3: partial trace drops to S(N^{k-1}).
            if k >= 2 {
                let rho = powers[k - 1].random_state(&mut rng);
                let drop = (rng.random::<u32>() as usize) % k;
                let keep: Vec<usize> = (0..k).filter(|&f| f != drop).collect();
                let dims = vec![d; k];
                let reduced = linops::partial_trace(rho.matrix(), &dims, &keep)
                    .expect("dims consistent");
                report.record(3, violation(&powers[k - 2], &reduced), tol);
            }

            // Axiom 4: tensor products multiply up.
            let a = 1 + (rng.random::<u32>() as usize) % n_max;
            let b = 1 + (rng.random::<u32>() as usize) % n_max;
            if a + b <= n_max {
                let ra = powers[a - 1].random_state(&mut rng);
                let rb = powers[b - 1].random_state(&mut rng);
                let prod = kron(ra.matrix(), rb.matrix());
                report.record(4, violation(&powers[a + b - 1], &prod), tol);
            }

            // Axiom 5: permutation invariance of S(N^⊗k).
            if k >= 2 {
                let rho = powers[k - 1].random_state(&mut rng);
                let mut perm: Vec<usize> = (0..k).collect();
                for i in (1..k).rev() {
                    let j = (rng.random::<u32>() as usize) % (i + 1);
                    perm.swap(i, j);
                }
                let dims = vec![d; k];
                let permuted =
                    linops::permute_factors(rho.matrix(), &dims, &perm).expect("dims");
                report.record(5, violation(&powers[k - 1], &permuted), tol);
            }
        }
        Ok(report)
    }
}

fn violation(n: &SubalgebraStructure, x: &CMat) -> f64 {
    let e = n.conditional_expectation(x).expect("dims");
    max_abs_diff(&e, x)
}

fn block_offsets(blocks: &[(usize, usize)]) -> Vec<usize> {
    let mut offs = Vec::with_capacity(blocks.len());
    let mut acc = 0usize;
    for &(m, n) in blocks {
        offs.push(acc);
        acc += m * n;
    }
    offs
}

/// Per-axiom tallies from [`SubalgebraStructure::axioms_check`].
#[derive(Debug, Default, Clone)]
pub struct AxiomsReport {
    pub checks: [usize; 5],
    pub failures: [usize; 5],
    pub max_violation: [f64; 5],
}

impl AxiomsReport {
    fn record(&mut self, axiom: usize, viol: f64, tol: f64) {
        let i = axiom - 1;
        self.checks[i] += 1;
        self.max_violation[i] = self.max_violation[i].max(viol);
        if viol > tol {
            self.failures[i] += 1;
        }
    }

    pub fn all_pass(&self) -> bool {
        self.failures.iter().all(|&f| f == 0)
    }
}

/// Projected (FD-gradient) ascent of `f` on the unit sphere.
fn ascend_sphere(start: &CVec, f: &impl Fn(&CVec) -> f64, max_iter: usize) -> f64 {
    let d = start.len();
    let mut psi = start.clone();
    let mut val = f(&psi);
    let h = 1e-6;
    for _ in 0..max_iter {
        // numerical gradient over real/imag parts
        let mut grad = CVec::zeros(d);
        for i in 0..d {
            let mut p = psi.clone();
            p[i] += cr(h);
            let fr = f(&p.clone().unscale(p.norm()));
            let mut q = psi.clone();
            q[i] += crate::linops::c(0.0, h);
            let fi = f(&q.clone().unscale(q.norm()));
            grad[i] = crate::linops::c((fr - val) / h, (fi - val) / h);
        }
        let gnorm = grad.norm();
        if gnorm < 1e-11 {
            break;
        }
        let mut step = 0.5 / gnorm.max(1.0);
        let mut improved = false;
        for _ in 0..40 {
            let cand = &psi + grad.scale(step);
            let cand = cand.clone().unscale(cand.norm());
            let v = f(&cand);
            if v > val + 1e-14 {
                psi = cand;
                val = v;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    val
}

/// Generator interpretation for [`decompose_from_generators`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorMode {
    /// N = unital *-algebra generated by the inputs.
    Algebra,
    /// N = {x : gx = xg and g*x = xg* for all generators g}. For a group
    /// representation {U_g} this is the G-invariant subalgebra.
    Commutant,
}

#[derive(Debug, Clone)]
pub struct DecomposeOptions {
    pub mode: GeneratorMode,
    pub seed: u64,
    pub max_retries: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        Self {
            mode: GeneratorMode::Commutant,
            seed: crate::rand_util::DEFAULT_SEED,
            max_retries: 20,
        }
    }
}

/// Recover the canonical block structure and basis unitary of the subalgebra
/// described by `gens`.
///
/// Algorithm: (1) compute N as a vector space (commutant nullspace or
/// *-algebra closure), (2) split central blocks by the eigenspaces of a
/// random Hermitian center element, (3) inside each central block read the
/// multiplicity structure off a random Hermitian algebra element, (4) align
/// eigenspace bases with an algebra element and orthonormalize into U.
pub fn decompose_from_generators(
    gens: &[CMat],
    opts: &DecomposeOptions,
) -> Result<SubalgebraStructure> {
    let d = infer_dim(gens)?;
    let basis = match opts.mode {
        GeneratorMode::Commutant => commutant_basis(gens, d)?,
        GeneratorMode::Algebra => algebra_closure_basis(gens, d)?,
    };
    star_closure_check(&basis)?;

    let mut rng = rng_from_seed(opts.seed);
    let mut last_err = AlgebraError::DegenerateSample(opts.max_retries);
    for _ in 0..opts.max_retries {
        match try_decompose(&basis, d, gens, opts.mode, &mut rng) {
            Ok(s) => return Ok(s),
            Err(e @ AlgebraError::DegenerateSample(_)) => {
                last_err = e;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last_err)
}

fn infer_dim(gens: &[CMat]) -> Result<usize> {
    let d = gens.first().map(|g| g.nrows()).unwrap_or(0);
    if d == 0 {
        return Err(AlgebraError::DimensionMismatch(
            "need at least one generator to fix the dimension".into(),
        ));
    }
    for g in gens {
        if g.nrows() != d || g.ncols() != d {
            return Err(AlgebraError::DimensionMismatch(
                "generators must share a square shape".into(),
            ));
        }
    }
    Ok(d)
}

/// Orthonormal (Hilbert–Schmidt) basis of {x : [x,g] = [x,g*] = 0 ∀g}.
fn commutant_basis(gens: &[CMat], d: usize) -> Result<Vec<CMat>> {
    // vec is column-stacking; vec(gx − xg) = (I⊗g − gᵀ⊗I)vec(x)
    let mut rows: Vec<CMat> = Vec::new();
    for g in gens {
        for gg in [g.clone(), g.adjoint()] {
            let op = kron(&identity(d), &gg) - kron(&gg.transpose(), &identity(d));
            rows.push(op);
        }
    }
    if rows.is_empty() {
        // commutant of nothing is everything
        return Ok(matrix_unit_basis(d));
    }
    let total: usize = rows.len() * d * d;
    let mut stacked = CMat::zeros(total, d * d);
    for (i, op) in rows.iter().enumerate() {
        stacked.view_mut((i * d * d, 0), (d * d, d * d)).copy_from(op);
    }
    let svd = stacked.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let cut = 1e-9 * smax.max(1.0);
    let mut basis = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cut {
            let row = vt.row(i).adjoint();
            basis.push(unvec(&row, d));
        }
    }
    // include any directions beyond the listed singular values (rank-deficient tail)
    for i in svd.singular_values.len()..vt.nrows() {
        let row = vt.row(i).adjoint();
        basis.push(unvec(&row, d));
    }
    Ok(orthonormalize(basis, d))
}

/// Orthonormal basis of the unital *-algebra generated by `gens`.
fn algebra_closure_basis(gens: &[CMat], d: usize) -> Result<Vec<CMat>> {
    let mut seed: Vec<CMat> = vec![identity(d)];
    for g in gens {
        seed.push(g.clone());
        seed.push(g.adjoint());
    }
    let mut basis = orthonormalize(seed, d);
    loop {
        let mut grew = false;
        let snapshot = basis.clone();
        for a in &snapshot {
            for b in &snapshot {
                let p = a * b;
                let r = project_out(&p, &basis);
                let n = r.norm();
                if n > 1e-9 {
                    basis.push(r.unscale(n));
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
        if basis.len() > d * d {
            return Err(AlgebraError::NotClosedUnderStar);
        }
    }
    Ok(basis)
}

fn matrix_unit_basis(d: usize) -> Vec<CMat> {
    let mut basis = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let mut e = CMat::zeros(d, d);
            e[(i, j)] = cr(1.0);
            basis.push(e);
        }
    }
    basis
}

fn unvec(v: &CVec, d: usize) -> CMat {
    CMat::from_fn(d, d, |i, j| v[j * d + i])
}

fn project_out(x: &CMat, basis: &[CMat]) -> CMat {
    let mut r = x.clone();
    for b in basis {
        let c = linops::hs_inner(b, &r);
        r -= b.scale(1.0) * c;
    }
    r
}

fn orthonormalize(cands: Vec<CMat>, _d: usize) -> Vec<CMat> {
    let mut basis: Vec<CMat> = Vec::new();
    for x in cands {
        let r = project_out(&x, &basis);
        let n = r.norm();
        if n > 1e-9 {
            basis.push(r.unscale(n));
        }
    }
    basis
}

/// The span must be closed under adjoints.
fn star_closure_check(basis: &[CMat]) -> Result<()> {
    for b in basis {
        let adj = b.adjoint();
        let r = project_out(&adj, basis);
        if r.norm() > 1e-8 {
            return Err(AlgebraError::NotClosedUnderStar);
        }
    }
    Ok(())
}

fn random_hermitian_in_span(basis: &[CMat], rng: &mut SeedRng) -> CMat {
    let d = basis[0].nrows();
    let mut x = CMat::zeros(d, d);
    for b in basis {
        x += b.scale(crate::rand_util::normal(rng))
            + b.scale(1.0) * crate::linops::c(0.0, crate::rand_util::normal(rng));
    }
    hermitize(&x)
}

fn try_decompose(
    basis: &[CMat],
    d: usize,
    gens: &[CMat],
    mode: GeneratorMode,
    rng: &mut SeedRng,
) -> Result<SubalgebraStructure> {
    // Center of N within the span coordinates.
    let center = center_basis(basis, d);
    let z = random_hermitian_in_span(&center, rng);
    let (zvals, zvecs) = eig_hermitian(&z).map_err(|_| AlgebraError::DegenerateSample(0))?;
    let clusters = cluster_indices(zvals.as_slice(), DEGENERACY_GAP * max_abs(&z).max(1.0));

    struct CentralBlock {
        m: usize,
        n: usize,
        rows: Vec<CVec>,
    }
    let mut central: Vec<CentralBlock> = Vec::new();

    for cluster in &clusters {
        let dim_c = cluster.len();
        // basis of the central block subspace
        let cols: Vec<CVec> = cluster
            .iter()
            .map(|&i| CVec::from_column_slice(zvecs.column(i).as_slice()))
            .collect();
        // restrict N to the block: n_c² = dim of compressed algebra
        let proj: CMat = {
            let mut p = CMat::zeros(d, d);
            for v in &cols {
                p += v * v.adjoint();
            }
            p
        };
        let compressed: Vec<CMat> = basis.iter().map(|b| &proj * b * &proj).collect();
        let comp_basis = orthonormalize(compressed, d);
        let alg_dim = comp_basis.len();
        let n_c = (alg_dim as f64).sqrt().round() as usize;
        if n_c * n_c != alg_dim || dim_c % n_c != 0 {
            return Err(AlgebraError::DegenerateSample(0));
        }
        let m_c = dim_c / n_c;

        // random Hermitian element of the restricted algebra
        let a = random_hermitian_in_span(&comp_basis, rng);
        let (avals, avecs) = eig_hermitian(&a).map_err(|_| AlgebraError::DegenerateSample(0))?;
        // keep only eigenvectors inside the block (eigenvalue of proj ≈ 1)
        let inside: Vec<usize> = (0..d)
            .filter(|&i| {
                let v = avecs.column(i);
                let pv = &proj * v;
                pv.norm() > 0.5
            })
            .collect();
        if inside.len() != dim_c {
            return Err(AlgebraError::DegenerateSample(0));
        }
        let in_vals: Vec<f64> = inside.iter().map(|&i| avals[i]).collect();
        let sub_clusters = cluster_indices(&in_vals, DEGENERACY_GAP * max_abs(&a).max(1.0));
        if sub_clusters.len() != n_c || sub_clusters.iter().any(|c| c.len() != m_c) {
            return Err(AlgebraError::DegenerateSample(0));
        }

        // eigenspace bases, aligned via a generic algebra element y
        let eigenspaces: Vec<Vec<CVec>> = sub_clusters
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&j| CVec::from_column_slice(avecs.column(inside[j]).as_slice()))
                    .collect()
            })
            .collect();
        let y = random_hermitian_in_span(&comp_basis, rng);
        let mut aligned: Vec<Vec<CVec>> = vec![eigenspaces[0].clone()];
        for i in 1..n_c {
            let p_i: CMat = eigenspaces[i]
                .iter()
                .fold(CMat::zeros(d, d), |acc, v| acc + v * v.adjoint());
            let mut w_i = Vec::with_capacity(m_c);
            for s in 0..m_c {
                let cand = &p_i * &y * &aligned[0][s];
                let nn = cand.norm();
                if nn < 1e-8 {
                    return Err(AlgebraError::DegenerateSample(0));
                }
                w_i.push(cand.unscale(nn));
            }
            aligned.push(w_i);
        }

        // canonical rows ordered (multiplicity slow, matrix index fast)
        let mut rows = Vec::with_capacity(dim_c);
        for s in 0..m_c {
            for i in 0..n_c {
                rows.push(aligned[i][s].clone());
            }
        }
        central.push(CentralBlock {
            m: m_c,
            n: n_c,
            rows,
        });
    }

    let blocks: Vec<(usize, usize)> = central.iter().map(|c| (c.m, c.n)).collect();
    let mut u = CMat::zeros(d, d);
    let mut row = 0usize;
    for c in &central {
        for v in &c.rows {
            u.set_row(row, &v.adjoint());
            row += 1;
        }
    }
    // Re-orthonormalize rows (alignment is orthogonal in exact arithmetic;
    // this scrubs the numerical residue).
    let q = gram_schmidt_rows(&u)?;
    let structure = SubalgebraStructure::new(d, blocks, q)?;
    verify_decomposition(&structure, basis, gens, mode)?;
    Ok(structure)
}

fn gram_schmidt_rows(u: &CMat) -> Result<CMat> {
    let d = u.nrows();
    let mut q = u.clone();
    for i in 0..d {
        for j in 0..i {
            let proj: nalgebra::Complex<f64> = (0..d).map(|k| q[(j, k)].conj() * q[(i, k)]).sum();
            for k in 0..d {
                let qjk = q[(j, k)];
                q[(i, k)] -= proj * qjk;
            }
        }
        let norm: f64 = (0..d).map(|k| q[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-10 {
            return Err(AlgebraError::DegenerateSample(0));
        }
        for k in 0..d {
            q[(i, k)] = q[(i, k)].unscale(norm);
        }
    }
    Ok(q)
}

fn center_basis(basis: &[CMat], d: usize) -> Vec<CMat> {
    // {x ∈ span(basis) : [x, b] = 0 ∀b}: nullspace in span coordinates.
    let nb = basis.len();
    let mut stacked = CMat::zeros(nb * d * d, nb);
    for (j, bj) in basis.iter().enumerate() {
        for (i, bi) in basis.iter().enumerate() {
            let comm = bi * bj - bj * bi;
            for r in 0..d {
                for s in 0..d {
                    stacked[(j * d * d + s * d + r, i)] = comm[(r, s)];
                }
            }
        }
    }
    let svd = stacked.svd(false, true);
    let vt = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let cut = 1e-9 * smax.max(1.0);
    let mut center = Vec::new();
    for i in 0..vt.nrows() {
        let in_null = i >= svd.singular_values.len() || svd.singular_values[i] <= cut;
        if in_null {
            let coef = vt.row(i).adjoint();
            let mut x = CMat::zeros(d, d);
            for (k, b) in basis.iter().enumerate() {
                x += b.scale(1.0) * coef[k];
            }
            center.push(x);
        }
    }
    orthonormalize(center, d)
}

fn cluster_indices(vals: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match clusters.last_mut() {
            Some(c) if (vals[i] - vals[*c.last().unwrap()]).abs() < gap => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    clusters
}

fn verify_decomposition(
    s: &SubalgebraStructure,
    basis: &[CMat],
    gens: &[CMat],
    mode: GeneratorMode,
) -> Result<()> {
    // Every basis element of N must be fixed by E_N.
    for b in basis {
        if !s.membership(b, 1e-8).expect("dims") {
            return Err(AlgebraError::DegenerateSample(0));
        }
    }
    // Conjugated generators: in algebra mode they are block-form (in N);
    // in commutant mode they lie in N′, i.e. commute with everything in N.
    match mode {
        GeneratorMode::Algebra => {}
        GeneratorMode::Commutant => {
            let probe = s
                .element_from_components(
                    &s.blocks
                        .iter()
                        .map(|&(_, n)| {
                            CMat::from_fn(n, n, |i, j| cr(((i + 2 * j + 1) % 5) as f64))
                        })
                        .collect::<Vec<_>>(),
                )
                .expect("shapes");
            for g in gens {
                let comm = g * &probe - &probe * g;
                if max_abs(&comm) > 1e-8 * max_abs(g).max(1.0) {
                    return Err(AlgebraError::DegenerateSample(0));
                }
            }
        }
    }
    Ok(())
}
