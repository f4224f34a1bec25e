//! Dense log-barrier path-following core for cone programs
//!
//!   minimize cᵀv  subject to  G_j(v) ∈ K_j,
//!
//! where each K_j is a Hermitian-PSD cone, a second-order cone, or the
//! nonnegative reals, and every G_j is affine in the real parameter vector v.
//! Affine maps are described by per-parameter "atoms" (weighted matrix
//! entries), which keeps Hessian assembly at O(atoms²) independent of how
//! variables are scattered through the blocks.
//!
//! Every solve returns the primal point together with the barrier duals
//! Λ_j = G_j⁻¹/t, whose conic feasibility, stationarity residual, and gap
//! Σ ν_j/t are rechecked by [`verify`].

use crate::linops::{c, cr, CMat, C64};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

/// Strict Cholesky of a Hermitian matrix: returns the lower factor L with
/// G = LL*, or None when G is not positive definite. (The library routine
/// does not reliably reject indefinite complex input.)
pub fn chol_hermitian(g: &CMat) -> Option<CMat> {
    let n = g.nrows();
    let mut l = CMat::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = cr(dj);
        for i in (j + 1)..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / cr(dj);
        }
    }
    Some(l)
}

/// Inverse from the lower Cholesky factor: G⁻¹ = (L⁻¹)* L⁻¹.
fn inverse_from_chol(l: &CMat) -> CMat {
    let n = l.nrows();
    // forward-substitute L·X = I column by column
    let mut linv = CMat::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col { cr(1.0) } else { cr(0.0) };
            for k in col..i {
                s -= l[(i, k)] * linv[(k, col)];
            }
            linv[(i, col)] = s / l[(i, i)];
        }
    }
    linv.adjoint() * linv
}

fn logdet_from_chol(l: &CMat) -> f64 {
    (0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum()
}

/// Strict Cholesky solve for the real SPD Newton system.
fn real_chol_solve(h: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let n = h.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = h[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = h[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    let solve_with = |rhs: &DVector<f64>| -> DVector<f64> {
        let mut y = DVector::zeros(n);
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        let mut x = DVector::zeros(n);
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        x
    };
    let mut x = solve_with(b);
    // one sweep of iterative refinement
    let r = b - h * &x;
    x += solve_with(&r);
    Some(x)
}

#[derive(Debug, Error)]
pub enum IpmError {
    #[error("initial point is not strictly feasible (block {0})")]
    InfeasibleStart(usize),
    #[error("Newton system could not be factored")]
    SingularSystem,
    #[error("iteration limit reached at gap {0:.3e}")]
    IterationLimit(f64),
}

/// One weighted entry of a direction matrix: dG += w·E_{row,col} per unit
/// of the parameter.
#[derive(Debug, Clone, Copy)]
pub struct Atom {
    pub row: usize,
    pub col: usize,
    pub w: C64,
}

/// Hermitian parameter bookkeeping.
///
/// A p×p Hermitian variable uses p² real parameters: the p diagonal entries
/// first, then (re, im) pairs for each i<j in row-major order.
pub fn herm_param_count(p: usize) -> usize {
    p * p
}

/// Entry decomposition of Hermitian parameter `local` for a p×p variable:
/// the matrix direction is Σ w·E_{r,c} over the returned list.
pub fn herm_param_entries(p: usize, local: usize) -> Vec<(usize, usize, C64)> {
    if local < p {
        return vec![(local, local, cr(1.0))];
    }
    let mut k = local - p;
    // row-major enumeration of i<j pairs, two params each
    let pair = k / 2;
    let is_im = k % 2 == 1;
    let mut i = 0usize;
    k = pair;
    let mut row_len = p - 1;
    while k >= row_len {
        k -= row_len;
        i += 1;
        row_len -= 1;
    }
    let j = i + 1 + k;
    if is_im {
        vec![(i, j, c(0.0, 1.0)), (j, i, c(0.0, -1.0))]
    } else {
        vec![(i, j, cr(1.0)), (j, i, cr(1.0))]
    }
}

pub fn herm_build(vals: &[f64], p: usize) -> CMat {
    let mut m = CMat::zeros(p, p);
    for i in 0..p {
        m[(i, i)] = cr(vals[i]);
    }
    let mut idx = p;
    for i in 0..p {
        for j in (i + 1)..p {
            let z = c(vals[idx], vals[idx + 1]);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            idx += 2;
        }
    }
    m
}

/// Real parameters of a Hermitian matrix in the layout above.
pub fn herm_params(m: &CMat) -> Vec<f64> {
    let p = m.nrows();
    let mut v = Vec::with_capacity(p * p);
    for i in 0..p {
        v.push(m[(i, i)].re);
    }
    for i in 0..p {
        for j in (i + 1)..p {
            v.push(m[(i, j)].re);
            v.push(m[(i, j)].im);
        }
    }
    v
}

/// General complex p×q variable: 2pq reals, (re, im) per entry row-major.
pub fn gen_param_count(p: usize, q: usize) -> usize {
    2 * p * q
}

pub fn gen_build(vals: &[f64], p: usize, q: usize) -> CMat {
    CMat::from_fn(p, q, |i, j| c(vals[2 * (i * q + j)], vals[2 * (i * q + j) + 1]))
}

pub fn gen_params(m: &CMat) -> Vec<f64> {
    let (p, q) = m.shape();
    let mut v = Vec::with_capacity(2 * p * q);
    for i in 0..p {
        for j in 0..q {
            v.push(m[(i, j)].re);
            v.push(m[(i, j)].im);
        }
    }
    v
}

/// Handle to a Hermitian variable inside a [`ConeProgram`].
#[derive(Debug, Clone, Copy)]
pub struct HermVar {
    pub offset: usize,
    pub p: usize,
}

/// Handle to a general complex variable.
#[derive(Debug, Clone, Copy)]
pub struct GenVar {
    pub offset: usize,
    pub p: usize,
    pub q: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ScalVar {
    pub offset: usize,
}

/// PSD block G(v) = F0 + Σ_params v_p · D_p, D_p given by atoms.
#[derive(Debug, Clone)]
pub struct PsdBlock {
    pub n: usize,
    pub f0: CMat,
    /// (global param index, atoms) — one entry per involved parameter.
    pub params: Vec<(usize, Vec<Atom>)>,
}

impl PsdBlock {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            f0: CMat::zeros(n, n),
            params: Vec::new(),
        }
    }

    fn entry(&mut self, global: usize) -> &mut Vec<Atom> {
        if let Some(pos) = self.params.iter().position(|(g, _)| *g == global) {
            return &mut self.params[pos].1;
        }
        self.params.push((global, Vec::new()));
        &mut self.params.last_mut().unwrap().1
    }

    /// Place sign·X with the variable's (i,j) entry landing at
    /// (off+i·step, off+j·step), for each listed diagonal offset.
    pub fn add_herm(&mut self, var: HermVar, offsets_steps: &[(usize, usize)], sign: f64) {
        for local in 0..herm_param_count(var.p) {
            let entries = herm_param_entries(var.p, local);
            let atoms = self.entry(var.offset + local);
            for &(off, step) in offsets_steps {
                for &(r, cc, w) in &entries {
                    atoms.push(Atom {
                        row: off + r * step,
                        col: off + cc * step,
                        w: w * cr(sign),
                    });
                }
            }
        }
    }

    /// Place sign/m · Σ_a X[base+a·n+i, base+a·n+j] at (tgt+i, tgt+j):
    /// the multiplicity-partial-trace compression of a canonical block.
    pub fn add_herm_block_compress(
        &mut self,
        var: HermVar,
        base: usize,
        m: usize,
        n: usize,
        tgt: usize,
        sign: f64,
    ) {
        let coeff = sign / m as f64;
        for local in 0..herm_param_count(var.p) {
            let entries = herm_param_entries(var.p, local);
            let mut atoms: Vec<Atom> = Vec::new();
            for &(r, cc, w) in &entries {
                // does entry (r, cc) of X sit inside the compressed window?
                for a in 0..m {
                    let lo = base + a * n;
                    if r >= lo && r < lo + n && cc >= lo && cc < lo + n {
                        atoms.push(Atom {
                            row: tgt + (r - lo),
                            col: tgt + (cc - lo),
                            w: w * cr(coeff),
                        });
                    }
                }
            }
            if !atoms.is_empty() {
                self.entry(var.offset + local).extend(atoms);
            }
        }
    }

    /// Place sign·(Z at (r0,c0) and Z* at (c0,r0)).
    pub fn add_gen(&mut self, var: GenVar, r0: usize, c0: usize, sign: f64) {
        for i in 0..var.p {
            for j in 0..var.q {
                let re = var.offset + 2 * (i * var.q + j);
                self.entry(re).extend([
                    Atom {
                        row: r0 + i,
                        col: c0 + j,
                        w: cr(sign),
                    },
                    Atom {
                        row: c0 + j,
                        col: r0 + i,
                        w: cr(sign),
                    },
                ]);
                self.entry(re + 1).extend([
                    Atom {
                        row: r0 + i,
                        col: c0 + j,
                        w: c(0.0, sign),
                    },
                    Atom {
                        row: c0 + j,
                        col: r0 + i,
                        w: c(0.0, -sign),
                    },
                ]);
            }
        }
    }

    /// Place sign·(L·Z at (r0,c0) and its adjoint at (c0,r0)) for a fixed
    /// left multiplier L (rows × var.p).
    pub fn add_gen_left_mul(&mut self, var: GenVar, l: &CMat, r0: usize, c0: usize, sign: f64) {
        let rows = l.nrows();
        for i in 0..var.p {
            for j in 0..var.q {
                let re = var.offset + 2 * (i * var.q + j);
                let mut re_atoms = Vec::new();
                let mut im_atoms = Vec::new();
                for rr in 0..rows {
                    let w = l[(rr, i)] * cr(sign);
                    if w.norm() < 1e-300 {
                        continue;
                    }
                    re_atoms.push(Atom {
                        row: r0 + rr,
                        col: c0 + j,
                        w,
                    });
                    re_atoms.push(Atom {
                        row: c0 + j,
                        col: r0 + rr,
                        w: w.conj(),
                    });
                    let wi = w * c(0.0, 1.0);
                    im_atoms.push(Atom {
                        row: r0 + rr,
                        col: c0 + j,
                        w: wi,
                    });
                    im_atoms.push(Atom {
                        row: c0 + j,
                        col: r0 + rr,
                        w: wi.conj(),
                    });
                }
                self.entry(re).extend(re_atoms);
                self.entry(re + 1).extend(im_atoms);
            }
        }
    }

    /// Scalar variable times a constant Hermitian matrix at offset `off`.
    pub fn add_scalar(&mut self, var: ScalVar, mat: &CMat, off: usize) {
        let atoms = self.entry(var.offset);
        for i in 0..mat.nrows() {
            for j in 0..mat.ncols() {
                if mat[(i, j)].norm() > 1e-300 {
                    atoms.push(Atom {
                        row: off + i,
                        col: off + j,
                        w: mat[(i, j)],
                    });
                }
            }
        }
    }

    /// Arbitrary Hermitian direction for one parameter (dense fallback).
    pub fn add_dense_param(&mut self, global: usize, dir: &CMat, off: usize) {
        let atoms = self.entry(global);
        for i in 0..dir.nrows() {
            for j in 0..dir.ncols() {
                if dir[(i, j)].norm() > 1e-12 {
                    atoms.push(Atom {
                        row: off + i,
                        col: off + j,
                        w: dir[(i, j)],
                    });
                }
            }
        }
    }

    pub fn eval(&self, v: &[f64]) -> CMat {
        let mut g = self.f0.clone();
        for (p, atoms) in &self.params {
            let x = v[*p];
            if x != 0.0 {
                for a in atoms {
                    g[(a.row, a.col)] += a.w * cr(x);
                }
            }
        }
        g
    }
}

/// Second-order cone block: s(v) = s0 + A·v with s[0] ≥ ‖s[1..]‖.
#[derive(Debug, Clone)]
pub struct SocBlock {
    pub s0: Vec<f64>,
    /// sparse rows of A: rows[i] = [(param, coeff), ...]
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SocBlock {
    pub fn eval(&self, v: &[f64]) -> Vec<f64> {
        let mut s = self.s0.clone();
        for (i, row) in self.rows.iter().enumerate() {
            for &(p, a) in row {
                s[i] += a * v[p];
            }
        }
        s
    }

    fn resid(&self, v: &[f64]) -> f64 {
        let s = self.eval(v);
        s[0] * s[0] - s[1..].iter().map(|x| x * x).sum::<f64>()
    }
}

/// Scalar inequality g0 + a·v ≥ 0.
#[derive(Debug, Clone)]
pub struct LinBlock {
    pub g0: f64,
    pub a: Vec<(usize, f64)>,
}

impl LinBlock {
    pub fn eval(&self, v: &[f64]) -> f64 {
        self.g0 + self.a.iter().map(|&(p, w)| w * v[p]).sum::<f64>()
    }
}

/// A cone program plus its strictly feasible initial point.
#[derive(Debug, Clone, Default)]
pub struct ConeProgram {
    pub nvars: usize,
    pub objective: Vec<f64>,
    pub psd: Vec<PsdBlock>,
    pub soc: Vec<SocBlock>,
    pub lin: Vec<LinBlock>,
    pub init: Vec<f64>,
}

impl ConeProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn herm_var(&mut self, p: usize, init: &CMat) -> HermVar {
        let offset = self.nvars;
        self.nvars += herm_param_count(p);
        self.objective.resize(self.nvars, 0.0);
        self.init.extend(herm_params(init));
        HermVar { offset, p }
    }

    pub fn gen_var(&mut self, p: usize, q: usize, init: &CMat) -> GenVar {
        let offset = self.nvars;
        self.nvars += gen_param_count(p, q);
        self.objective.resize(self.nvars, 0.0);
        self.init.extend(gen_params(init));
        GenVar { offset, p, q }
    }

    pub fn scalar_var(&mut self, init: f64) -> ScalVar {
        let offset = self.nvars;
        self.nvars += 1;
        self.objective.resize(self.nvars, 0.0);
        self.init.push(init);
        ScalVar { offset }
    }

    /// Total barrier degree Σ ν_j.
    pub fn degree(&self) -> f64 {
        self.psd.iter().map(|b| b.n as f64).sum::<f64>()
            + 2.0 * self.soc.len() as f64
            + self.lin.len() as f64
    }

    fn strictly_feasible(&self, v: &[f64]) -> bool {
        for b in &self.psd {
            if chol_hermitian(&b.eval(v)).is_none() {
                return false;
            }
        }
        for s in &self.soc {
            let sv = s.eval(v);
            if sv[0] <= 0.0 || s.resid(v) <= 0.0 {
                return false;
            }
        }
        for l in &self.lin {
            if l.eval(v) <= 0.0 {
                return false;
            }
        }
        true
    }

    /// Barrier value Σ_j φ_j(v), or None outside the strict interior.
    fn barrier_checked(&self, v: &[f64]) -> Option<f64> {
        let mut val = 0.0;
        for b in &self.psd {
            let l = chol_hermitian(&b.eval(v))?;
            val -= logdet_from_chol(&l);
        }
        for s in &self.soc {
            let sv = s.eval(v);
            let r = s.resid(v);
            if sv[0] <= 0.0 || r <= 0.0 {
                return None;
            }
            val -= r.ln();
        }
        for l in &self.lin {
            let g = l.eval(v);
            if g <= 0.0 {
                return None;
            }
            val -= g.ln();
        }
        Some(val)
    }
}

/// Options shared by every structured solver.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 900,
            seed: crate::rand_util::DEFAULT_SEED,
        }
    }
}

/// Primal/dual certificate attached to every optimization-valued entropy.
#[derive(Debug, Clone)]
pub struct SolverCertificate {
    /// objective value cᵀv at the primal point
    pub value: f64,
    pub primal: Vec<f64>,
    pub dual_psd: Vec<CMat>,
    pub dual_soc: Vec<Vec<f64>>,
    pub dual_lin: Vec<f64>,
    /// Σ_j ⟨G_j, Λ_j⟩ at extraction
    pub gap: f64,
    /// ‖c − Σ_j adj_j(Λ_j)‖∞
    pub dual_residual: f64,
    pub iterations: usize,
    pub tol: f64,
}

/// Compact audit row for JSON export.
#[derive(Debug, Clone, Serialize)]
pub struct CertificateSummary {
    pub value: f64,
    pub gap: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub tol: f64,
    pub psd_blocks: usize,
    pub variables: usize,
}

impl SolverCertificate {
    pub fn summary(&self, program: &ConeProgram) -> CertificateSummary {
        CertificateSummary {
            value: self.value,
            gap: self.gap,
            dual_residual: self.dual_residual,
            iterations: self.iterations,
            tol: self.tol,
            psd_blocks: program.psd.len(),
            variables: program.nvars,
        }
    }
}

/// A solved program: the primal/dual pair stays re-verifiable.
#[derive(Debug, Clone)]
pub struct CertifiedSolve {
    pub program: ConeProgram,
    pub cert: SolverCertificate,
}

impl CertifiedSolve {
    pub fn verify(&self) -> Result<(), String> {
        verify(&self.program, &self.cert)
    }
}

struct Workspace {
    grad: DVector<f64>,
    hess: DMatrix<f64>,
    /// accumulated |contribution| magnitudes per parameter (for the
    /// normalized stationarity residual)
    mag: DVector<f64>,
}

fn add_psd_derivatives(b: &PsdBlock, w_inv: &CMat, ws: &mut Workspace) {
    // grad_a = −Σ atoms Re(w·W[col,row]); H_ab = Σ Re(w_x w_y W[c_x,r_y] W[c_y,r_x])
    for (pi, (ga, atoms_a)) in b.params.iter().enumerate() {
        let mut g = 0.0;
        let mut gm = 0.0;
        for a in atoms_a {
            let z = (a.w * w_inv[(a.col, a.row)]).re;
            g += z;
            gm += z.abs();
        }
        ws.grad[*ga] -= g;
        ws.mag[*ga] += gm;
        for (gb, atoms_b) in b.params.iter().skip(pi) {
            let mut h = 0.0;
            for x in atoms_a {
                for y in atoms_b {
                    h += (x.w * y.w * w_inv[(x.col, y.row)] * w_inv[(y.col, x.row)]).re;
                }
            }
            ws.hess[(*ga, *gb)] += h;
            if ga != gb {
                ws.hess[(*gb, *ga)] += h;
            }
        }
    }
}

fn add_soc_derivatives(s: &SocBlock, v: &[f64], ws: &mut Workspace) {
    let sv = s.eval(v);
    let beta = sv[0] * sv[0] - sv[1..].iter().map(|x| x * x).sum::<f64>();
    // q = Aᵀ J s  (J = diag(1, −1, …, −1))
    let mut q: Vec<(usize, f64)> = Vec::new();
    let mut qmap = std::collections::HashMap::new();
    for (i, row) in s.rows.iter().enumerate() {
        let js = if i == 0 { sv[0] } else { -sv[i] };
        for &(p, a) in row {
            *qmap.entry(p).or_insert(0.0) += a * js;
        }
    }
    for (p, val) in qmap {
        q.push((p, val));
    }
    for &(p, val) in &q {
        ws.grad[p] -= 2.0 / beta * val;
        ws.mag[p] += (2.0 / beta * val).abs();
    }
    // H = (4/β²) q qᵀ − (2/β) AᵀJA
    for &(p1, v1) in &q {
        for &(p2, v2) in &q {
            ws.hess[(p1, p2)] += 4.0 / (beta * beta) * v1 * v2;
        }
    }
    for (i, row) in s.rows.iter().enumerate() {
        let sgn = if i == 0 { 1.0 } else { -1.0 };
        for &(p1, a1) in row {
            for &(p2, a2) in row {
                ws.hess[(p1, p2)] -= 2.0 / beta * sgn * a1 * a2;
            }
        }
    }
}

fn add_lin_derivatives(l: &LinBlock, v: &[f64], ws: &mut Workspace) {
    let g = l.eval(v);
    for &(p, a) in &l.a {
        ws.grad[p] -= a / g;
        ws.mag[p] += (a / g).abs();
    }
    for &(p1, a1) in &l.a {
        for &(p2, a2) in &l.a {
            ws.hess[(p1, p2)] += a1 * a2 / (g * g);
        }
    }
}

/// Solve a cone program by log-barrier path following.
pub fn solve(program: &ConeProgram, opts: &SolverOptions) -> Result<SolverCertificate, IpmError> {
    let m = program.nvars;
    let mut v = program.init.clone();
    if !program.strictly_feasible(&v) {
        // locate the offending block for the error message
        for (j, b) in program.psd.iter().enumerate() {
            if chol_hermitian(&b.eval(&v)).is_none() {
                return Err(IpmError::InfeasibleStart(j));
            }
        }
        return Err(IpmError::InfeasibleStart(usize::MAX));
    }
    let nu = program.degree();
    let mut t = 1.0f64;
    let mut newton_steps = 0usize;
    let mu = 12.0;
    let c_scale = program
        .objective
        .iter()
        .fold(1.0f64, |a, &x| a.max(x.abs()));

    // One Newton step toward the t-center. Returns the decrement, or None
    // when the system cannot be factored.
    let step = |v: &mut Vec<f64>, t: f64, steps: &mut usize| -> Result<(f64, f64), IpmError> {
        let mut ws = Workspace {
            grad: DVector::zeros(m),
            hess: DMatrix::zeros(m, m),
            mag: DVector::zeros(m),
        };
        for b in &program.psd {
            let g = b.eval(v);
            let l = chol_hermitian(&g).ok_or(IpmError::SingularSystem)?;
            let w_inv = inverse_from_chol(&l);
            add_psd_derivatives(b, &w_inv, &mut ws);
        }
        for s in &program.soc {
            add_soc_derivatives(s, v, &mut ws);
        }
        for l in &program.lin {
            add_lin_derivatives(l, v, &mut ws);
        }
        // normalized stationarity residual of the duals Λ = ∇φ/t
        let resid_norm = (0..m).fold(0.0f64, |a, i| {
            let raw = (ws.grad[i] / t + program.objective[i]).abs();
            a.max(raw / (1.0 + c_scale + ws.mag[i] / t))
        });
        for i in 0..m {
            ws.grad[i] += t * program.objective[i];
        }
        let mut hess = ws.hess.clone();
        let mut delta = None;
        for ridge in [0.0, 1e-12, 1e-9, 1e-6] {
            if ridge > 0.0 {
                for i in 0..m {
                    hess[(i, i)] = ws.hess[(i, i)] + ridge * ws.hess[(i, i)].abs().max(1.0);
                }
            }
            if let Some(d) = real_chol_solve(&hess, &(-&ws.grad)) {
                if d.iter().all(|x| x.is_finite()) {
                    delta = Some(d);
                    break;
                }
            }
        }
        let delta = delta.ok_or(IpmError::SingularSystem)?;
        *steps += 1;
        let dec2: f64 = -ws.grad.dot(&delta);
        if dec2 <= 0.0 {
            return Ok((0.0, resid_norm));
        }
        // line search on the DIFFERENCE of f_t (avoids cancellation at
        // large t): t·cᵀ(αΔ) + [barrier(v+αΔ) − barrier(v)] ≤ −0.01·α·dec²
        let b0 = program.barrier_checked(v).ok_or(IpmError::SingularSystem)?;
        let cdelta: f64 = program
            .objective
            .iter()
            .zip(delta.iter())
            .map(|(c, d)| c * d)
            .sum();
        let mut alpha = 1.0f64;
        for _ in 0..60 {
            let cand: Vec<f64> = v
                .iter()
                .zip(delta.iter())
                .map(|(x, d)| x + alpha * d)
                .collect();
            if let Some(bc) = program.barrier_checked(&cand) {
                let df = t * alpha * cdelta + (bc - b0);
                if df <= -0.01 * alpha * dec2 {
                    *v = cand;
                    return Ok((dec2, resid_norm));
                }
            }
            alpha *= 0.5;
        }
        Ok((0.0, resid_norm)) // stalled
    };

    // path-following phase with loose centering
    loop {
        for _ in 0..40 {
            if newton_steps >= opts.max_iter {
                return Err(IpmError::IterationLimit(nu / t));
            }
            let (dec2, _) = step(&mut v, t, &mut newton_steps)?;
            if dec2 < 1e-4 {
                break;
            }
        }
        if nu / t <= opts.tol {
            break;
        }
        t *= mu;
        // cap t growth so the final gap lands near tol rather than far below
        if nu / t < opts.tol / 4.0 {
            t = nu / (opts.tol / 2.0);
        }
    }
    // final centering: modest polish; the Newton-corrected duals below
    // absorb the remaining first-order error
    for _ in 0..25 {
        if newton_steps >= opts.max_iter {
            break;
        }
        let (dec2, resid) = step(&mut v, t, &mut newton_steps)?;
        if resid <= 0.5 * opts.tol || dec2 < 1e-10 {
            break;
        }
    }

    // Extract duals with the Newton correction: at a near-central point the
    // estimate Λ = −(∇φ + ∇²φ·Δ)/t satisfies stationarity up to the linear
    // solve error, because HΔ = −(t·c + ∇φ). Cone membership of each
    // corrected dual is checked, with the plain barrier dual as fallback.
    let newton_delta: DVector<f64> = {
        let mut ws = Workspace {
            grad: DVector::zeros(m),
            hess: DMatrix::zeros(m, m),
            mag: DVector::zeros(m),
        };
        for b in &program.psd {
            let g = b.eval(&v);
            let l = chol_hermitian(&g).ok_or(IpmError::SingularSystem)?;
            let w_inv = inverse_from_chol(&l);
            add_psd_derivatives(b, &w_inv, &mut ws);
        }
        for sb in &program.soc {
            add_soc_derivatives(sb, &v, &mut ws);
        }
        for l in &program.lin {
            add_lin_derivatives(l, &v, &mut ws);
        }
        for i in 0..m {
            ws.grad[i] += t * program.objective[i];
        }
        let mut delta = None;
        let mut hess = ws.hess.clone();
        for ridge in [0.0, 1e-12, 1e-9, 1e-6] {
            if ridge > 0.0 {
                for i in 0..m {
                    hess[(i, i)] = ws.hess[(i, i)] + ridge * ws.hess[(i, i)].abs().max(1.0);
                }
            }
            if let Some(d) = real_chol_solve(&hess, &(-&ws.grad)) {
                if d.iter().all(|x| x.is_finite()) {
                    delta = Some(d);
                    break;
                }
            }
        }
        delta.ok_or(IpmError::SingularSystem)?
    };

    let mut dual_psd = Vec::new();
    let mut gap = 0.0;
    let mut resid = DVector::from_iterator(m, program.objective.iter().copied());
    for b in &program.psd {
        let g = b.eval(&v);
        let l = chol_hermitian(&g).ok_or(IpmError::SingularSystem)?;
        let w = inverse_from_chol(&l);
        // ΔG from the Newton step
        let mut dg = CMat::zeros(b.n, b.n);
        for (p, atoms) in &b.params {
            let x = newton_delta[*p];
            if x != 0.0 {
                for a in atoms {
                    dg[(a.row, a.col)] += a.w * cr(x);
                }
            }
        }
        let corrected = (&w - &w * dg * &w).unscale(t);
        let lam = if chol_hermitian(&(corrected.clone() + CMat::identity(b.n, b.n).scale(1e-300)))
            .is_some()
        {
            corrected
        } else {
            w.unscale(t)
        };
        gap += crate::linops::hs_inner(&g, &lam).re;
        for (p, atoms) in &b.params {
            let mut adj = 0.0;
            for a in atoms {
                adj += (a.w * lam[(a.col, a.row)]).re;
            }
            resid[*p] -= adj;
        }
        dual_psd.push(lam);
    }
    let mut dual_soc = Vec::new();
    for sb in &program.soc {
        let sv = sb.eval(&v);
        let beta = sv[0] * sv[0] - sv[1..].iter().map(|x| x * x).sum::<f64>();
        // ds = A·Δ
        let mut ds = vec![0.0; sv.len()];
        for (i, row) in sb.rows.iter().enumerate() {
            for &(p, a) in row {
                ds[i] += a * newton_delta[p];
            }
        }
        let s_j_ds: f64 = sv[0] * ds[0] - sv[1..].iter().zip(&ds[1..]).map(|(x, y)| x * y).sum::<f64>();
        // λ_c = (2/(tβ))[(1 − 2(sᵀJds)/β)·Js + J·ds]
        let coeff = 1.0 - 2.0 * s_j_ds / beta;
        let mut lam = vec![0.0; sv.len()];
        lam[0] = 2.0 / (t * beta) * (coeff * sv[0] + ds[0]);
        for i in 1..sv.len() {
            lam[i] = 2.0 / (t * beta) * (-coeff * sv[i] - ds[i]);
        }
        let lnorm: f64 = lam[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if lam[0] < lnorm {
            // fallback: plain barrier dual
            lam[0] = 2.0 * sv[0] / (t * beta);
            for i in 1..sv.len() {
                lam[i] = -2.0 * sv[i] / (t * beta);
            }
        }
        gap += sv.iter().zip(lam.iter()).map(|(x, y)| x * y).sum::<f64>();
        for (i, row) in sb.rows.iter().enumerate() {
            for &(p, a) in row {
                resid[p] -= a * lam[i];
            }
        }
        dual_soc.push(lam);
    }
    let mut dual_lin = Vec::new();
    for l in &program.lin {
        let g = l.eval(&v);
        let da: f64 = l.a.iter().map(|&(p, a)| a * newton_delta[p]).sum();
        let mut lam = (1.0 - da / g) / (t * g);
        if lam <= 0.0 {
            lam = 1.0 / (t * g);
        }
        gap += g * lam;
        for &(p, a) in &l.a {
            resid[p] -= a * lam;
        }
        dual_lin.push(lam);
    }

    Ok(SolverCertificate {
        value: dot(&program.objective, &v),
        primal: v,
        dual_psd,
        dual_soc,
        dual_lin,
        gap,
        dual_residual: resid.iter().fold(0.0f64, |a, &x| a.max(x.abs())),
        iterations: newton_steps,
        tol: opts.tol,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Standalone re-verification: primal feasibility, dual cone membership,
/// stationarity residual, and gap ≤ 10·tol.
pub fn verify(program: &ConeProgram, cert: &SolverCertificate) -> Result<(), String> {
    let v = &cert.primal;
    let feas_tol = cert.tol.max(1e-12);
    for (j, b) in program.psd.iter().enumerate() {
        let g = b.eval(v);
        let (vals, _) = crate::linops::eig_hermitian(&g)
            .map_err(|e| format!("primal block {j} not Hermitian: {e}"))?;
        let scale = vals.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
        if vals[0] < -feas_tol * scale {
            return Err(format!("primal PSD block {j} infeasible: λmin = {:.3e}", vals[0]));
        }
        let (dvals, _) = crate::linops::eig_hermitian(&cert.dual_psd[j])
            .map_err(|e| format!("dual block {j} not Hermitian: {e}"))?;
        let dscale = dvals.iter().fold(1.0f64, |a, &x| a.max(x.abs()));
        if dvals[0] < -feas_tol * dscale {
            return Err(format!("dual PSD block {j} not PSD: λmin = {:.3e}", dvals[0]));
        }
    }
    for (j, s) in program.soc.iter().enumerate() {
        let sv = s.eval(v);
        let norm: f64 = sv[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if sv[0] < norm - feas_tol {
            return Err(format!("primal SOC block {j} infeasible"));
        }
        let lam = &cert.dual_soc[j];
        let lnorm: f64 = lam[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if lam[0] < lnorm - feas_tol {
            return Err(format!("dual SOC block {j} outside the cone"));
        }
    }
    for (j, l) in program.lin.iter().enumerate() {
        if l.eval(v) < -feas_tol {
            return Err(format!("primal linear block {j} infeasible"));
        }
        if cert.dual_lin[j] < -feas_tol {
            return Err(format!("dual linear multiplier {j} negative"));
        }
    }

    // recompute gap and the normalized stationarity residual from scratch
    let mut gap = 0.0;
    let mut resid: Vec<f64> = program.objective.clone();
    let mut mag: Vec<f64> = vec![0.0; program.nvars];
    for (j, b) in program.psd.iter().enumerate() {
        let g = b.eval(v);
        let lam = &cert.dual_psd[j];
        gap += crate::linops::hs_inner(&g, lam).re;
        for (p, atoms) in &b.params {
            let mut adj = 0.0;
            let mut am = 0.0;
            for a in atoms {
                let z = (a.w * lam[(a.col, a.row)]).re;
                adj += z;
                am += z.abs();
            }
            resid[*p] -= adj;
            mag[*p] += am;
        }
    }
    for (j, s) in program.soc.iter().enumerate() {
        let sv = s.eval(v);
        let lam = &cert.dual_soc[j];
        gap += sv.iter().zip(lam.iter()).map(|(x, y)| x * y).sum::<f64>();
        for (i, row) in s.rows.iter().enumerate() {
            for &(p, a) in row {
                resid[p] -= a * lam[i];
                mag[p] += (a * lam[i]).abs();
            }
        }
    }
    for (j, l) in program.lin.iter().enumerate() {
        gap += l.eval(v) * cert.dual_lin[j];
        for &(p, a) in &l.a {
            resid[p] -= a * cert.dual_lin[j];
            mag[p] += (a * cert.dual_lin[j]).abs();
        }
    }
    let scale = program
        .objective
        .iter()
        .fold(1.0f64, |a, &x| a.max(x.abs()));
    let rnorm = resid
        .iter()
        .zip(&mag)
        .fold(0.0f64, |a, (&r, &m2)| a.max(r.abs() / (1.0 + scale + m2)));
    if rnorm > 10.0 * cert.tol {
        return Err(format!(
            "normalized stationarity residual {rnorm:.3e} exceeds 10·tol"
        ));
    }
    if gap.abs() > 10.0 * cert.tol {
        return Err(format!("duality gap {gap:.3e} exceeds 10·tol"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{identity, max_abs_diff};
    use crate::rand_util::{random_hermitian, rng_from_seed};

    /// min tr X s.t. X ⪰ A, X ⪰ 0: optimum is the positive part, tr A₊.
    #[test]
    fn psd_floor_problem() {
        let mut rng = rng_from_seed(1);
        let a = random_hermitian(4, &mut rng);
        let mut prog = ConeProgram::new();
        let init = {
            let (vals, _) = crate::linops::eig_hermitian(&a).unwrap();
            identity(4).scale(vals[3].max(0.0) + 1.0)
        };
        let x = prog.herm_var(4, &init);
        for i in 0..4 {
            prog.objective[x.offset + i] = 1.0;
        }
        let mut blk = PsdBlock::new(4);
        blk.f0 = -a.clone();
        blk.add_herm(x, &[(0, 1)], 1.0);
        prog.psd.push(blk);
        let mut pos = PsdBlock::new(4);
        pos.add_herm(x, &[(0, 1)], 1.0);
        prog.psd.push(pos);
        let cert = solve(&prog, &SolverOptions::default()).unwrap();
        let (vals, _) = crate::linops::eig_hermitian(&a).unwrap();
        let expect: f64 = vals.iter().map(|&l| l.max(0.0)).sum();
        assert!((cert.value - expect).abs() < 1e-6, "{} vs {}", cert.value, expect);
        verify(&prog, &cert).unwrap();
    }

    /// Finite-difference validation of PSD gradient/Hessian assembly on a
    /// block mixing Hermitian, general, compressed, and scalar terms.
    #[test]
    fn derivative_assembly_matches_finite_differences() {
        let mut rng = rng_from_seed(2);
        let mut prog = ConeProgram::new();
        let x = prog.herm_var(2, &identity(2).scale(2.0));
        let z = prog.gen_var(2, 2, &CMat::zeros(2, 2));
        let t = prog.scalar_var(3.0);
        let q = prog.herm_var(4, &identity(4).scale(1.5));

        let mut blk = PsdBlock::new(4);
        blk.f0 = identity(4).scale(0.5);
        blk.add_herm(x, &[(0, 1), (2, 1)], 1.0);
        blk.add_gen(z, 0, 2, 0.7);
        blk.add_scalar(t, &identity(4), 0);
        blk.add_herm_block_compress(q, 0, 2, 2, 0, -0.3);
        prog.psd.push(blk);

        let mut soc = SocBlock {
            s0: vec![5.0, 0.1, 0.0, 0.2],
            rows: vec![
                vec![(t.offset, 0.3)],
                vec![(x.offset, 1.0)],
                vec![(z.offset, 0.8), (z.offset + 1, -0.2)],
                vec![(q.offset + 2, 0.5)],
            ],
        };
        soc.s0[0] = 7.0;
        prog.soc.push(soc);
        prog.lin.push(LinBlock {
            g0: 4.0,
            a: vec![(x.offset, -0.5), (t.offset, 1.0)],
        });

        let v0 = prog.init.clone();
        assert!(prog.strictly_feasible(&v0));
        let m = prog.nvars;
        let mut ws = Workspace {
            grad: DVector::zeros(m),
            hess: DMatrix::zeros(m, m),
            mag: DVector::zeros(m),
        };
        for b in &prog.psd {
            let g = b.eval(&v0);
            let l = chol_hermitian(&g).unwrap();
            add_psd_derivatives(b, &inverse_from_chol(&l), &mut ws);
        }
        for s in &prog.soc {
            add_soc_derivatives(s, &v0, &mut ws);
        }
        for l in &prog.lin {
            add_lin_derivatives(l, &v0, &mut ws);
        }
        let f = |v: &[f64]| prog.barrier_checked(v).unwrap();
        let h = 1e-5;
        for p in 0..m {
            let mut vp = v0.clone();
            vp[p] += h;
            let mut vm = v0.clone();
            vm[p] -= h;
            let fd = (f(&vp) - f(&vm)) / (2.0 * h);
            assert!(
                (fd - ws.grad[p]).abs() < 2e-4 * (1.0 + fd.abs()),
                "grad[{p}]: fd {fd} vs {}",
                ws.grad[p]
            );
        }
        // a few random Hessian entries against second differences
        for _ in 0..25 {
            let p = (crate::rand_util::normal(&mut rng).abs() * 7.0) as usize % m;
            let q2 = (crate::rand_util::normal(&mut rng).abs() * 11.0) as usize % m;
            let mut vpp = v0.clone();
            vpp[p] += h;
            vpp[q2] += h;
            let mut vpm = v0.clone();
            vpm[p] += h;
            vpm[q2] -= h;
            let mut vmp = v0.clone();
            vmp[p] -= h;
            vmp[q2] += h;
            let mut vmm = v0.clone();
            vmm[p] -= h;
            vmm[q2] -= h;
            let fd = (f(&vpp) - f(&vpm) - f(&vmp) + f(&vmm)) / (4.0 * h * h);
            assert!(
                (fd - ws.hess[(p, q2)]).abs() < 5e-3 * (1.0 + fd.abs()),
                "hess[{p},{q2}]: fd {fd} vs {}",
                ws.hess[(p, q2)]
            );
        }
    }

    #[test]
    fn herm_param_roundtrip() {
        let mut rng = rng_from_seed(3);
        let m = random_hermitian(5, &mut rng);
        let params = herm_params(&m);
        let rebuilt = herm_build(&params, 5);
        assert!(max_abs_diff(&m, &rebuilt) < 1e-14);
        // entries decomposition reproduces directions
        for local in 0..herm_param_count(3) {
            let entries = herm_param_entries(3, local);
            let mut dir = CMat::zeros(3, 3);
            for (r, c2, w) in entries {
                dir[(r, c2)] += w;
            }
            let mut params = vec![0.0; 9];
            params[local] = 1.0;
            assert!(max_abs_diff(&dir, &herm_build(&params, 3)) < 1e-14);
        }
    }

    /// LP sanity: min x s.t. x ≥ 1 as a 1×1 PSD block + lin block.
    #[test]
    fn scalar_lp() {
        let mut prog = ConeProgram::new();
        let x = prog.scalar_var(3.0);
        prog.objective[x.offset] = 1.0;
        prog.lin.push(LinBlock {
            g0: -1.0,
            a: vec![(x.offset, 1.0)],
        });
        let cert = solve(&prog, &SolverOptions::default()).unwrap();
        assert!((cert.value - 1.0).abs() < 1e-6);
        verify(&prog, &cert).unwrap();
    }

    /// SOC: min x + y s.t. ‖(x, y) − (3, 4)‖ ≤ 2 → value 7 − 2√2.
    #[test]
    fn soc_projection() {
        let mut prog = ConeProgram::new();
        let x = prog.scalar_var(3.0);
        let y = prog.scalar_var(4.0);
        prog.objective[x.offset] = 1.0;
        prog.objective[y.offset] = 1.0;
        prog.soc.push(SocBlock {
            s0: vec![2.0, -3.0, -4.0],
            rows: vec![vec![], vec![(x.offset, 1.0)], vec![(y.offset, 1.0)]],
        });
        let cert = solve(&prog, &SolverOptions::default()).unwrap();
        let expect = 7.0 - 2.0 * 2.0f64.sqrt();
        assert!((cert.value - expect).abs() < 1e-6, "{}", cert.value);
        verify(&prog, &cert).unwrap();
    }
}
