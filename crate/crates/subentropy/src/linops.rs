//! Dense complex-matrix foundation: Hermitian eigendecomposition, matrix
//! functions, tensor operations, and the fidelity/purified-distance pair.
//!
//! Everything downstream works in base-2 logarithms through [`log2`] and in
//! the pseudo-inverse convention for singular matrices (functions of a PSD
//! matrix act only on its support).

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative tolerance for the Hermitian symmetry check.
pub const HERM_TOL: f64 = 1e-10;
/// Relative eigenvalue floor below which a PSD matrix is treated as singular.
pub const RANK_TOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum LinopsError {
    #[error("matrix is not Hermitian: asymmetry {asym:.3e} exceeds {tol:.3e}")]
    NonHermitian { asym: f64, tol: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a valid density operator: {0}")]
    InvalidState(String),
    #[error("not a projection: ‖P²−P‖∞ = {0:.3e}")]
    NotProjection(f64),
}

pub type Result<T> = std::result::Result<T, LinopsError>;

/// Base-2 logarithm used for every entropy in the crate.
#[inline]
pub fn log2(x: f64) -> f64 {
    x.log2()
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Entrywise max-modulus norm.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// ‖a − b‖∞ entrywise.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Hermiticity defect ‖M − M*‖∞.
pub fn asymmetry(m: &CMat) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// (M + M*)/2.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace_re(m: &CMat) -> f64 {
    m.trace().re
}

/// Hilbert–Schmidt inner product tr(A*B), returned as a complex number.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues ascending; columns of `vecs` are the matching orthonormal
/// eigenvectors. Near-Hermitian input (relative asymmetry below [`HERM_TOL`])
/// is symmetrized first; anything worse is rejected.
pub fn eig_hermitian(m: &CMat) -> Result<(DVector<f64>, CMat)> {
    let scale = max_abs(m).max(1e-300);
    let asym = asymmetry(m);
    if asym > HERM_TOL * scale {
        return Err(LinopsError::NonHermitian {
            asym,
            tol: HERM_TOL * scale,
        });
    }
    let h = hermitize(m);
    let (nr, nc) = h.shape();
    let se = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..se.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals = DVector::from_iterator(idx.len(), idx.iter().map(|&i| se.eigenvalues[i]));
    let mut vecs = CMat::zeros(nr, nc);
    for (col, &i) in idx.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

/// Apply a real function to the spectrum of a Hermitian matrix.
pub fn matrix_function(m: &CMat, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let (vals, vecs) = eig_hermitian(m)?;
    let fd = CMat::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| cr(f(l))),
    ));
    Ok(&vecs * fd * vecs.adjoint())
}

/// m^p for PSD m, pseudo-inverse convention: eigenvalues below
/// `RANK_TOL`·λ_max map to zero (so negative powers act on the support only).
pub fn matrix_power(m: &CMat, p: f64) -> Result<CMat> {
    let (vals, vecs) = eig_hermitian(m)?;
    let lmax = vals.iter().fold(0.0f64, |a, &l| a.max(l)).max(0.0);
    let cut = RANK_TOL * lmax.max(1e-300);
    let fd = CMat::from_diagonal(&DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&l| {
            if l > cut {
                cr(l.powf(p))
            } else if p >= 0.0 {
                cr(l.max(0.0).powf(p))
            } else {
                cr(0.0)
            }
        }),
    ));
    Ok(&vecs * fd * vecs.adjoint())
}

pub fn matrix_sqrt(m: &CMat) -> Result<CMat> {
    matrix_power(m, 0.5)
}

/// Kronecker product a ⊗ b with the first factor slowest.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Partial trace over the factors NOT listed in `keep`.
///
/// `dims` are the tensor factor dimensions (first factor slowest), `keep`
/// the indices of factors retained, in their original order.
pub fn partial_trace(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    let d: usize = dims.iter().product();
    if m.nrows() != d || m.ncols() != d {
        return Err(LinopsError::DimensionMismatch(format!(
            "matrix is {}×{}, factor dims multiply to {}",
            m.nrows(),
            m.ncols(),
            d
        )));
    }
    let nf = dims.len();
    let mut is_kept = vec![false; nf];
    for &k in keep {
        if k >= nf {
            return Err(LinopsError::DimensionMismatch(format!(
                "keep index {k} out of range for {nf} factors"
            )));
        }
        is_kept[k] = true;
    }
    let dk: usize = keep.iter().map(|&k| dims[k]).product();
    let mut out = CMat::zeros(dk.max(1), dk.max(1));

    // Row-major multi-index decode: factor 0 is the slowest.
    let strides: Vec<usize> = {
        let mut s = vec![1usize; nf];
        for i in (0..nf.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * dims[i + 1];
        }
        s
    };
    let decode = |mut x: usize| -> Vec<usize> {
        let mut idx = vec![0usize; nf];
        for f in 0..nf {
            idx[f] = x / strides[f];
            x %= strides[f];
        }
        idx
    };
    let kept_index = |idx: &[usize]| -> usize {
        let mut v = 0usize;
        for &k in keep {
            v = v * dims[k] + idx[k];
        }
        v
    };
    for i in 0..d {
        let ii = decode(i);
        for j in 0..d {
            let jj = decode(j);
            if (0..nf).all(|f| is_kept[f] || ii[f] == jj[f]) {
                out[(kept_index(&ii), kept_index(&jj))] += m[(i, j)];
            }
        }
    }
    Ok(out)
}

/// Permute tensor factors of an operator: factor `f` of the input becomes
/// factor `perm[f]`... more precisely, output factor `p` is input factor
/// `perm[p]`.
pub fn permute_factors(m: &CMat, dims: &[usize], perm: &[usize]) -> Result<CMat> {
    let d: usize = dims.iter().product();
    if m.nrows() != d || m.ncols() != d {
        return Err(LinopsError::DimensionMismatch(
            "permute_factors size".into(),
        ));
    }
    let nf = dims.len();
    let strides: Vec<usize> = {
        let mut s = vec![1usize; nf];
        for i in (0..nf.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * dims[i + 1];
        }
        s
    };
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    // map input flat index -> output flat index
    let map = |x: usize| -> usize {
        let mut idx = vec![0usize; nf];
        let mut r = x;
        for f in 0..nf {
            idx[f] = r / strides[f];
            r %= strides[f];
        }
        let mut v = 0usize;
        for (p, &src) in perm.iter().enumerate() {
            v = v * out_dims[p] + idx[src];
        }
        v
    };
    let mut out = CMat::zeros(d, d);
    for i in 0..d {
        let mi = map(i);
        for j in 0..d {
            out[(mi, map(j))] = m[(i, j)];
        }
    }
    Ok(out)
}

/// Permute tensor factors of a vector.
pub fn permute_vector_factors(v: &CVec, dims: &[usize], perm: &[usize]) -> Result<CVec> {
    let d: usize = dims.iter().product();
    if v.len() != d {
        return Err(LinopsError::DimensionMismatch(
            "permute_vector_factors size".into(),
        ));
    }
    let nf = dims.len();
    let strides: Vec<usize> = {
        let mut s = vec![1usize; nf];
        for i in (0..nf.saturating_sub(1)).rev() {
            s[i] = s[i + 1] * dims[i + 1];
        }
        s
    };
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let mut out = CVec::zeros(d);
    for x in 0..d {
        let mut idx = vec![0usize; nf];
        let mut r = x;
        for f in 0..nf {
            idx[f] = r / strides[f];
            r %= strides[f];
        }
        let mut y = 0usize;
        for (p, &src) in perm.iter().enumerate() {
            y = y * out_dims[p] + idx[src];
        }
        out[y] = v[x];
    }
    Ok(out)
}

/// Density operator: Hermitian PSD with unit trace, or trace ≤ 1 when
/// `substate_allowed` is set.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    dim: usize,
    matrix: CMat,
    substate_allowed: bool,
}

impl DensityOperator {
    pub fn new(matrix: CMat, substate_allowed: bool) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d || d == 0 {
            return Err(LinopsError::DimensionMismatch(
                "density operator must be square and nonempty".into(),
            ));
        }
        let scale = max_abs(&matrix).max(1e-300);
        let asym = asymmetry(&matrix);
        if asym > HERM_TOL * scale {
            return Err(LinopsError::NonHermitian {
                asym,
                tol: HERM_TOL * scale,
            });
        }
        let h = hermitize(&matrix);
        let (vals, _) = eig_hermitian(&h)?;
        let lmax = vals.iter().fold(0.0f64, |a, &l| a.max(l));
        let lmin = vals.iter().fold(f64::INFINITY, |a, &l| a.min(l));
        if lmin < -1e-9 * lmax.max(1.0) {
            return Err(LinopsError::InvalidState(format!(
                "negative eigenvalue {lmin:.3e}"
            )));
        }
        let tr = trace_re(&h);
        if substate_allowed {
            if tr <= 0.0 || tr > 1.0 + 1e-9 {
                return Err(LinopsError::InvalidState(format!(
                    "substate trace {tr} outside (0, 1]"
                )));
            }
        } else if (tr - 1.0).abs() > 1e-9 {
            return Err(LinopsError::InvalidState(format!(
                "state trace {tr} is not 1"
            )));
        }
        Ok(Self {
            dim: d,
            matrix: h,
            substate_allowed,
        })
    }

    pub fn state(matrix: CMat) -> Result<Self> {
        Self::new(matrix, false)
    }

    pub fn substate(matrix: CMat) -> Result<Self> {
        Self::new(matrix, true)
    }

    /// Pure state |ψ⟩⟨ψ| from a (not necessarily normalized) vector.
    pub fn pure(psi: &CVec) -> Result<Self> {
        let n = psi.norm();
        if n < 1e-300 {
            return Err(LinopsError::InvalidState("zero vector".into()));
        }
        let v = psi.unscale(n);
        Self::state(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn substate_allowed(&self) -> bool {
        self.substate_allowed
    }

    pub fn trace(&self) -> f64 {
        trace_re(&self.matrix)
    }

    /// Eigenvalues above `RANK_TOL`·λ_max.
    pub fn rank(&self) -> usize {
        let (vals, _) = eig_hermitian(&self.matrix).expect("validated at construction");
        let lmax = vals.iter().fold(0.0f64, |a, &l| a.max(l)).max(1e-300);
        vals.iter().filter(|&&l| l > RANK_TOL * lmax).count()
    }
}

/// Orthogonal projection (P² = P = P*).
#[derive(Debug, Clone)]
pub struct Projection {
    dim: usize,
    matrix: CMat,
}

impl Projection {
    pub fn new(matrix: CMat) -> Result<Self> {
        let d = matrix.nrows();
        let scale = max_abs(&matrix).max(1.0);
        if asymmetry(&matrix) > HERM_TOL * scale {
            return Err(LinopsError::NonHermitian {
                asym: asymmetry(&matrix),
                tol: HERM_TOL * scale,
            });
        }
        let h = hermitize(&matrix);
        let defect = max_abs_diff(&(&h * &h), &h);
        if defect > 1e-9 {
            return Err(LinopsError::NotProjection(defect));
        }
        Ok(Self { dim: d, matrix: h })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        trace_re(&self.matrix).round() as usize
    }
}

/// Root fidelity tr|√ρ√σ| plus the generalized-fidelity substate
/// correction √((1−tr ρ)(1−tr σ)).
pub fn root_fidelity(rho: &DensityOperator, sigma: &DensityOperator) -> f64 {
    root_fidelity_raw(rho.matrix(), sigma.matrix())
}

/// Generalized fidelity of two PSD substate matrices (no validation).
pub fn root_fidelity_raw(rho: &CMat, sigma: &CMat) -> f64 {
    let sr = matrix_sqrt(rho).expect("PSD input");
    let ss = matrix_sqrt(sigma).expect("PSD input");
    let a = &sr * &ss;
    let sv = a.svd(false, false);
    let t: f64 = sv.singular_values.iter().sum();
    let corr = ((1.0 - trace_re(rho)).max(0.0) * (1.0 - trace_re(sigma)).max(0.0)).sqrt();
    (t + corr).min(1.0)
}

/// Purified distance √(1 − F²) with the generalized fidelity F.
pub fn purified_distance(rho: &DensityOperator, sigma: &DensityOperator) -> f64 {
    let f = root_fidelity(rho, sigma);
    (1.0 - f * f).max(0.0).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rand_util::{random_density, random_hermitian, rng_from_seed};

    fn pauli_x() -> CMat {
        CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
    }

    fn plus_state() -> DensityOperator {
        let v = CVec::from_vec(vec![cr(1.0), cr(1.0)]);
        DensityOperator::pure(&v).unwrap()
    }

    #[test]
    fn eig_identity() {
        let (vals, _) = eig_hermitian(&identity(3)).unwrap();
        for v in vals.iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eig_pauli_x() {
        let (vals, vecs) = eig_hermitian(&pauli_x()).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-12);
        assert!((vals[1] - 1.0).abs() < 1e-12);
        let gram = vecs.adjoint() * &vecs;
        assert!(max_abs_diff(&gram, &identity(2)) < 1e-12);
    }

    #[test]
    fn eig_reconstruction_residual() {
        let mut rng = rng_from_seed(11);
        let m = random_hermitian(8, &mut rng);
        let (vals, vecs) = eig_hermitian(&m).unwrap();
        let d = CMat::from_diagonal(&DVector::from_iterator(8, vals.iter().map(|&l| cr(l))));
        let recon = &vecs * d * vecs.adjoint();
        assert!(max_abs_diff(&recon, &m) <= 1e-10 * max_abs(&m).max(1.0));
        assert!(max_abs_diff(&(vecs.adjoint() * &vecs), &identity(8)) < 1e-10);
    }

    #[test]
    fn eig_reconstruction_at_largest_supported_size() {
        let mut rng = rng_from_seed(211);
        let m = random_hermitian(256, &mut rng);
        let (vals, vecs) = eig_hermitian(&m).unwrap();
        let d = CMat::from_diagonal(&DVector::from_iterator(256, vals.iter().map(|&l| cr(l))));
        let recon = &vecs * d * vecs.adjoint();
        assert!(max_abs_diff(&recon, &m) <= 1e-10 * max_abs(&m).max(1.0));
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = CMat::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(2.0), cr(0.0)]);
        assert!(matches!(
            eig_hermitian(&m),
            Err(LinopsError::NonHermitian { .. })
        ));
    }

    #[test]
    fn power_diag() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![cr(4.0), cr(9.0)]));
        let r = matrix_power(&m, 0.5).unwrap();
        assert!((r[(0, 0)].re - 2.0).abs() < 1e-12);
        assert!((r[(1, 1)].re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn power_pseudo_inverse() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![cr(2.0), cr(0.0)]));
        let r = matrix_power(&m, -1.0).unwrap();
        assert!((r[(0, 0)].re - 0.5).abs() < 1e-12);
        assert!(r[(1, 1)].norm() < 1e-12);
    }

    #[test]
    fn power_inverse_composition() {
        let mut rng = rng_from_seed(3);
        let g = random_hermitian(5, &mut rng);
        let psd = &g * &g;
        let third = matrix_power(&psd, 1.0 / 3.0).unwrap();
        let cubed = &third * &third * &third;
        assert!(max_abs_diff(&cubed, &psd) < 1e-9 * max_abs(&psd).max(1.0));
    }

    #[test]
    fn power_semigroup_on_support() {
        let mut rng = rng_from_seed(5);
        let g = random_hermitian(4, &mut rng);
        let psd = &g * &g;
        let a = matrix_power(&psd, 0.7).unwrap();
        let b = matrix_power(&psd, 0.3).unwrap();
        assert!(max_abs_diff(&(&a * &b), &psd) < 1e-8 * max_abs(&psd).max(1.0));
    }

    #[test]
    fn kron_basics() {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![cr(1.0), cr(2.0)]));
        let b = CMat::from_diagonal(&CVec::from_vec(vec![cr(3.0), cr(4.0)]));
        let k = kron(&a, &b);
        let expect = CMat::from_diagonal(&CVec::from_vec(vec![cr(3.0), cr(4.0), cr(6.0), cr(8.0)]));
        assert!(max_abs_diff(&k, &expect) < 1e-14);
        let one = identity(1);
        assert!(max_abs_diff(&kron(&one, &b), &b) < 1e-14);
    }

    #[test]
    fn kron_trace_multiplicative() {
        let mut rng = rng_from_seed(7);
        let rho = random_density(3, 3, &mut rng);
        let k = kron(rho.matrix(), rho.matrix());
        assert!((trace_re(&k) - rho.trace() * rho.trace()).abs() < 1e-10);
    }

    #[test]
    fn partial_trace_product_state() {
        let mut rng = rng_from_seed(9);
        let a = random_density(2, 2, &mut rng);
        let b = random_density(3, 3, &mut rng);
        let ab = kron(a.matrix(), b.matrix());
        let ta = partial_trace(&ab, &[2, 3], &[0]).unwrap();
        assert!(max_abs_diff(&ta, a.matrix()) < 1e-12);
        let tb = partial_trace(&ab, &[2, 3], &[1]).unwrap();
        assert!(max_abs_diff(&tb, b.matrix()) < 1e-12);
    }

    #[test]
    fn partial_trace_bell_state() {
        let mut v = CVec::zeros(4);
        v[0] = cr(1.0 / 2.0_f64.sqrt());
        v[3] = cr(1.0 / 2.0_f64.sqrt());
        let bell = &v * v.adjoint();
        for keep in [0usize, 1] {
            let m = partial_trace(&bell, &[2, 2], &[keep]).unwrap();
            assert!(max_abs_diff(&m, &identity(2).scale(0.5)) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_preserves_trace_and_composes() {
        let mut rng = rng_from_seed(13);
        let rho = random_density(12, 12, &mut rng);
        let t = partial_trace(rho.matrix(), &[4, 3], &[0]).unwrap();
        assert!((trace_re(&t) - rho.trace()).abs() < 1e-10);
        // tracing out factor 2 then factor 1 equals tracing both at once
        let big = random_density(12, 12, &mut rng);
        let step1 = partial_trace(big.matrix(), &[2, 2, 3], &[0, 1]).unwrap();
        let step2 = partial_trace(&step1, &[2, 2], &[0]).unwrap();
        let direct = partial_trace(big.matrix(), &[2, 2, 3], &[0]).unwrap();
        assert!(max_abs_diff(&step2, &direct) < 1e-12);
    }

    #[test]
    fn permute_factors_swap() {
        let mut rng = rng_from_seed(15);
        let a = random_density(2, 2, &mut rng);
        let b = random_density(3, 3, &mut rng);
        let ab = kron(a.matrix(), b.matrix());
        let ba = permute_factors(&ab, &[2, 3], &[1, 0]).unwrap();
        assert!(max_abs_diff(&ba, &kron(b.matrix(), a.matrix())) < 1e-12);
    }

    #[test]
    fn fidelity_identical_and_orthogonal() {
        let mut rng = rng_from_seed(17);
        let rho = random_density(3, 3, &mut rng);
        assert!((root_fidelity(&rho, &rho) - 1.0).abs() < 1e-10);
        let zero = DensityOperator::pure(&CVec::from_vec(vec![cr(1.0), cr(0.0)])).unwrap();
        let one = DensityOperator::pure(&CVec::from_vec(vec![cr(0.0), cr(1.0)])).unwrap();
        assert!(root_fidelity(&zero, &one) < 1e-12);
        assert!((purified_distance(&zero, &one) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fidelity_pure_vs_maximally_mixed() {
        let zero = DensityOperator::pure(&CVec::from_vec(vec![cr(1.0), cr(0.0)])).unwrap();
        let mixed = DensityOperator::state(identity(2).scale(0.5)).unwrap();
        assert!((root_fidelity(&zero, &mixed) - 1.0 / 2.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn purified_distance_definitional_identity() {
        let mut rng = rng_from_seed(19);
        let a = random_density(2, 2, &mut rng);
        let b = random_density(2, 2, &mut rng);
        let f = root_fidelity(&a, &b);
        let d = purified_distance(&a, &b);
        assert!((1.0 - f * f - d * d).abs() < 1e-12);
    }

    #[test]
    fn purified_distance_triangle_inequality() {
        let mut rng = rng_from_seed(21);
        for _ in 0..30 {
            let a = random_density(3, 3, &mut rng);
            let b = random_density(3, 3, &mut rng);
            let c3 = random_density(3, 3, &mut rng);
            let dab = purified_distance(&a, &b);
            let dbc = purified_distance(&b, &c3);
            let dac = purified_distance(&a, &c3);
            assert!(dac <= dab + dbc + 1e-8);
        }
    }

    #[test]
    fn density_operator_validation() {
        assert!(DensityOperator::state(identity(2)).is_err()); // trace 2
        assert!(DensityOperator::substate(identity(2).scale(0.4)).is_ok());
        let m = CMat::from_diagonal(&CVec::from_vec(vec![cr(1.5), cr(-0.5)]));
        assert!(DensityOperator::state(m).is_err()); // negative eigenvalue
        assert!(plus_state().trace() - 1.0 < 1e-12);
    }

    #[test]
    fn projection_validation() {
        let p = Projection::new(CMat::from_diagonal(&CVec::from_vec(vec![cr(1.0), cr(0.0)])));
        assert_eq!(p.unwrap().rank(), 1);
        assert!(Projection::new(identity(2).scale(0.5)).is_err());
    }
}
