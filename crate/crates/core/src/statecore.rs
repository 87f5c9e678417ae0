//! Pure states with a bipartition, reduced density matrices, entropies,
//! Schmidt decompositions and the distance measures built on them.
//!
//! Bit convention: site `s` of an `N`-site state is bit `s` of the basis
//! index, with bit value 1 meaning spin up. Whole-system operators derived
//! from a [`PureState`] are expressed in the *bipartite ordering*, where the
//! index is `a + b * dim_a` with `a` packing the bits of the A sites (in
//! increasing site order) and `b` those of the B sites. For the default
//! split (A = sites `0..N/2`) this is the natural basis ordering.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, ClmError, Result};

pub type C64 = Complex64;

/// Largest state the dense routines will allocate (2^24 amplitudes).
pub const MAX_DENSE_SITES: usize = 24;
/// Largest half-system for which a dense reduced density matrix is built.
pub const MAX_RDM_SITES: usize = 16;
/// Largest state whose full `|psi><psi|` is materialized.
pub const MAX_JOINT_DENSITY_SITES: usize = 12;

const NORM_TOL: f64 = 1e-12;
const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const NEGATIVE_EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Dense amplitude vector over `n_sites` spin-1/2 sites with an A|B split.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_sites: usize,
    amplitudes: Vec<C64>,
    sites_a: Vec<usize>,
    sites_b: Vec<usize>,
}

impl PureState {
    /// Builds a state with the default split, A = sites `0..n_sites/2`.
    pub fn new(n_sites: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let sites_a: Vec<usize> = (0..n_sites / 2).collect();
        Self::with_split(n_sites, amplitudes, sites_a)
    }

    pub fn with_split(n_sites: usize, amplitudes: Vec<C64>, mut sites_a: Vec<usize>) -> Result<Self> {
        if n_sites == 0 {
            return invalid("a state needs at least one site");
        }
        if n_sites > MAX_DENSE_SITES {
            return Err(ClmError::Capacity {
                what: "dense state",
                requested: n_sites,
                limit: MAX_DENSE_SITES,
            });
        }
        if amplitudes.len() != 1usize << n_sites {
            return Err(ClmError::DimensionMismatch(amplitudes.len(), 1 << n_sites));
        }
        sites_a.sort_unstable();
        sites_a.dedup();
        if sites_a.iter().any(|&s| s >= n_sites) {
            return invalid("split references a site outside the chain");
        }
        let norm = norm_sqr(&amplitudes).sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return invalid(format!("amplitudes are not normalized (norm {norm})"));
        }
        let sites_b = (0..n_sites).filter(|s| !sites_a.contains(s)).collect();
        Ok(Self {
            n_sites,
            amplitudes,
            sites_a,
            sites_b,
        })
    }

    /// Normalizes `amplitudes` before building the state.
    pub fn normalized(n_sites: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        let norm = norm_sqr(&amplitudes).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return invalid("cannot normalize a zero or non-finite vector");
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Self::new(n_sites, amplitudes)
    }

    /// A product basis state given as a bit pattern.
    pub fn basis(n_sites: usize, index: usize) -> Result<Self> {
        if n_sites > MAX_DENSE_SITES {
            return Err(ClmError::Capacity {
                what: "dense state",
                requested: n_sites,
                limit: MAX_DENSE_SITES,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_sites];
        if index >= amps.len() {
            return invalid("basis index out of range");
        }
        amps[index] = C64::new(1.0, 0.0);
        Self::new(n_sites, amps)
    }

    /// Tensor product of single-site states `(up, down)` amplitudes.
    pub fn product(sites: &[[C64; 2]]) -> Result<Self> {
        let n = sites.len();
        if n > MAX_DENSE_SITES {
            return Err(ClmError::Capacity {
                what: "dense state",
                requested: n,
                limit: MAX_DENSE_SITES,
            });
        }
        let mut amps = vec![C64::new(1.0, 0.0)];
        for (s, site) in sites.iter().enumerate() {
            let norm = (site[0].norm_sqr() + site[1].norm_sqr()).sqrt();
            let mut next = vec![C64::new(0.0, 0.0); amps.len() * 2];
            for (x, &a) in amps.iter().enumerate() {
                next[x] = a * site[1] / norm;
                next[x | (1 << s)] = a * site[0] / norm;
            }
            amps = next;
        }
        Self::normalized(n, amps)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn sites_a(&self) -> &[usize] {
        &self.sites_a
    }

    pub fn sites_b(&self) -> &[usize] {
        &self.sites_b
    }

    /// True when A is exactly the low half of the chain.
    pub fn has_default_split(&self) -> bool {
        self.sites_a.len() * 2 == self.n_sites && self.sites_a.iter().enumerate().all(|(k, &s)| k == s)
    }

    pub fn dim_a(&self) -> usize {
        1 << self.sites_a.len()
    }

    pub fn dim_b(&self) -> usize {
        1 << self.sites_b.len()
    }

    /// Splits a basis index into its `(a, b)` labels.
    pub fn split_index(&self, x: usize) -> (usize, usize) {
        (gather_bits(x, &self.sites_a), gather_bits(x, &self.sites_b))
    }

    /// Coefficient matrix `M[a, b] = <a, b | psi>`.
    pub fn coefficient_matrix(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim_a(), self.dim_b());
        for (x, &amp) in self.amplitudes.iter().enumerate() {
            let (a, b) = self.split_index(x);
            m[(a, b)] = amp;
        }
        m
    }

    /// Amplitudes in the bipartite ordering `a + b * dim_a`.
    pub fn bipartite_vector(&self) -> Vec<C64> {
        if self.has_default_split() {
            return self.amplitudes.clone();
        }
        let da = self.dim_a();
        let mut v = vec![C64::new(0.0, 0.0); self.amplitudes.len()];
        for (x, &amp) in self.amplitudes.iter().enumerate() {
            let (a, b) = self.split_index(x);
            v[a + b * da] = amp;
        }
        v
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(ClmError::DimensionMismatch(self.amplitudes.len(), other.amplitudes.len()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn check_rdm_capacity(&self) -> Result<()> {
        let half = self.sites_a.len().min(self.sites_b.len());
        if half > MAX_RDM_SITES {
            return Err(ClmError::Capacity {
                what: "reduced density matrix",
                requested: half,
                limit: MAX_RDM_SITES,
            });
        }
        Ok(())
    }
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

pub(crate) fn gather_bits(x: usize, sites: &[usize]) -> usize {
    sites
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &s)| acc | (((x >> s) & 1) << k))
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(ClmError::DimensionMismatch(mat.nrows(), mat.ncols()));
        }
        let n = mat.nrows();
        let mut herm_err = 0.0f64;
        for i in 0..n {
            for j in i..n {
                herm_err = herm_err.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
            }
        }
        if herm_err > HERMITIAN_TOL {
            return Err(ClmError::Numerical(format!("matrix is not Hermitian (error {herm_err:.3e})")));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(ClmError::Numerical(format!("trace is {tr}, expected 1")));
        }
        Ok(Self { mat })
    }

    pub fn from_pure(amplitudes: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(amplitudes);
        Self::from_matrix(&v * v.adjoint())
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        let mut m = DMatrix::zeros(dim, dim);
        m.fill_diagonal(C64::new(1.0 / dim as f64, 0.0));
        Self::from_matrix(m)
    }

    /// Convex mixture `sum_k w_k |psi_k><psi_k|`; weights must sum to one.
    pub fn mixture(weights: &[f64], states: &[Vec<C64>]) -> Result<Self> {
        if weights.len() != states.len() || states.is_empty() {
            return invalid("mixture needs one weight per state");
        }
        let dim = states[0].len();
        let mut m = DMatrix::zeros(dim, dim);
        for (w, psi) in weights.iter().zip(states) {
            if psi.len() != dim {
                return Err(ClmError::DimensionMismatch(psi.len(), dim));
            }
            let v = DVector::from_column_slice(psi);
            m += (&v * v.adjoint()) * C64::new(*w, 0.0);
        }
        Self::from_matrix(m)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    /// Eigenvalues in nonincreasing order; tiny negatives are clipped to zero.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut vals = hermitian_eigenvalues(&self.mat);
        for v in &mut vals {
            if *v < -NEGATIVE_EIGEN_TOL {
                return Err(ClmError::Numerical(format!("negative eigenvalue {v:.3e} in density matrix")));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        Ok(vals)
    }

    /// `self ⊗ other` with `self` on the fast index.
    pub fn kron_ab(&self, other: &DensityMatrix) -> DensityMatrix {
        let (da, db) = (self.dim(), other.dim());
        let mut m = DMatrix::zeros(da * db, da * db);
        for b in 0..db {
            for b2 in 0..db {
                let rb = other.mat[(b, b2)];
                if rb == C64::new(0.0, 0.0) {
                    continue;
                }
                for a in 0..da {
                    for a2 in 0..da {
                        m[(a + b * da, a2 + b2 * da)] = self.mat[(a, a2)] * rb;
                    }
                }
            }
        }
        DensityMatrix { mat: m }
    }
}

/// Eigenvalues of a Hermitian matrix, sorted nonincreasing.
pub fn hermitian_eigenvalues(mat: &DMatrix<C64>) -> Vec<f64> {
    let eig = nalgebra::SymmetricEigen::new(mat.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

/// Partial trace of `|psi><psi|` over the complement of `subsystem`.
pub fn reduced_density(state: &PureState, subsystem: Subsystem) -> Result<DensityMatrix> {
    state.check_rdm_capacity()?;
    let m = state.coefficient_matrix();
    let rho = match subsystem {
        Subsystem::A => &m * m.adjoint(),
        Subsystem::B => m.transpose() * m.map(|z| z.conj()),
    };
    DensityMatrix::from_matrix(rho)
}

/// `Tr[rho^2]`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.mat.iter().map(|z| z.norm_sqr()).sum()
}

/// Shannon entropy in bits with `0 log 0 = 0`.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(shannon_entropy(&rho.eigenvalues()?))
}

/// `I(A:B) = 2 S(rho_A)` for a pure state.
pub fn mutual_information(state: &PureState) -> Result<f64> {
    Ok(2.0 * von_neumann_entropy(&reduced_density(state, Subsystem::A)?)?)
}

#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Schmidt weights `lambda_k` (squared singular values), nonincreasing.
    pub coefficients: Vec<f64>,
    /// `|k_A>` in the packed A basis.
    pub basis_a: Vec<Vec<C64>>,
    /// `|k_B>` in the packed B basis.
    pub basis_b: Vec<Vec<C64>>,
}

impl SchmidtDecomposition {
    pub fn purity(&self) -> f64 {
        self.coefficients.iter().map(|l| l * l).sum()
    }

    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.coefficients)
    }

    /// Rebuilds `sum_k sqrt(lambda_k) |k_A>|k_B>` in the bipartite ordering.
    pub fn reconstruct(&self) -> Vec<C64> {
        let da = self.basis_a.first().map_or(0, Vec::len);
        let db = self.basis_b.first().map_or(0, Vec::len);
        let mut v = vec![C64::new(0.0, 0.0); da * db];
        for (k, &lam) in self.coefficients.iter().enumerate() {
            let s = lam.sqrt();
            for (b, &vb) in self.basis_b[k].iter().enumerate() {
                for (a, &ua) in self.basis_a[k].iter().enumerate() {
                    v[a + b * da] += ua * vb * s;
                }
            }
        }
        v
    }
}

pub fn schmidt(state: &PureState) -> Result<SchmidtDecomposition> {
    state.check_rdm_capacity()?;
    schmidt_from_matrix(state.coefficient_matrix())
}

/// Schmidt weights only, nonincreasing.
///
/// When every nonzero amplitude has the same number of up spins, the
/// coefficient matrix only couples A-configurations with `r` up spins to
/// B-configurations with `n_up - r`, and each block is decomposed on its own.
pub fn schmidt_weights(state: &PureState) -> Result<Vec<f64>> {
    state.check_rdm_capacity()?;
    let mut ups = None;
    let mut fixed = true;
    for (x, a) in state.amplitudes.iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        let p = x.count_ones() as usize;
        match ups {
            None => ups = Some(p),
            Some(q) if q != p => {
                fixed = false;
                break;
            }
            _ => {}
        }
    }
    let mut weights = match (fixed, ups) {
        (true, Some(total)) => block_weights(state, total),
        _ => singular_weights(state.coefficient_matrix()),
    };
    weights.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(weights)
}

/// Normalized, nonincreasing Schmidt weights of a coefficient matrix.
pub fn matrix_schmidt_weights(m: DMatrix<C64>) -> Vec<f64> {
    let mut w = singular_weights(m);
    w.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

fn singular_weights(m: DMatrix<C64>) -> Vec<f64> {
    nalgebra::SVD::new(m, false, false)
        .singular_values
        .iter()
        .map(|s| s * s)
        .collect()
}

fn block_weights(state: &PureState, total: usize) -> Vec<f64> {
    let (na, nb) = (state.sites_a.len(), state.sites_b.len());
    let group = |bits: usize| {
        let mut pos = vec![0usize; 1 << bits];
        let mut sizes = vec![0usize; bits + 1];
        for (c, p) in pos.iter_mut().enumerate() {
            let k = c.count_ones() as usize;
            *p = sizes[k];
            sizes[k] += 1;
        }
        (pos, sizes)
    };
    let (pos_a, size_a) = group(na);
    let (pos_b, size_b) = group(nb);
    let mut blocks: Vec<Option<DMatrix<C64>>> = (0..=na)
        .map(|r| {
            (total >= r && total - r <= nb).then(|| DMatrix::zeros(size_a[r], size_b[total - r]))
        })
        .collect();
    for (x, &amp) in state.amplitudes.iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let (a, b) = state.split_index(x);
        if let Some(block) = blocks[a.count_ones() as usize].as_mut() {
            block[(pos_a[a], pos_b[b])] = amp;
        }
    }
    blocks.into_iter().flatten().flat_map(singular_weights).collect()
}

/// One-sided (Hestenes) Jacobi SVD `M = U S V^†`, returning
/// `(s, U, V)` with `min(rows, cols)` columns in `U` and `V`.
///
/// nalgebra's complex SVD loses accuracy when singular vectors are
/// requested; column rotations keep full precision on small singular values.
fn jacobi_svd(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>, DMatrix<C64>) {
    let (rows, cols) = m.shape();
    if rows < cols {
        let (s, u, v) = jacobi_svd(&m.adjoint());
        return (s, v, u);
    }
    let mut a = m.clone();
    let mut v = DMatrix::<C64>::identity(cols, cols);
    let rotate = |mat: &mut DMatrix<C64>, i: usize, j: usize, c: f64, s: f64, phase: C64| {
        for r in 0..mat.nrows() {
            let x = mat[(r, i)];
            let y = mat[(r, j)] * phase;
            mat[(r, i)] = x * c - y * s;
            mat[(r, j)] = x * s + y * c;
        }
    };
    for _ in 0..80 {
        let mut rotated = false;
        for i in 0..cols {
            for j in i + 1..cols {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dotc(&a.column(j));
                let g = gamma.norm();
                if g == 0.0 || g <= 4.0 * f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                rotate(&mut a, i, j, c, c * t, phase);
                rotate(&mut v, i, j, c, c * t, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..cols).map(|k| a.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let top = sigma.iter().copied().fold(0.0, f64::max);
    let mut u = DMatrix::<C64>::zeros(rows, cols);
    let mut vs = DMatrix::<C64>::zeros(cols, cols);
    let mut s = Vec::with_capacity(cols);
    for (k, &src) in order.iter().enumerate() {
        s.push(sigma[src]);
        vs.set_column(k, &v.column(src));
        let mut col = if sigma[src] > 1e-300 && sigma[src] > 1e-15 * top {
            a.column(src) / C64::new(sigma[src], 0.0)
        } else {
            DVector::zeros(rows)
        };
        // Null directions: complete with Gram-Schmidt on unit vectors.
        let mut e = 0;
        while col.norm() < 0.5 {
            col = DVector::zeros(rows);
            col[e] = C64::new(1.0, 0.0);
            for _ in 0..2 {
                for q in 0..k {
                    let overlap = u.column(q).dotc(&col);
                    col -= u.column(q) * overlap;
                }
            }
            e += 1;
        }
        let n = col.norm();
        u.set_column(k, &(col / C64::new(n, 0.0)));
    }
    (s, u, vs)
}

/// Schmidt decomposition of a normalized coefficient matrix `M[a, b]`.
pub fn schmidt_from_matrix(m: DMatrix<C64>) -> Result<SchmidtDecomposition> {
    let (s, u, v) = jacobi_svd(&m);
    if s.iter().any(|x| !x.is_finite()) {
        return Err(ClmError::Numerical("non-finite singular value".into()));
    }
    Ok(SchmidtDecomposition {
        coefficients: s.iter().map(|x| x * x).collect(),
        basis_a: (0..s.len()).map(|k| u.column(k).iter().copied().collect()).collect(),
        // M[a, b] = sum_k s_k U[a, k] conj(V[b, k]).
        basis_b: (0..s.len()).map(|k| v.column(k).iter().map(|z| z.conj()).collect()).collect(),
    })
}

/// Half the trace norm of `rho - sigma`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(ClmError::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let diff = &rho.mat - &sigma.mat;
    Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|v| v.abs()).sum::<f64>())
}

/// `F(|psi>, rho) = <psi|rho|psi>^{1/2}` with `psi` in the bipartite ordering.
pub fn fidelity_pure_mixed(psi: &PureState, rho: &DensityMatrix) -> Result<f64> {
    let v = psi.bipartite_vector();
    if v.len() != rho.dim() {
        return Err(ClmError::DimensionMismatch(v.len(), rho.dim()));
    }
    let v = DVector::from_vec(v);
    let overlap = (v.adjoint() * &rho.mat * &v)[(0, 0)].re;
    Ok(overlap.max(0.0).sqrt().min(1.0))
}

/// Density matrix on `A ⊗ B` in the bipartite ordering, with its factor dimensions.
#[derive(Debug, Clone)]
pub struct BipartiteDensity {
    pub dim_a: usize,
    pub dim_b: usize,
    pub rho: DensityMatrix,
}

impl BipartiteDensity {
    pub fn new(dim_a: usize, dim_b: usize, rho: DensityMatrix) -> Result<Self> {
        if dim_a * dim_b != rho.dim() {
            return Err(ClmError::DimensionMismatch(dim_a * dim_b, rho.dim()));
        }
        Ok(Self { dim_a, dim_b, rho })
    }

    pub fn from_pure(state: &PureState) -> Result<Self> {
        state.check_rdm_capacity()?;
        if state.n_sites() > MAX_JOINT_DENSITY_SITES {
            return Err(ClmError::Capacity {
                what: "whole-system density matrix",
                requested: state.n_sites(),
                limit: MAX_JOINT_DENSITY_SITES,
            });
        }
        let rho = DensityMatrix::from_pure(&state.bipartite_vector())?;
        Self::new(state.dim_a(), state.dim_b(), rho)
    }

    pub fn reduced(&self, subsystem: Subsystem) -> Result<DensityMatrix> {
        let (da, db) = (self.dim_a, self.dim_b);
        let m = &self.rho.mat;
        let out = match subsystem {
            Subsystem::A => DMatrix::from_fn(da, da, |a, a2| (0..db).map(|b| m[(a + b * da, a2 + b * da)]).sum()),
            Subsystem::B => DMatrix::from_fn(db, db, |b, b2| (0..da).map(|a| m[(a + b * da, a + b2 * da)]).sum()),
        };
        DensityMatrix::from_matrix(out)
    }

    pub fn product_of_marginals(&self) -> Result<DensityMatrix> {
        Ok(self.reduced(Subsystem::A)?.kron_ab(&self.reduced(Subsystem::B)?))
    }

    /// `S(rho_A) + S(rho_B) - S(rho_AB)` in bits.
    pub fn mutual_information(&self) -> Result<f64> {
        let sa = von_neumann_entropy(&self.reduced(Subsystem::A)?)?;
        let sb = von_neumann_entropy(&self.reduced(Subsystem::B)?)?;
        let sab = von_neumann_entropy(&self.rho)?;
        Ok((sa + sb - sab).max(0.0))
    }

    /// Total correlation `Tr|rho_AB - rho_A ⊗ rho_B| / 2`.
    pub fn total_correlation(&self) -> Result<f64> {
        trace_distance(&self.rho, &self.product_of_marginals()?)
    }
}

/// Total correlation of a pure state from its Schmidt weights alone.
///
/// In the Schmidt product basis, `rho_A ⊗ rho_B` is diagonal with entries
/// `lambda_k lambda_l`, and `|psi><psi|` lives on the span of `|k k>`. The
/// difference splits into the `|k k>` block `sqrt(l) sqrt(l)^T - diag(l^2)`
/// and the diagonal `-lambda_k lambda_l` for `k != l`.
pub fn total_correlation_pure(weights: &[f64]) -> f64 {
    let lam: Vec<f64> = weights.iter().copied().filter(|&l| l > 0.0).collect();
    let r = lam.len();
    let total: f64 = lam.iter().sum();
    let sum_sq: f64 = lam.iter().map(|l| l * l).sum();
    let off_diag = total * total - sum_sq;
    let block = DMatrix::from_fn(r, r, |k, l| {
        let v = (lam[k] * lam[l]).sqrt();
        if k == l {
            v - lam[k] * lam[k]
        } else {
            v
        }
    });
    let eig = nalgebra::SymmetricEigen::new(block);
    let block_norm: f64 = eig.eigenvalues.iter().map(|v| v.abs()).sum();
    0.5 * (off_diag + block_norm)
}
