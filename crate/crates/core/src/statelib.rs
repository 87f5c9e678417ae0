//! Constructors for the named states: GHZ-type and Néel superpositions,
//! Haar random states, and permutation-symmetric (Dicke basis) states with
//! one-axis twisting.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, ClmError, Result};
use crate::statecore::{schmidt_from_matrix, shannon_entropy, PureState, SchmidtDecomposition, C64, MAX_DENSE_SITES};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Binomial coefficient as a float, via the multiplicative formula.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64)
}

fn check_even(n: usize) -> Result<()> {
    if n < 2 || !n.is_multiple_of(2) {
        return invalid(format!("N = {n} must be even and at least 2"));
    }
    Ok(())
}

fn dense_from_pairs(n: usize, entries: &[(usize, C64)]) -> Result<PureState> {
    if n > MAX_DENSE_SITES {
        return Err(ClmError::Capacity {
            what: "dense state",
            requested: n,
            limit: MAX_DENSE_SITES,
        });
    }
    let mut amps = vec![ZERO; 1 << n];
    for &(x, a) in entries {
        amps[x] += a;
    }
    PureState::normalized(n, amps)
}

/// `(|↓…↓> + |↑…↑>)/√2`.
pub fn ghz(n: usize) -> Result<PureState> {
    check_even(n)?;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    dense_from_pairs(n, &[(0, h), ((1 << n) - 1, h)])
}

/// `(|↑…↑↓> + |↓↑…↑>)/√2`: the last site down in one branch, the first in
/// the other.
pub fn w_like(n: usize) -> Result<PureState> {
    if n < 2 {
        return invalid("w_like needs at least two sites");
    }
    let all = (1usize << n) - 1;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    dense_from_pairs(n, &[(all & !(1 << (n - 1)), h), (all & !1, h)])
}

/// Equal superposition of `|p>_A |p>_B` over all half-chain patterns `p`
/// carrying exactly `N/4` up spins.
pub fn permutation_pair_state(n: usize) -> Result<PureState> {
    if n == 0 || !n.is_multiple_of(4) {
        return invalid(format!("N = {n} must be a positive multiple of 4"));
    }
    let h = n / 2;
    let entries: Vec<(usize, C64)> = (0usize..1 << h)
        .filter(|p| p.count_ones() as usize == n / 4)
        .map(|p| (p | (p << h), C64::new(1.0, 0.0)))
        .collect();
    dense_from_pairs(n, &entries)
}

/// `(|↑↓↑↓…> + |↓↑↓↑…>)/√2`.
pub fn neel_superposition(n: usize) -> Result<PureState> {
    check_even(n)?;
    let even_up: usize = (0..n).step_by(2).map(|s| 1 << s).sum();
    let odd_up = ((1usize << n) - 1) ^ even_up;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    dense_from_pairs(n, &[(even_up, h), (odd_up, h)])
}

/// Haar random state from a normalized i.i.d. complex Gaussian vector.
pub fn haar_random(n: usize, seed: u64) -> Result<PureState> {
    haar_random_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn haar_random_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PureState> {
    if n > MAX_DENSE_SITES {
        return Err(ClmError::Capacity {
            what: "Haar random state",
            requested: n,
            limit: MAX_DENSE_SITES,
        });
    }
    let amps: Vec<C64> = (0..1usize << n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        })
        .collect();
    PureState::normalized(n, amps)
}

/// Random unit vector of length `dim` (Haar on the complex sphere).
pub fn haar_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    v
}

/// Permutation-symmetric state stored as Dicke amplitudes `a_k`, where
/// `k` counts up spins and `S_z = k - N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricState {
    n_sites: usize,
    amplitudes: Vec<C64>,
}

impl SymmetricState {
    pub fn new(n_sites: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != n_sites + 1 {
            return Err(ClmError::DimensionMismatch(amplitudes.len(), n_sites + 1));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return invalid(format!("Dicke amplitudes are not normalized (norm {norm})"));
        }
        Ok(Self { n_sites, amplitudes })
    }

    /// Symmetric GHZ: `a_0 = a_N = 1/√2`.
    pub fn ghz(n_sites: usize) -> Result<Self> {
        check_even(n_sites)?;
        let mut a = vec![ZERO; n_sites + 1];
        a[0] = C64::new(FRAC_1_SQRT_2, 0.0);
        a[n_sites] = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::new(n_sites, a)
    }

    pub fn dicke(n_sites: usize, k: usize) -> Result<Self> {
        if k > n_sites {
            return invalid("Dicke excitation exceeds N");
        }
        let mut a = vec![ZERO; n_sites + 1];
        a[k] = C64::new(1.0, 0.0);
        Self::new(n_sites, a)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// `S_z` eigenvalue of Dicke level `k`.
    pub fn magnetization(&self, k: usize) -> f64 {
        k as f64 - self.n_sites as f64 / 2.0
    }

    /// Coefficients `M[r, s] = a_{r+s} C_r^{(r+s)}` in the half-chain Dicke
    /// bases `|N/2, r>_A |N/2, s>_B`.
    pub fn coefficient_matrix(&self) -> Result<DMatrix<C64>> {
        check_even(self.n_sites)?;
        let h = self.n_sites / 2;
        let mut m = DMatrix::zeros(h + 1, h + 1);
        for k in 0..=self.n_sites {
            if self.amplitudes[k] == ZERO {
                continue;
            }
            let coeffs = dicke_split_coefficients(self.n_sites, k)?;
            for (r, &cr) in coeffs.iter().enumerate() {
                if cr != 0.0 {
                    m[(r, k - r)] = self.amplitudes[k] * cr;
                }
            }
        }
        Ok(m)
    }

    pub fn schmidt(&self) -> Result<SchmidtDecomposition> {
        schmidt_from_matrix(self.coefficient_matrix()?)
    }

    pub fn purity(&self) -> Result<f64> {
        Ok(self.schmidt()?.purity())
    }

    pub fn entanglement_entropy(&self) -> Result<f64> {
        Ok(shannon_entropy(&self.schmidt()?.coefficients))
    }

    /// Applies `exp(-i θ S_z)` (`θ` real).
    pub fn rotate_z(&self, theta: f64) -> Self {
        let amplitudes = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, &a)| a * C64::from_polar(1.0, -theta * self.magnetization(k)))
            .collect();
        Self {
            n_sites: self.n_sites,
            amplitudes,
        }
    }

    /// Applies `exp(-i β S_y)` through the Wigner d-matrix.
    pub fn rotate_y(&self, beta: f64) -> Result<Self> {
        let d = wigner_d(self.n_sites, beta)?;
        Ok(self.apply_real(&d))
    }

    fn apply_real(&self, d: &DMatrix<f64>) -> Self {
        let n = self.n_sites;
        let amplitudes = (0..=n)
            .map(|k| (0..=n).map(|k2| self.amplitudes[k2] * d[(k, k2)]).sum())
            .collect();
        Self {
            n_sites: n,
            amplitudes,
        }
    }

    /// Applies `exp(-i ν S_x) = exp(i π/2 S_z) exp(-i ν S_y) exp(-i π/2 S_z)`.
    pub fn rotate_x(&self, nu: f64) -> Result<Self> {
        Ok(self.rotate_z(FRAC_PI_2).rotate_y(nu)?.rotate_z(-FRAC_PI_2))
    }
}

/// `|+>^{⊗N}` in the Dicke basis: `a_k = sqrt(C(N, k)) / 2^{N/2}`.
pub fn coherent_plus(n: usize) -> Result<SymmetricState> {
    if n == 0 {
        return invalid("coherent state needs at least one site");
    }
    let scale = 0.5f64.powf(n as f64 / 2.0);
    let amps = (0..=n).map(|k| C64::new(binomial(n, k).sqrt() * scale, 0.0)).collect();
    SymmetricState::new(n, amps)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingParams {
    pub n_sites: usize,
    /// Twisting strength of `exp(-i μ S_z^2 / 2)`.
    pub mu: f64,
    /// Rotation angle of `exp(-i ν S_x)`.
    pub nu: f64,
}

impl SqueezingParams {
    /// Parameters with `ν` set to the anti-squeezing alignment `π/2 - δ`.
    pub fn aligned(n_sites: usize, mu: f64) -> Self {
        Self {
            n_sites,
            mu,
            nu: optimal_nu(n_sites, mu),
        }
    }

    /// `A = 1 - cos^{N-2} μ`.
    pub fn a_coefficient(&self) -> f64 {
        1.0 - self.mu.cos().powi(self.n_sites as i32 - 2)
    }

    /// `B = 4 sin(μ/2) cos^{N-2}(μ/2)`.
    pub fn b_coefficient(&self) -> f64 {
        4.0 * (self.mu / 2.0).sin() * (self.mu / 2.0).cos().powi(self.n_sites as i32 - 2)
    }

    /// `δ = arctan(B/A)/2`, continued to `π/4` at `μ = 0`.
    pub fn delta(&self) -> f64 {
        let (a, b) = (self.a_coefficient(), self.b_coefficient());
        if a == 0.0 && b == 0.0 {
            return FRAC_PI_4;
        }
        0.5 * b.atan2(a)
    }
}

/// Applies `V = exp(-i ν S_x) exp(-i μ S_z^2 / 2)`.
pub fn one_axis_twist(state: &SymmetricState, params: &SqueezingParams) -> Result<SymmetricState> {
    if state.n_sites != params.n_sites {
        return Err(ClmError::DimensionMismatch(state.n_sites, params.n_sites));
    }
    let twisted: Vec<C64> = state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(k, &a)| {
            let m = state.magnetization(k);
            a * C64::from_polar(1.0, -params.mu * m * m / 2.0)
        })
        .collect();
    let twisted = SymmetricState {
        n_sites: state.n_sites,
        amplitudes: twisted,
    };
    if params.nu == 0.0 {
        return Ok(twisted);
    }
    twisted.rotate_x(params.nu)
}

/// Closed-form first and second moments of `V |+>^{⊗N}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingMoments {
    pub mean_sx: f64,
    pub var_sx: f64,
    pub var_sy: f64,
    pub var_sz: f64,
}

pub fn squeezing_moments(params: &SqueezingParams) -> Result<SqueezingMoments> {
    let n = params.n_sites;
    if n < 2 {
        return invalid("squeezing moments need N >= 2");
    }
    let nf = n as f64;
    let half = (params.mu / 2.0).cos();
    let (a, b, delta) = (params.a_coefficient(), params.b_coefficient(), params.delta());
    let mean_sx = nf / 2.0 * half.powi(n as i32 - 1);
    let var_sx = nf / 4.0 * (nf * (1.0 - half.powi(2 * (n as i32 - 1))) - (nf - 1.0) / 2.0 * a);
    let swing = (a * a + b * b).sqrt() * (2.0 * params.nu + 2.0 * delta).cos();
    let var_sy = nf / 4.0 * (1.0 + (nf - 1.0) / 4.0 * (a + swing));
    let var_sz = nf / 4.0 * (1.0 + (nf - 1.0) / 4.0 * (a - swing));
    Ok(SqueezingMoments {
        mean_sx,
        var_sx,
        var_sy,
        var_sz,
    })
}

/// `ν = π/2 - δ`, which maximizes the `S_z` variance.
pub fn optimal_nu(n: usize, mu: f64) -> f64 {
    FRAC_PI_2 - SqueezingParams { n_sites: n, mu, nu: 0.0 }.delta()
}

/// `C_r` in `|N,k> = sum_r C_r |N/2, r>_A |N/2, k-r>_B`, for `r = 0..=k`.
pub fn dicke_split_coefficients(n: usize, k: usize) -> Result<Vec<f64>> {
    check_even(n)?;
    if k > n {
        return invalid("Dicke excitation exceeds N");
    }
    let h = n / 2;
    let total = binomial(n, k);
    Ok((0..=k)
        .map(|r| {
            if r > h || k - r > h {
                0.0
            } else {
                (binomial(h, r) * binomial(h, k - r) / total).sqrt()
            }
        })
        .collect())
}

/// Expands a Dicke-basis state into the full `2^N` amplitude vector.
pub fn symmetric_to_dense(state: &SymmetricState) -> Result<PureState> {
    let n = state.n_sites;
    if n > MAX_DENSE_SITES {
        return Err(ClmError::Capacity {
            what: "dense expansion",
            requested: n,
            limit: MAX_DENSE_SITES,
        });
    }
    let scale: Vec<f64> = (0..=n).map(|k| 1.0 / binomial(n, k).sqrt()).collect();
    let amps = (0usize..1 << n)
        .map(|x| {
            let k = x.count_ones() as usize;
            state.amplitudes[k] * scale[k]
        })
        .collect();
    PureState::new(n, amps)
}

fn get_row(prev: &DMatrix<f64>, i: isize, j: isize, n: usize) -> f64 {
    if i < 0 || j < 0 || i as usize >= n || j as usize >= n {
        0.0
    } else {
        prev[(i as usize, j as usize)]
    }
}

/// Wigner small-d matrix `d^J(β)` for `J = two_j / 2`, indexed by
/// `k = m + J` in both axes: `d[(k, k')] = <J, k-J| exp(-i β J_y) |J, k'-J>`.
///
/// Built one spin-1/2 at a time: the spin-`J` block is the symmetric
/// subspace of `2J` qubits, so adding a qubit rotated by the 2×2 matrix
/// `[[c, -s], [s, c]]` (`c = cos β/2`, `s = sin β/2`) maps `d^{J-1/2}` to
/// `d^J`. Every step is a projection of a unitary, so no factorials
/// appear and the recursion stays accurate at large `J`.
pub fn wigner_d(two_j: usize, beta: f64) -> Result<DMatrix<f64>> {
    if !beta.is_finite() {
        return invalid("rotation angle must be finite");
    }
    let (s, c) = (beta / 2.0).sin_cos();
    let mut d = DMatrix::from_element(1, 1, 1.0);
    for n in 1..=two_j {
        let prev = d;
        let mut next = DMatrix::zeros(n + 1, n + 1);
        let nf = n as f64;
        for row in 0..=n {
            let (up, down) = ((row as f64).sqrt(), ((n - row) as f64).sqrt());
            let (ri, r) = (row as isize - 1, row);
            for col in 0..=n {
                let (kf, rest) = ((col as f64).sqrt(), ((n - col) as f64).sqrt());
                let j = col as isize;
                // Symmetrized update: both one-sided forms equal sqrt(row) d
                // and sqrt(n - row) d, so this is the projection onto the
                // symmetric subspace of (d ⊗ r), a contraction.
                let via_up = if row > 0 {
                    c * kf * get_row(&prev, ri, j - 1, n) - s * rest * get_row(&prev, ri, j, n)
                } else {
                    0.0
                };
                let via_down = if row < n {
                    s * kf * get_row(&prev, r as isize, j - 1, n) + c * rest * get_row(&prev, r as isize, j, n)
                } else {
                    0.0
                };
                next[(row, col)] = (up * via_up + down * via_down) / nf;
            }
        }
        d = next;
    }
    let residual = (d.transpose() * &d - DMatrix::<f64>::identity(two_j + 1, two_j + 1)).amax();
    if residual > 1e-6 {
        return Err(ClmError::Numerical(format!(
            "Wigner d-matrix lost orthogonality (residual {residual:.3e}) at 2J = {two_j}"
        )));
    }
    Ok(d)
}
