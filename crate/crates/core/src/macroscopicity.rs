//! Variance-based macroscopicity `M(ψ) = max V_ψ(Σ_i α_i·σ_i)` over unit
//! vectors `α_i`, from one- and two-site Pauli correlations.

use nalgebra::{DMatrix, Matrix3, SymmetricEigen, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, ClmError, Result};
use crate::povm::{Direction, PartyAxes, MeasurementSetting};
use crate::statecore::{PureState, C64};

/// Correlation-tensor memory grows as `3N · 2^N`; beyond this it is refused.
pub const MAX_MACRO_SITES: usize = 16;

const UNIT_TOL: f64 = 1e-12;

/// `scale · Σ_i α_i·σ_i` with one unit vector per site.
#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveObservable {
    directions: Vec<[f64; 3]>,
    scale: f64,
}

impl CollectiveObservable {
    pub fn new(directions: Vec<[f64; 3]>, scale: f64) -> Result<Self> {
        for v in &directions {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if (n - 1.0).abs() > UNIT_TOL {
                return invalid(format!("site direction {v:?} has norm {n}"));
            }
        }
        Ok(Self { directions, scale })
    }

    pub fn uniform(n_sites: usize, direction: Direction) -> Self {
        Self {
            directions: vec![direction.vector(); n_sites],
            scale: 1.0,
        }
    }

    pub fn directions(&self) -> &[[f64; 3]] {
        &self.directions
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Pauli covariance matrix `K` of a state, `3N × 3N`, with
/// `K[3i+a, 3j+b] = <σ_a^i σ_b^j>_sym - <σ_a^i><σ_b^j>`.
#[derive(Debug, Clone)]
pub struct CovarianceTensor {
    n_sites: usize,
    k: DMatrix<f64>,
}

fn apply_pauli(amps: &[C64], site: usize, axis: usize) -> Vec<C64> {
    let bit = 1usize << site;
    let i = C64::new(0.0, 1.0);
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    for (x, o) in out.iter_mut().enumerate() {
        let up = x & bit != 0;
        *o = match axis {
            0 => amps[x ^ bit],
            // σ_y |up> = i|down>, σ_y |down> = -i|up>
            1 => {
                if up {
                    -i * amps[x ^ bit]
                } else {
                    i * amps[x ^ bit]
                }
            }
            _ => {
                if up {
                    amps[x]
                } else {
                    -amps[x]
                }
            }
        };
    }
    out
}

fn inner_re(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

impl CovarianceTensor {
    pub fn new(state: &PureState) -> Result<Self> {
        let n = state.n_sites();
        if n > MAX_MACRO_SITES {
            return Err(ClmError::Capacity {
                what: "macroscopicity correlation tensor",
                requested: n,
                limit: MAX_MACRO_SITES,
            });
        }
        let amps = state.amplitudes();
        let applied: Vec<Vec<C64>> = (0..3 * n).map(|r| apply_pauli(amps, r / 3, r % 3)).collect();
        let mean: Vec<f64> = applied.iter().map(|v| inner_re(amps, v)).collect();
        let mut k = DMatrix::zeros(3 * n, 3 * n);
        for r in 0..3 * n {
            for c in r..3 * n {
                let value = if r / 3 == c / 3 {
                    // {σ_a, σ_b}/2 = δ_ab on the same site.
                    if r == c {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    inner_re(&applied[r], &applied[c])
                } - mean[r] * mean[c];
                k[(r, c)] = value;
                k[(c, r)] = value;
            }
        }
        Ok(Self { n_sites: n, k })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    /// `αᵀ K α` for stacked site vectors.
    pub fn quadratic(&self, alpha: &[[f64; 3]]) -> f64 {
        let v: Vec<f64> = alpha.iter().flatten().copied().collect();
        let v = nalgebra::DVector::from_vec(v);
        (v.transpose() * &self.k * &v)[(0, 0)]
    }

    fn block(&self, i: usize, j: usize) -> Matrix3<f64> {
        Matrix3::from_fn(|a, b| self.k[(3 * i + a, 3 * j + b)])
    }

    /// `N λ_max(K)`: the maximum with `|α_i| = 1` relaxed to `Σ|α_i|² = N`.
    pub fn relaxation_bound(&self) -> f64 {
        let eig = SymmetricEigen::new(self.k.clone());
        let top = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.n_sites as f64 * top.max(0.0)
    }
}

pub fn variance(state: &PureState, obs: &CollectiveObservable) -> Result<f64> {
    if obs.directions.len() != state.n_sites() {
        return Err(ClmError::DimensionMismatch(obs.directions.len(), state.n_sites()));
    }
    let k = CovarianceTensor::new(state)?;
    Ok(obs.scale * obs.scale * k.quadratic(&obs.directions))
}

/// Maximizer of `uᵀ Q u + 2 hᵀ u` over the unit sphere, `Q` symmetric.
///
/// The optimum satisfies `(λ - Q) u = h` with `λ >= λ_max(Q)`; `λ` is found
/// by bisection on the secular equation `Σ g_k² / (λ - q_k)² = 1`.
pub fn sphere_quadratic_max(q: &Matrix3<f64>, h: &Vector3<f64>) -> Vector3<f64> {
    let eig = SymmetricEigen::new(*q);
    let order = {
        let mut o = [0usize, 1, 2];
        o.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        o
    };
    let vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs: Vec<Vector3<f64>> = order.iter().map(|&k| eig.eigenvectors.column(k).into_owned()).collect();
    let g: Vec<f64> = vecs.iter().map(|e| e.dot(h)).collect();
    let hn = h.norm();
    let top = vals[0];
    let scale = hn.max(q.abs().max()).max(1e-300);

    let norm_sq = |lam: f64| -> f64 { (0..3).map(|k| g[k] * g[k] / (lam - vals[k]).powi(2)).sum() };

    // Hard case: h has no weight on the top eigenvector and the interior
    // solution at λ = λ_max is shorter than one.
    if g[0].abs() <= 1e-14 * scale {
        let partial: Vector3<f64> = (1..3)
            .filter(|&k| (top - vals[k]).abs() > 1e-14 * scale)
            .map(|k| vecs[k] * (g[k] / (top - vals[k])))
            .sum();
        let pn = partial.norm_squared();
        if pn <= 1.0 {
            let tau = (1.0 - pn).sqrt();
            let plus = partial + vecs[0] * tau;
            let minus = partial - vecs[0] * tau;
            let f = |u: &Vector3<f64>| u.dot(&(q * u)) + 2.0 * h.dot(u);
            return if f(&plus) >= f(&minus) { plus } else { minus };
        }
    }

    let mut lo = top;
    let mut hi = top + hn.max(1e-300);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if norm_sq(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = hi;
    let u: Vector3<f64> = (0..3).map(|k| vecs[k] * (g[k] / (lam - vals[k]))).sum();
    let n = u.norm();
    if n > 0.0 {
        u / n
    } else {
        vecs[0]
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MacroConfig {
    pub restarts: usize,
    pub tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for MacroConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            tol: 1e-10,
            max_sweeps: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MacroResult {
    /// Best variance found by coordinate ascent (a lower bound on `M`).
    pub value: f64,
    pub directions: CollectiveObservable,
    /// `N λ_max(K)`, an upper bound on `M`.
    pub relaxation_upper_bound: f64,
    /// Variance after each sweep of the winning restart.
    pub trace: Vec<f64>,
}

fn normalize_or(v: Vector3<f64>, fallback: [f64; 3]) -> [f64; 3] {
    let n = v.norm();
    if n > 1e-12 {
        [v[0] / n, v[1] / n, v[2] / n]
    } else {
        fallback
    }
}

/// Coordinate ascent from one starting configuration.
fn ascend(k: &CovarianceTensor, mut alpha: Vec<[f64; 3]>, config: &MacroConfig) -> Result<(f64, Vec<[f64; 3]>, Vec<f64>)> {
    let n = k.n_sites;
    let blocks: Vec<Vec<Matrix3<f64>>> = (0..n).map(|i| (0..n).map(|j| k.block(i, j)).collect()).collect();
    let mut value = k.quadratic(&alpha);
    let mut trace = vec![value];
    for _ in 0..config.max_sweeps {
        let before = value;
        for i in 0..n {
            let mut h = Vector3::zeros();
            for j in (0..n).filter(|&j| j != i) {
                h += blocks[i][j] * Vector3::from(alpha[j]);
            }
            let q = blocks[i][i];
            let f = |u: &Vector3<f64>| u.dot(&(q * u)) + 2.0 * h.dot(u);
            let old = Vector3::from(alpha[i]);
            let new = sphere_quadratic_max(&q, &h);
            if f(&new) > f(&old) {
                alpha[i] = [new[0], new[1], new[2]];
            }
        }
        value = k.quadratic(&alpha);
        if value < before - 1e-9 * before.abs().max(1.0) {
            return Err(ClmError::Numerical(format!(
                "coordinate ascent decreased the variance from {before} to {value}"
            )));
        }
        trace.push(value);
        if value - before < config.tol {
            return Ok((value, alpha, trace));
        }
    }
    Err(ClmError::NonConvergence {
        what: "macroscopicity coordinate ascent",
        iterations: config.max_sweeps,
        residual: trace[trace.len() - 1] - trace[trace.len().saturating_sub(2)],
    })
}

/// Multi-start coordinate ascent for `M(ψ)`, reported with the relaxation
/// upper bound.
pub fn macroscopicity(state: &PureState, config: &MacroConfig) -> Result<MacroResult> {
    let k = CovarianceTensor::new(state)?;
    macroscopicity_from_tensor(&k, config)
}

pub fn macroscopicity_from_tensor(k: &CovarianceTensor, config: &MacroConfig) -> Result<MacroResult> {
    let n = k.n_sites;
    let upper = k.relaxation_bound();
    let mut starts: Vec<Vec<[f64; 3]>> = vec![vec![[0.0, 0.0, 1.0]; n], vec![[1.0, 0.0, 0.0]; n], vec![[0.0, 1.0, 0.0]; n]];
    // Site blocks of the top eigenvector of K, each normalized.
    let eig = SymmetricEigen::new(k.k.clone());
    let top = (0..3 * n)
        .max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
        .unwrap_or(0);
    let v = eig.eigenvectors.column(top);
    starts.push((0..n).map(|i| normalize_or(Vector3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]), [0.0, 0.0, 1.0])).collect());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    while starts.len() < config.restarts.max(1) {
        starts.push(
            (0..n)
                .map(|_| {
                    let g = Vector3::from_fn(|_, _| StandardNormal.sample(&mut rng));
                    normalize_or(g, [0.0, 0.0, 1.0])
                })
                .collect(),
        );
    }
    starts.truncate(config.restarts.max(1));

    let mut best: Option<(f64, Vec<[f64; 3]>, Vec<f64>)> = None;
    for start in starts {
        let run = ascend(k, start, config)?;
        if best.as_ref().is_none_or(|b| run.0 > b.0) {
            best = Some(run);
        }
    }
    let (value, alpha, trace) = best.expect("at least one restart");
    Ok(MacroResult {
        value,
        directions: CollectiveObservable { directions: alpha, scale: 1.0 },
        relaxation_upper_bound: upper.max(value),
        trace,
    })
}

fn party_vectors(axes: &PartyAxes, count: usize) -> Result<Vec<[f64; 3]>> {
    match axes {
        PartyAxes::Uniform(d) => Ok(vec![d.vector(); count]),
        PartyAxes::PerSite(list) if list.len() == count => Ok(list.iter().map(Direction::vector).collect()),
        PartyAxes::PerSite(list) => Err(ClmError::DimensionMismatch(list.len(), count)),
    }
}

/// `(V(S_A(α) ⊗ 1), V(1 ⊗ S_B(β)))` with `S = Σ α·σ / 2`.
pub fn half_variances(state: &PureState, setting: &MeasurementSetting) -> Result<(f64, f64)> {
    let k = CovarianceTensor::new(state)?;
    half_variances_from_tensor(&k, state, setting)
}

pub fn half_variances_from_tensor(k: &CovarianceTensor, state: &PureState, setting: &MeasurementSetting) -> Result<(f64, f64)> {
    let part = |sites: &[usize], axes: &PartyAxes| -> Result<f64> {
        let vecs = party_vectors(axes, sites.len())?;
        let mut total = 0.0;
        for (si, vi) in sites.iter().zip(&vecs) {
            for (sj, vj) in sites.iter().zip(&vecs) {
                for a in 0..3 {
                    for b in 0..3 {
                        total += vi[a] * k.k[(3 * si + a, 3 * sj + b)] * vj[b];
                    }
                }
            }
        }
        Ok(total / 4.0)
    };
    Ok((part(state.sites_a(), &setting.a)?, part(state.sites_b(), &setting.b)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statelib::ghz;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ghz_values() {
        for n in [4, 8] {
            let psi = ghz(n).unwrap();
            let nf = n as f64;
            let v = variance(&psi, &CollectiveObservable::uniform(n, Direction::z())).unwrap();
            assert_abs_diff_eq!(v, nf * nf, epsilon = 1e-10);
            let m = macroscopicity(&psi, &MacroConfig::default()).unwrap();
            assert_abs_diff_eq!(m.value, nf * nf, epsilon = 1e-6);
            assert!(m.value <= m.relaxation_upper_bound + 1e-8);
            let (va, vb) = half_variances(&psi, &MeasurementSetting::zz()).unwrap();
            assert_abs_diff_eq!(va, nf * nf / 16.0, epsilon = 1e-10);
            assert_abs_diff_eq!(vb, nf * nf / 16.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn product_state_gives_n() {
        let site = [C64::new(0.8, 0.0), C64::new(0.36, 0.48)];
        let psi = PureState::product(&[site; 6]).unwrap();
        let m = macroscopicity(&psi, &MacroConfig::default()).unwrap();
        assert_abs_diff_eq!(m.value, 6.0, epsilon = 1e-8);
        assert_abs_diff_eq!(m.relaxation_upper_bound, 6.0, epsilon = 1e-8);
    }

    #[test]
    fn sphere_maximizer_beats_samples() {
        let q = Matrix3::new(1.0, 0.3, -0.2, 0.3, -0.5, 0.1, -0.2, 0.1, 0.4);
        for h in [Vector3::new(0.2, -0.7, 0.1), Vector3::zeros(), Vector3::new(0.0, 1e-3, 0.0)] {
            let u = sphere_quadratic_max(&q, &h);
            assert_abs_diff_eq!(u.norm(), 1.0, epsilon = 1e-12);
            let f = |v: &Vector3<f64>| v.dot(&(q * v)) + 2.0 * h.dot(v);
            for t in 0..40 {
                for p in 0..80 {
                    let (th, ph) = (std::f64::consts::PI * t as f64 / 39.0, std::f64::consts::TAU * p as f64 / 80.0);
                    let v = Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
                    assert!(f(&u) >= f(&v) - 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_non_unit_directions() {
        assert!(CollectiveObservable::new(vec![[1.0, 1.0, 0.0]], 1.0).is_err());
    }
}
