//! Periodic spin-1/2 XXZ chain `H = Σ_i J(σ_x σ_x + σ_y σ_y) + J_z σ_z σ_z`.
//!
//! Ground states come from restarted Lanczos with full reorthogonalization
//! inside the zero-magnetization sector. Below `J_z/J = -1` the chain is in
//! the ferromagnetic phase and the GHZ state is used instead.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clm::delta_d;
use crate::error::{invalid, ClmError, Result};
use crate::povm::{joint_distribution_dense, MeasurementSetting};
use crate::statecore::{schmidt_weights, shannon_entropy, PureState, C64, MAX_DENSE_SITES};
use crate::statelib::ghz;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XxzParams {
    pub n_sites: usize,
    pub j: f64,
    pub jz: f64,
}

impl XxzParams {
    pub fn new(n_sites: usize, j: f64, jz: f64) -> Result<Self> {
        if n_sites < 4 || !n_sites.is_multiple_of(2) {
            return invalid(format!("XXZ chain needs an even N >= 4, got {n_sites}"));
        }
        if n_sites > MAX_DENSE_SITES {
            return Err(ClmError::Capacity {
                what: "XXZ ground state",
                requested: n_sites,
                limit: MAX_DENSE_SITES,
            });
        }
        if !(j > 0.0) || !j.is_finite() || !jz.is_finite() {
            return invalid(format!("couplings must be finite with J > 0, got J = {j}, Jz = {jz}"));
        }
        Ok(Self { n_sites, j, jz })
    }

    /// Unit hopping with the given anisotropy ratio.
    pub fn with_ratio(n_sites: usize, ratio: f64) -> Result<Self> {
        Self::new(n_sites, 1.0, ratio)
    }

    pub fn ratio(&self) -> f64 {
        self.jz / self.j
    }

    fn bonds(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_sites).map(move |i| (i, (i + 1) % self.n_sites))
    }

    fn diagonal(&self, x: usize) -> f64 {
        self.bonds()
            .map(|(i, k)| if (x >> i & 1) == (x >> k & 1) { self.jz } else { -self.jz })
            .sum()
    }
}

/// Matrix-free `H v` on the full `2^N` space.
pub fn apply_hamiltonian(params: &XxzParams, v: &[C64]) -> Result<Vec<C64>> {
    let dim = 1usize << params.n_sites;
    if v.len() != dim {
        return Err(ClmError::DimensionMismatch(v.len(), dim));
    }
    let mut out = vec![C64::new(0.0, 0.0); dim];
    for (x, &amp) in v.iter().enumerate() {
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        out[x] += amp * params.diagonal(x);
        for (i, k) in params.bonds() {
            if (x >> i & 1) != (x >> k & 1) {
                out[x ^ (1 << i | 1 << k)] += amp * (2.0 * params.j);
            }
        }
    }
    Ok(out)
}

/// Basis of the zero-magnetization sector with Lin-table ranking: the index
/// of a state is an offset for its upper half plus the rank of its lower
/// half among lower halves with the same popcount.
#[derive(Debug, Clone)]
pub struct SzSector {
    n_sites: usize,
    states: Vec<usize>,
    low_bits: usize,
    upper_offset: Vec<usize>,
    lower_rank: Vec<usize>,
}

impl SzSector {
    pub fn new(n_sites: usize) -> Result<Self> {
        if !n_sites.is_multiple_of(2) || n_sites == 0 || n_sites > MAX_DENSE_SITES {
            return invalid(format!("no zero-magnetization sector for N = {n_sites}"));
        }
        let half = n_sites / 2;
        let low_bits = n_sites / 2;
        let low_count = 1usize << low_bits;
        let high_count = 1usize << (n_sites - low_bits);

        let mut lower_rank = vec![0usize; low_count];
        let mut seen = vec![0usize; low_bits + 1];
        for (lo, rank) in lower_rank.iter_mut().enumerate() {
            let p = lo.count_ones() as usize;
            *rank = seen[p];
            seen[p] += 1;
        }

        let mut states = Vec::new();
        let mut upper_offset = vec![usize::MAX; high_count];
        for (hi, offset) in upper_offset.iter_mut().enumerate() {
            let need = half as i64 - hi.count_ones() as i64;
            if need < 0 || need as usize > low_bits {
                continue;
            }
            *offset = states.len();
            for lo in 0..low_count {
                if lo.count_ones() as i64 == need {
                    states.push(hi << low_bits | lo);
                }
            }
        }
        Ok(Self {
            n_sites,
            states,
            low_bits,
            upper_offset,
            lower_rank,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    /// Position of a sector basis state; `None` outside the sector.
    pub fn index(&self, x: usize) -> Option<usize> {
        if x.count_ones() as usize != self.n_sites / 2 || x >> self.n_sites != 0 {
            return None;
        }
        let hi = x >> self.low_bits;
        let lo = x & ((1 << self.low_bits) - 1);
        Some(self.upper_offset[hi] + self.lower_rank[lo])
    }

    fn rank(&self, x: usize) -> usize {
        self.upper_offset[x >> self.low_bits] + self.lower_rank[x & ((1 << self.low_bits) - 1)]
    }

    /// `H v` restricted to the sector.
    pub fn apply(&self, params: &XxzParams, v: &[f64], out: &mut [f64]) {
        let hop = 2.0 * params.j;
        for (k, &x) in self.states.iter().enumerate() {
            let mut acc = params.diagonal(x) * v[k];
            for (i, m) in params.bonds() {
                if (x >> i & 1) != (x >> m & 1) {
                    acc += hop * v[self.rank(x ^ (1 << i | 1 << m))];
                }
            }
            out[k] = acc;
        }
    }

    /// Embeds a sector vector into the full space.
    pub fn embed(&self, v: &[f64]) -> Vec<C64> {
        let mut full = vec![C64::new(0.0, 0.0); 1 << self.n_sites];
        for (&x, &a) in self.states.iter().zip(v) {
            full[x] = C64::new(a, 0.0);
        }
        full
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosConfig {
    /// Krylov dimension per restart cycle.
    pub krylov_dim: usize,
    /// Cap on the total number of Lanczos steps across restarts.
    pub max_iterations: usize,
    /// Target for `||H ψ - E ψ||`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosConfig {
    fn default() -> Self {
        Self {
            krylov_dim: 60,
            max_iterations: 500,
            tol: 1e-10,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    pub state: PureState,
    pub energy: f64,
    /// Total `S_z` of the sector searched; `None` for the GHZ substitution.
    pub sector: Option<i64>,
    pub iterations: usize,
    pub residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Lowest eigenpair of a real symmetric operator by restarted Lanczos.
pub fn lanczos_lowest<F>(dim: usize, mut apply: F, config: &LanczosConfig) -> Result<(f64, Vec<f64>, usize, f64)>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return invalid("empty operator");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut start: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = dot(&start, &start).sqrt();
    start.iter_mut().for_each(|x| *x /= norm);

    let m = config.krylov_dim.clamp(2, dim.max(2)).min(dim);
    let mut w = vec![0.0; dim];
    let mut steps = 0usize;
    let mut residual: f64;
    loop {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        for j in 0..m {
            apply(&basis[j], &mut w);
            steps += 1;
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            // Two passes of classical Gram–Schmidt against the whole basis.
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&w, q);
                    axpy(-c, q, &mut w);
                }
            }
            let b = dot(&w, &w).sqrt();
            if j + 1 == m || b < 1e-13 {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let lowest = (0..k).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap_or(0);
        let mut ritz = vec![0.0; dim];
        for (q, s) in basis.iter().zip(eig.eigenvectors.column(lowest).iter()) {
            axpy(*s, q, &mut ritz);
        }
        let norm = dot(&ritz, &ritz).sqrt();
        ritz.iter_mut().for_each(|x| *x /= norm);

        apply(&ritz, &mut w);
        let energy = dot(&ritz, &w);
        axpy(-energy, &ritz, &mut w);
        residual = dot(&w, &w).sqrt();
        if residual <= config.tol {
            return Ok((energy, ritz, steps, residual));
        }
        if steps >= config.max_iterations {
            break;
        }
        start = ritz;
    }
    Err(ClmError::NonConvergence {
        what: "Lanczos ground state",
        iterations: steps,
        residual,
    })
}

/// Makes the largest-magnitude amplitude (lowest index among near-ties)
/// positive.
fn fix_phase(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(pos) = v.iter().position(|x| x.abs() >= max * (1.0 - 1e-9)) {
        if v[pos] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Ground state of the chain. `J_z/J < -1` yields the GHZ state; exactly
/// `-1` is rejected because the ground space is degenerate across sectors.
pub fn ground_state(params: &XxzParams) -> Result<GroundStateResult> {
    ground_state_with(params, &LanczosConfig::default())
}

pub fn ground_state_with(params: &XxzParams, config: &LanczosConfig) -> Result<GroundStateResult> {
    let ratio = params.ratio();
    if ratio == -1.0 {
        return invalid("Jz/J = -1 is a degenerate point; choose a value slightly above -1 or below it");
    }
    if ratio < -1.0 {
        return Ok(GroundStateResult {
            state: ghz(params.n_sites)?,
            energy: params.n_sites as f64 * params.jz,
            sector: None,
            iterations: 0,
            residual: 0.0,
        });
    }
    let sector = SzSector::new(params.n_sites)?;
    let (energy, mut v, iterations, residual) =
        lanczos_lowest(sector.dim(), |x, y| sector.apply(params, x, y), config)?;
    fix_phase(&mut v);
    Ok(GroundStateResult {
        state: PureState::normalized(params.n_sites, sector.embed(&v))?,
        energy,
        sector: Some(0),
        iterations,
        residual,
    })
}

/// Cyclic shift of every site by one, `i -> i + 1 (mod N)`.
pub fn translate(state: &PureState) -> Result<PureState> {
    let n = state.n_sites();
    let mask = (1usize << n) - 1;
    let mut out = vec![C64::new(0.0, 0.0); 1 << n];
    for (x, &a) in state.amplitudes().iter().enumerate() {
        let y = ((x << 1) | (x >> (n - 1))) & mask;
        out[y] = a;
    }
    PureState::with_split(n, out, state.sites_a().to_vec())
}

/// One row of the anisotropy sweep.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SweepRow {
    pub ratio: f64,
    pub delta_d_xx: f64,
    pub delta_d_zz: f64,
    pub linear_entropy: f64,
    pub entanglement_entropy: f64,
}

pub fn sweep_point(n_sites: usize, ratio: f64) -> Result<SweepRow> {
    let gs = ground_state(&XxzParams::with_ratio(n_sites, ratio)?)?;
    let xx = delta_d(&joint_distribution_dense(&gs.state, &MeasurementSetting::xx())?);
    let zz = delta_d(&joint_distribution_dense(&gs.state, &MeasurementSetting::zz())?);
    let weights = schmidt_weights(&gs.state)?;
    Ok(SweepRow {
        ratio,
        delta_d_xx: xx,
        delta_d_zz: zz,
        linear_entropy: 1.0 - weights.iter().map(|l| l * l).sum::<f64>(),
        entanglement_entropy: shannon_entropy(&weights),
    })
}

pub fn sweep_anisotropy(n_sites: usize, ratios: &[f64]) -> Result<Vec<SweepRow>> {
    ratios.iter().map(|&r| sweep_point(n_sites, r)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ScalingRow {
    pub n_sites: usize,
    pub ratio: f64,
    pub delta_d_zz: f64,
}

/// Least-squares fit `1 - Δ_D ≈ c N^{-α}` in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PowerLawFit {
    pub ratio: f64,
    pub c: f64,
    pub alpha: f64,
    /// Root-mean-square residual of the fit in natural-log units.
    pub rms_residual: f64,
    pub max_residual: f64,
}

pub fn fit_power_law(ratio: f64, ns: &[usize], deltas: &[f64]) -> Result<PowerLawFit> {
    if ns.len() != deltas.len() || ns.len() < 2 {
        return invalid("power-law fit needs at least two matching points");
    }
    if deltas.iter().any(|&d| d >= 1.0) {
        return invalid("1 - Δ_D must be positive for a log-log fit");
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = deltas.iter().map(|&d| (1.0 - d).ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let res: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (intercept + slope * x)).collect();
    Ok(PowerLawFit {
        ratio,
        c: intercept.exp(),
        alpha: -slope,
        rms_residual: (res.iter().map(|r| r * r).sum::<f64>() / k).sqrt(),
        max_residual: res.iter().fold(0.0f64, |m, r| m.max(r.abs())),
    })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScalingStudy {
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<PowerLawFit>,
}

pub fn scaling_study(ns: &[usize], ratios: &[f64]) -> Result<ScalingStudy> {
    if let Some(&bad) = ns.iter().find(|&&n| n % 4 != 0) {
        return invalid(format!("scaling study uses N divisible by 4, got {bad}"));
    }
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &ratio in ratios {
        let mut deltas = Vec::with_capacity(ns.len());
        for &n in ns {
            let gs = ground_state(&XxzParams::with_ratio(n, ratio)?)?;
            let d = delta_d(&joint_distribution_dense(&gs.state, &MeasurementSetting::zz())?);
            deltas.push(d);
            rows.push(ScalingRow {
                n_sites: n,
                ratio,
                delta_d_zz: d,
            });
        }
        if ns.len() >= 2 && deltas.iter().all(|&d| d < 1.0) {
            fits.push(fit_power_law(ratio, ns, &deltas)?);
        }
    }
    Ok(ScalingStudy { rows, fits })
}
