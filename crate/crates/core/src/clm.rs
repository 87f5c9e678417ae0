//! Correlation in local measurements: the discrete CLM `Δ_D`, its
//! information-theoretic upper bounds, the Schmidt-basis construction,
//! direction optimization and the Gaussian coarse-grained CLM `Δ_C`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LOG2_E, PI};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, ClmError, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::povm::{joint_distribution_dense, rotate_into_frames, bin_by_halves, Direction, JointDistribution, MeasurementSetting};
use crate::statecore::{schmidt_weights, shannon_entropy, total_correlation_pure, BipartiteDensity, PureState, C64};

/// Total variation distance between a joint distribution (any shape) and
/// the product of its marginals.
pub fn delta_d_matrix(p: &DMatrix<f64>) -> f64 {
    let pa: Vec<f64> = (0..p.nrows()).map(|r| p.row(r).sum()).collect();
    let pb: Vec<f64> = (0..p.ncols()).map(|s| p.column(s).sum()).collect();
    let mut total = 0.0;
    for r in 0..p.nrows() {
        for s in 0..p.ncols() {
            total += (p[(r, s)] - pa[r] * pb[s]).abs();
        }
    }
    (0.5 * total).clamp(0.0, 1.0)
}

pub fn delta_d(jd: &JointDistribution) -> f64 {
    delta_d_matrix(jd.probabilities())
}

/// `Δ_D` for projective measurements in the Schmidt bases, which is
/// `1 - Tr ρ_A^2`. Both routes are evaluated and must agree.
pub fn schmidt_clm(state: &PureState) -> Result<f64> {
    let lam = schmidt_weights(state)?;
    let p = DMatrix::from_fn(lam.len(), lam.len(), |i, j| if i == j { lam[i] } else { 0.0 });
    let from_statistics = delta_d_matrix(&p);
    let from_purity = 1.0 - lam.iter().map(|l| l * l).sum::<f64>();
    if (from_statistics - from_purity).abs() > 1e-10 {
        return Err(ClmError::Numerical(format!(
            "Schmidt-basis CLM {from_statistics} disagrees with 1 - purity {from_purity}"
        )));
    }
    Ok(from_statistics)
}

/// Measurement statistics of `rho_AB` in orthonormal product bases given as
/// vectors on the two factors.
pub fn projective_statistics(rho: &BipartiteDensity, basis_a: &[Vec<C64>], basis_b: &[Vec<C64>]) -> Result<DMatrix<f64>> {
    let (da, db) = (rho.dim_a, rho.dim_b);
    if basis_a.iter().any(|v| v.len() != da) || basis_b.iter().any(|v| v.len() != db) {
        return Err(ClmError::DimensionMismatch(da, db));
    }
    let m = rho.rho.matrix();
    let mut p = DMatrix::zeros(basis_a.len(), basis_b.len());
    for (i, u) in basis_a.iter().enumerate() {
        for (j, w) in basis_b.iter().enumerate() {
            let v: Vec<C64> = (0..da * db).map(|x| u[x % da] * w[x / da]).collect();
            let mut acc = C64::new(0.0, 0.0);
            for x in 0..da * db {
                let row: C64 = (0..da * db).map(|y| m[(x, y)] * v[y]).sum();
                acc += v[x].conj() * row;
            }
            p[(i, j)] = acc.re.max(0.0);
        }
    }
    Ok(p)
}

/// `Δ_D` together with the total correlation and its two upper bounds.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ClmBounds {
    pub delta_d: f64,
    pub total_correlation: f64,
    pub pinsker: f64,
    pub fidelity_bound: f64,
}

impl ClmBounds {
    pub fn from_information(delta_d: f64, total_correlation: f64, mutual_information: f64) -> Self {
        let i = mutual_information.max(0.0);
        Self {
            delta_d,
            total_correlation,
            pinsker: pinsker_bound(i),
            fidelity_bound: fidelity_chain_bound(i),
        }
    }

    pub fn is_ordered(&self, tol: f64) -> bool {
        self.delta_d <= self.total_correlation + tol && self.total_correlation <= self.pinsker.min(self.fidelity_bound) + tol
    }
}

/// `sqrt(I / (2 log2 e))` with `I` in bits.
pub fn pinsker_bound(mutual_information: f64) -> f64 {
    (mutual_information / (2.0 * LOG2_E)).sqrt()
}

/// `sqrt(1 - 2^{-I})` with `I` in bits.
pub fn fidelity_chain_bound(mutual_information: f64) -> f64 {
    (1.0 - (-mutual_information).exp2()).max(0.0).sqrt()
}

/// Bound chain of a pure state from its Schmidt weights.
pub fn bound_chain(state: &PureState, jd: &JointDistribution) -> Result<ClmBounds> {
    let lam = schmidt_weights(state)?;
    let t = total_correlation_pure(&lam);
    let i = 2.0 * shannon_entropy(&lam);
    Ok(ClmBounds::from_information(delta_d(jd), t, i))
}

/// Bound chain of a general bipartite density matrix for the given statistics.
pub fn bound_chain_mixed(rho: &BipartiteDensity, statistics: &DMatrix<f64>) -> Result<ClmBounds> {
    Ok(ClmBounds::from_information(
        delta_d_matrix(statistics),
        rho.total_correlation()?,
        rho.mutual_information()?,
    ))
}

/// Knobs for [`optimize_directions`].
#[derive(Debug, Clone, Copy)]
pub struct OptimizerConfig {
    /// Total number of simplex refinements: up to four start from the best
    /// grid seeds, the rest from seeded random angles.
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
    pub max_evals: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 8,
            tol: 1e-8,
            seed: 0,
            max_evals: 600,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizedSetting {
    pub a: Direction,
    pub b: Direction,
    pub delta_d: f64,
    pub best_seed: f64,
    pub evaluations: usize,
}

impl OptimizedSetting {
    pub fn setting(&self) -> MeasurementSetting {
        MeasurementSetting::uniform(self.a, self.b)
    }
}

/// Sixteen directions on the upper hemisphere, including `x`, `y` and `z`.
/// The lower hemisphere is redundant: `-α` only relabels outcomes.
pub fn hemisphere_grid() -> Vec<Direction> {
    let mut grid = vec![Direction::z()];
    grid.extend((0..5).map(|k| Direction::new(FRAC_PI_4, 2.0 * PI * k as f64 / 5.0)));
    grid.extend((0..10).map(|k| Direction::new(FRAC_PI_2, PI * k as f64 / 10.0)));
    grid
}

fn canonical(theta: f64, phi: f64) -> Direction {
    let d = Direction::new(theta, phi);
    let v = d.vector();
    let theta = v[2].clamp(-1.0, 1.0).acos();
    let phi = if theta.sin().abs() < 1e-15 { 0.0 } else { v[1].atan2(v[0]) };
    Direction::new(theta, phi)
}

/// Evaluates `Δ_D` for uniform directions with a reusable scratch buffer.
struct Objective<'a> {
    state: &'a PureState,
    scratch: Vec<C64>,
    evaluations: usize,
}

impl Objective<'_> {
    fn eval(&mut self, a: Direction, b: Direction) -> f64 {
        self.evaluations += 1;
        self.scratch.copy_from_slice(self.state.amplitudes());
        let mut frames: Vec<(usize, Direction)> = self.state.sites_a().iter().map(|&s| (s, a)).collect();
        frames.extend(self.state.sites_b().iter().map(|&s| (s, b)));
        rotate_into_frames(&mut self.scratch, &frames);
        delta_d(&bin_by_halves(self.state, &self.scratch))
    }
}

fn angles_less(x: &[f64; 4], y: &[f64; 4]) -> bool {
    x.iter().zip(y).find(|(a, b)| a != b).is_some_and(|(a, b)| a < b)
}

/// Local maximum of `Δ_D(α, β)` over uniform directions: grid seeding on
/// the hemisphere, then Nelder–Mead on `(θ_A, φ_A, θ_B, φ_B)`. Ties keep the
/// lexicographically smallest angles.
pub fn optimize_directions(state: &PureState, config: &OptimizerConfig) -> Result<OptimizedSetting> {
    if config.restarts == 0 {
        return invalid("optimize_directions needs at least one restart");
    }
    let mut obj = Objective {
        state,
        scratch: vec![C64::new(0.0, 0.0); state.amplitudes().len()],
        evaluations: 0,
    };
    let grid = hemisphere_grid();
    let mut seeds: Vec<([f64; 4], f64)> = Vec::with_capacity(grid.len() * grid.len());
    for a in &grid {
        for b in &grid {
            let v = obj.eval(*a, *b);
            seeds.push(([a.theta, a.phi, b.theta, b.phi], v));
        }
    }
    seeds.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal)));
    let best_seed = seeds[0].1;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut starts: Vec<[f64; 4]> = seeds.iter().take(config.restarts.min(4)).map(|s| s.0).collect();
    while starts.len() < config.restarts {
        starts.push([
            rng.random_range(0.0..PI),
            rng.random_range(-PI..PI),
            rng.random_range(0.0..PI),
            rng.random_range(-PI..PI),
        ]);
    }

    let opts = NelderMeadOptions {
        initial_step: 0.2,
        f_tol: config.tol,
        x_tol: config.tol,
        max_evals: config.max_evals,
    };
    let mut best = (seeds[0].0, best_seed);
    for start in starts {
        let m = nelder_mead(
            |x| -obj.eval(Direction::new(x[0], x[1]), Direction::new(x[2], x[3])),
            &start,
            &opts,
        );
        let a = canonical(m.x[0], m.x[1]);
        let b = canonical(m.x[2], m.x[3]);
        let angles = [a.theta, a.phi, b.theta, b.phi];
        let value = -m.value;
        if value > best.1 || (value == best.1 && angles_less(&angles, &best.0)) {
            best = (angles, value);
        }
    }
    Ok(OptimizedSetting {
        a: Direction::new(best.0[0], best.0[1]),
        b: Direction::new(best.0[2], best.0[3]),
        delta_d: best.1,
        best_seed,
        evaluations: obj.evaluations,
    })
}

/// Grid controls for the `Δ_C` quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Half-width of each outcome's integration window, in units of σ.
    pub window: f64,
    /// Initial spacing is `min(σ * spacing_per_sigma, max_spacing)`.
    pub spacing_per_sigma: f64,
    pub max_spacing: f64,
    /// Accept once halving the spacing moves the result by less than this.
    pub refine_tol: f64,
    /// Consecutive Richardson extrapolants must agree to this.
    pub extrapolation_tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            window: 6.0,
            spacing_per_sigma: 0.125,
            max_spacing: 0.25,
            refine_tol: 1e-4,
            extrapolation_tol: 1e-8,
            max_refinements: 6,
        }
    }
}

/// Trapezoid grid covering `[o - w, o + w]` for every outcome `o`, with
/// overlapping windows merged into uniformly spaced segments.
#[derive(Debug, Clone)]
pub(crate) struct AxisGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `(first node, last node, spacing)` per segment.
    segments: Vec<(usize, usize, f64)>,
}

impl AxisGrid {
    pub fn new(outcomes: &[f64], half_width: f64, spacing: f64) -> Self {
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        for &o in outcomes {
            let (lo, hi) = (o - half_width, o + half_width);
            match intervals.last_mut() {
                Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
                _ => intervals.push((lo, hi)),
            }
        }
        let mut grid = AxisGrid {
            nodes: Vec::new(),
            weights: Vec::new(),
            segments: Vec::new(),
        };
        for (lo, hi) in intervals {
            let n = ((hi - lo) / spacing).ceil().max(1.0) as usize;
            let h = (hi - lo) / n as f64;
            let first = grid.nodes.len();
            for k in 0..=n {
                grid.nodes.push(lo + h * k as f64);
                grid.weights.push(if k == 0 || k == n { 0.5 * h } else { h });
            }
            grid.segments.push((first, first + n, h));
        }
        grid
    }

    /// `(left node, spacing)` for every panel between adjacent nodes.
    fn panels(&self) -> Vec<(usize, f64)> {
        self.segments
            .iter()
            .flat_map(|&(first, last, h)| (first..last).map(move |k| (k, h)))
            .collect()
    }
}

/// Exact `∫|L|` over a triangle of area `area` for the linear `L` taking
/// values `a`, `b`, `c` at the vertices.
fn abs_linear_triangle(area: f64, a: f64, b: f64, c: f64) -> f64 {
    let mean = (a + b + c) / 3.0;
    let pos = (a > 0.0) as u8 + (b > 0.0) as u8 + (c > 0.0) as u8;
    let neg = (a < 0.0) as u8 + (b < 0.0) as u8 + (c < 0.0) as u8;
    if pos == 0 || neg == 0 {
        return area * mean.abs();
    }
    // One vertex has the sign the other two lack; its corner is cut off
    // where L vanishes on the two adjacent edges.
    let (lone, p, q) = if (a > 0.0) == (pos == 1) && a != 0.0 {
        (a, b, c)
    } else if (b > 0.0) == (pos == 1) && b != 0.0 {
        (b, a, c)
    } else {
        (c, a, b)
    };
    let corner = area * (lone / (lone - p)) * (lone / (lone - q)) * lone / 3.0;
    lone.signum() * (2.0 * corner - area * mean)
}

pub(crate) fn gaussian_matrix(nodes: &[f64], outcomes: &[f64], sigma: f64) -> DMatrix<f64> {
    let norm = 1.0 / (2.0 * PI * sigma * sigma).sqrt();
    DMatrix::from_fn(nodes.len(), outcomes.len(), |x, k| {
        norm * (-(nodes[x] - outcomes[k]).powi(2) / (2.0 * sigma * sigma)).exp()
    })
}

fn delta_c_at_spacing(jd: &JointDistribution, diff: &DMatrix<f64>, sigma: f64, quad: &QuadratureSpec, h: f64) -> f64 {
    let (oa, ob) = (jd.outcomes_a(), jd.outcomes_b());
    let xa = AxisGrid::new(&oa, quad.window * sigma, h);
    let xb = AxisGrid::new(&ob, quad.window * sigma, h);
    let ga = gaussian_matrix(&xa.nodes, &oa, sigma);
    let gb = gaussian_matrix(&xb.nodes, &ob, sigma);
    // Two columns of the smoothed difference at a time keep memory linear.
    // Each grid cell is split into two triangles and |·| of the linear
    // interpolant is integrated exactly, so sign changes cost no accuracy.
    let left = &ga * diff;
    let column = |y: usize| &left * gb.row(y).transpose();
    let panels_a = xa.panels();
    let mut total = 0.0;
    let mut cached: Option<(usize, nalgebra::DVector<f64>)> = None;
    for (y, hy) in xb.panels() {
        let lower = match cached.take() {
            Some((k, v)) if k == y => v,
            _ => column(y),
        };
        let upper = column(y + 1);
        for &(x, hx) in &panels_a {
            let area = 0.5 * hx * hy;
            let (f00, f10, f01, f11) = (lower[x], lower[x + 1], upper[x], upper[x + 1]);
            total += abs_linear_triangle(area, f00, f10, f11) + abs_linear_triangle(area, f00, f11, f01);
        }
        cached = Some((y + 1, upper));
    }
    0.5 * total
}

/// Continuous CLM for Gaussian coarse-grained outcomes of width `sigma`.
///
/// Smoothing is linear, so the integrand is the smoothed difference
/// `P_AB - P_A P_B`. The integration domain is the union of `±window·σ`
/// windows around the outcomes.
pub fn delta_c(jd: &JointDistribution, sigma: f64, quad: &QuadratureSpec) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return invalid(format!("sigma must be positive, got {sigma}"));
    }
    let prod = jd.product_of_marginals();
    let diff = jd.probabilities() - prod.probabilities();
    let mut h = (sigma * quad.spacing_per_sigma).min(quad.max_spacing);
    let mut coarse = delta_c_at_spacing(jd, &diff, sigma, quad, h);
    let mut extrapolated = f64::NAN;
    let mut change = f64::INFINITY;
    for _ in 0..=quad.max_refinements {
        h /= 2.0;
        let fine = delta_c_at_spacing(jd, &diff, sigma, quad, h);
        // The panel rule is second order, so extrapolate each pair and
        // also require consecutive extrapolants to agree.
        let next = (4.0 * fine - coarse) / 3.0;
        change = (fine - coarse).abs();
        if change < quad.refine_tol && (next - extrapolated).abs() < quad.extrapolation_tol {
            return Ok(next.clamp(0.0, 1.0));
        }
        coarse = fine;
        extrapolated = next;
    }
    Err(ClmError::NonConvergence {
        what: "delta_c quadrature",
        iterations: quad.max_refinements + 1,
        residual: change,
    })
}

/// Convenience: `Δ_D` for a uniform setting on a dense state.
pub fn delta_d_dense(state: &PureState, setting: &MeasurementSetting) -> Result<f64> {
    Ok(delta_d(&joint_distribution_dense(state, setting)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statelib::{ghz, haar_random, neel_superposition, permutation_pair_state, w_like};
    use approx::assert_abs_diff_eq;
    use libm::erf;

    #[test]
    fn example_states_discrete() {
        for n in [4, 8, 12] {
            assert_abs_diff_eq!(delta_d_dense(&ghz(n).unwrap(), &MeasurementSetting::zz()).unwrap(), 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(delta_d_dense(&w_like(n).unwrap(), &MeasurementSetting::zz()).unwrap(), 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(
                delta_d_dense(&permutation_pair_state(n).unwrap(), &MeasurementSetting::zz()).unwrap(),
                0.0,
                epsilon = 1e-12
            );
            assert_abs_diff_eq!(
                delta_d_dense(&neel_superposition(n).unwrap(), &MeasurementSetting::xx()).unwrap(),
                0.5,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn schmidt_clm_simple_cases() {
        assert_abs_diff_eq!(schmidt_clm(&PureState::basis(6, 13).unwrap()).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(schmidt_clm(&ghz(8).unwrap()).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ghz4_bound_chain() {
        let s = ghz(4).unwrap();
        let jd = joint_distribution_dense(&s, &MeasurementSetting::zz()).unwrap();
        let b = bound_chain(&s, &jd).unwrap();
        assert_abs_diff_eq!(b.delta_d, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b.total_correlation, 0.75, epsilon = 1e-12);
        assert!(b.is_ordered(1e-9));
        let dense = BipartiteDensity::from_pure(&s).unwrap();
        assert_abs_diff_eq!(dense.total_correlation().unwrap(), b.total_correlation, epsilon = 1e-10);
    }

    #[test]
    fn pinsker_becomes_vacuous() {
        assert!(pinsker_bound(2.0 * LOG2_E + 0.1) > 1.0);
        assert!(fidelity_chain_bound(10.0) < 1.0);
    }

    #[test]
    fn example_three_closed_forms() {
        let (n, sigma) = (20, 2.0);
        let q = QuadratureSpec::default();
        let g = delta_c(&joint_distribution_dense(&ghz(n).unwrap(), &MeasurementSetting::zz()).unwrap(), sigma, &q).unwrap();
        let w = delta_c(&joint_distribution_dense(&w_like(n).unwrap(), &MeasurementSetting::zz()).unwrap(), sigma, &q).unwrap();
        let want_g = erf(n as f64 / (4.0 * 2f64.sqrt() * sigma)).powi(2) / 2.0;
        let want_w = erf(1.0 / (2.0 * 2f64.sqrt() * sigma)).powi(2) / 2.0;
        assert_abs_diff_eq!(g, want_g, epsilon = 1e-7);
        assert_abs_diff_eq!(w, want_w, epsilon = 1e-7);
    }

    #[test]
    fn tiny_sigma_recovers_discrete() {
        let jd = joint_distribution_dense(&haar_random(8, 3).unwrap(), &MeasurementSetting::zz()).unwrap();
        let dc = delta_c(&jd, 1e-3, &QuadratureSpec::default()).unwrap();
        assert_abs_diff_eq!(dc, delta_d(&jd), epsilon = 1e-6);
    }

    #[test]
    fn sigma_must_be_positive() {
        let jd = joint_distribution_dense(&ghz(4).unwrap(), &MeasurementSetting::zz()).unwrap();
        assert!(delta_c(&jd, 0.0, &QuadratureSpec::default()).is_err());
        assert!(delta_c(&jd, -1.0, &QuadratureSpec::default()).is_err());
    }

    #[test]
    fn optimizer_finds_ghz_optimum() {
        let r = optimize_directions(&ghz(8).unwrap(), &OptimizerConfig::default()).unwrap();
        assert!(r.delta_d >= 0.5 - 1e-12);
        assert!(r.delta_d >= r.best_seed);
        let p = optimize_directions(&PureState::basis(6, 5).unwrap(), &OptimizerConfig::default()).unwrap();
        assert!(p.delta_d < 1e-12);
    }
}
