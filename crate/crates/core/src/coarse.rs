//! Finite-resolution measurements: Gaussian-smoothed outcomes, the
//! disturbance they cause, the bounds linking `Δ_C` to variances and
//! macroscopicity, and Bell-CHSH tests with dichotomized observables.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clm::{delta_c, gaussian_matrix, AxisGrid, QuadratureSpec};
use crate::error::{invalid, Result};
use crate::macroscopicity::{half_variances_from_tensor, CovarianceTensor};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::povm::{joint_distribution_dense, Direction, JointDistribution, MeasurementSetting};
use crate::statecore::PureState;

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return invalid(format!("sigma must be positive and finite, got {sigma}"));
    }
    Ok(())
}

/// Gaussian smoothing `p^σ(x, i)` of an outcome label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingKernel {
    sigma: f64,
}

impl SmoothingKernel {
    pub fn new(sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn density(&self, x: f64, i: f64) -> f64 {
        (-(x - i).powi(2) / (2.0 * self.sigma * self.sigma)).exp() / (2.0 * PI * self.sigma * self.sigma).sqrt()
    }
}

/// Smoothed joint density `P_AB(x, y)` and marginals sampled on a grid.
#[derive(Debug, Clone)]
pub struct SmoothedJoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub weights_x: Vec<f64>,
    pub weights_y: Vec<f64>,
    pub joint: DMatrix<f64>,
    pub marginal_a: Vec<f64>,
    pub marginal_b: Vec<f64>,
}

impl SmoothedJoint {
    /// Trapezoid integral of the joint density.
    pub fn total(&self) -> f64 {
        let mut t = 0.0;
        for (c, wy) in self.weights_y.iter().enumerate() {
            for (r, wx) in self.weights_x.iter().enumerate() {
                t += wx * wy * self.joint[(r, c)];
            }
        }
        t
    }
}

/// Samples the smoothed distributions on `±6σ` windows around the outcomes
/// with the given node spacing.
pub fn smoothed_joint(jd: &JointDistribution, kernel: &SmoothingKernel, spacing: f64) -> Result<SmoothedJoint> {
    if !(spacing > 0.0) {
        return invalid("grid spacing must be positive");
    }
    let sigma = kernel.sigma;
    let (oa, ob) = (jd.outcomes_a(), jd.outcomes_b());
    let gx = AxisGrid::new(&oa, 6.0 * sigma, spacing);
    let gy = AxisGrid::new(&ob, 6.0 * sigma, spacing);
    let ga = gaussian_matrix(&gx.nodes, &oa, sigma);
    let gb = gaussian_matrix(&gy.nodes, &ob, sigma);
    let joint = &ga * jd.probabilities() * gb.transpose();
    let (pa, pb) = jd.marginals();
    let marginal_a = (&ga * nalgebra::DVector::from_vec(pa)).iter().copied().collect();
    let marginal_b = (&gb * nalgebra::DVector::from_vec(pb)).iter().copied().collect();
    Ok(SmoothedJoint {
        x: gx.nodes,
        y: gy.nodes,
        weights_x: gx.weights,
        weights_y: gy.weights,
        joint,
        marginal_a,
        marginal_b,
    })
}

/// `F² = <ψ|ρ'|ψ>` after both parties apply the smoothed Kraus operators:
/// `Σ exp(-((i-i')² + (j-j')²)/(8σ²)) P(i,j) P(i',j')`.
pub fn fidelity_sq_from_distribution(jd: &JointDistribution, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    let kernel = |o: &[f64]| {
        DMatrix::from_fn(o.len(), o.len(), |r, c| (-(o[r] - o[c]).powi(2) / (8.0 * sigma * sigma)).exp())
    };
    let ka = kernel(&jd.outcomes_a());
    let kb = kernel(&jd.outcomes_b());
    let p = jd.probabilities();
    let smoothed = &ka * p * &kb;
    Ok(p.component_mul(&smoothed).sum().clamp(0.0, 1.0))
}

pub fn post_measurement_fidelity_sq(state: &PureState, setting: &MeasurementSetting, sigma: f64) -> Result<f64> {
    fidelity_sq_from_distribution(&joint_distribution_dense(state, setting)?, sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DisturbanceRecord {
    pub delta_c: f64,
    pub one_minus_f2: f64,
}

impl DisturbanceRecord {
    pub fn holds(&self, tol: f64) -> bool {
        self.delta_c <= self.one_minus_f2 + tol
    }
}

/// Both sides of `Δ_C ≤ 1 - F²`.
pub fn theorem4_gap(state: &PureState, setting: &MeasurementSetting, sigma: f64) -> Result<DisturbanceRecord> {
    let jd = joint_distribution_dense(state, setting)?;
    Ok(DisturbanceRecord {
        delta_c: delta_c(&jd, sigma, &QuadratureSpec::default())?,
        one_minus_f2: 1.0 - fidelity_sq_from_distribution(&jd, sigma)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct VarianceRecord {
    pub f2: f64,
    pub variance_bound: f64,
    pub v_a: f64,
    pub v_b: f64,
}

impl VarianceRecord {
    pub fn holds(&self, tol: f64) -> bool {
        self.f2 >= self.variance_bound - tol
    }
}

/// Both sides of `F² ≥ exp(-(V_A + V_B)/(4σ²))`.
pub fn theorem5_gap(state: &PureState, setting: &MeasurementSetting, sigma: f64) -> Result<VarianceRecord> {
    check_sigma(sigma)?;
    let k = CovarianceTensor::new(state)?;
    let (v_a, v_b) = half_variances_from_tensor(&k, state, setting)?;
    Ok(VarianceRecord {
        f2: post_measurement_fidelity_sq(state, setting, sigma)?,
        variance_bound: (-(v_a + v_b) / (4.0 * sigma * sigma)).exp(),
        v_a,
        v_b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MacroBoundRecord {
    pub delta_c: f64,
    /// `1 - exp(-M / (16σ²))` with the relaxation upper bound for `M`.
    pub bound: f64,
    pub m_upper: f64,
}

impl MacroBoundRecord {
    pub fn holds(&self, tol: f64) -> bool {
        self.delta_c <= self.bound + tol
    }
}

pub fn macro_bound(m: f64, sigma: f64) -> f64 {
    1.0 - (-m / (16.0 * sigma * sigma)).exp()
}

pub fn macro_bound_gap(state: &PureState, setting: &MeasurementSetting, sigma: f64) -> Result<MacroBoundRecord> {
    let m_upper = CovarianceTensor::new(state)?.relaxation_bound();
    let jd = joint_distribution_dense(state, setting)?;
    Ok(MacroBoundRecord {
        delta_c: delta_c(&jd, sigma, &QuadratureSpec::default())?,
        bound: macro_bound(m_upper, sigma),
        m_upper,
    })
}

/// The whole chain `Δ_C ≤ 1-F² ≤ 1-exp(-(V_A+V_B)/4σ²) ≤ 1-exp(-M/16σ²)`
/// for one state, setting and resolution.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CoarseChain {
    pub sigma: f64,
    pub delta_c: f64,
    pub one_minus_f2: f64,
    pub variance_bound: f64,
    pub macro_bound: f64,
    pub m_upper: f64,
}

impl CoarseChain {
    pub fn violations(&self, tol: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.delta_c > self.one_minus_f2 + tol {
            out.push("delta_c > 1 - F^2");
        }
        if self.one_minus_f2 > self.variance_bound + tol {
            out.push("1 - F^2 > variance bound");
        }
        if self.variance_bound > self.macro_bound + tol {
            out.push("variance bound > macroscopicity bound");
        }
        out
    }
}

/// Evaluates the chain at several resolutions, sharing the statistics and
/// correlation tensor.
pub fn coarse_chain(state: &PureState, setting: &MeasurementSetting, sigmas: &[f64]) -> Result<Vec<CoarseChain>> {
    let jd = joint_distribution_dense(state, setting)?;
    let k = CovarianceTensor::new(state)?;
    let (v_a, v_b) = half_variances_from_tensor(&k, state, setting)?;
    let m_upper = k.relaxation_bound();
    sigmas
        .iter()
        .map(|&sigma| {
            Ok(CoarseChain {
                sigma,
                delta_c: delta_c(&jd, sigma, &QuadratureSpec::default())?,
                one_minus_f2: 1.0 - fidelity_sq_from_distribution(&jd, sigma)?,
                variance_bound: 1.0 - (-(v_a + v_b) / (4.0 * sigma * sigma)).exp(),
                macro_bound: macro_bound(m_upper, sigma),
                m_upper,
            })
        })
        .collect()
}

/// Dichotomization `f(x) = +1` for `x >= threshold`, `-1` below.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignRule {
    pub threshold: f64,
}

impl Default for SignRule {
    fn default() -> Self {
        Self { threshold: 0.0 }
    }
}

/// `c_i = ∫ f(x) p^σ(x, i) dx = erf((i - t)/(√2 σ))` for outcomes `i`.
pub fn dichotomized_coefficients(outcomes: &[f64], sigma: f64, rule: SignRule) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    Ok(outcomes
        .iter()
        .map(|&i| libm::erf((i - rule.threshold) / (SQRT_2 * sigma)).clamp(-1.0, 1.0))
        .collect())
}

/// Coefficients for a half chain of `n_half` sites.
pub fn half_chain_coefficients(n_half: usize, sigma: f64, rule: SignRule) -> Result<Vec<f64>> {
    let outcomes: Vec<f64> = (0..=n_half).map(|r| r as f64 - n_half as f64 / 2.0).collect();
    dichotomized_coefficients(&outcomes, sigma, rule)
}

/// Directions `a, a'` for A and `b, b'` for B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshSettings {
    pub a: Direction,
    pub a_prime: Direction,
    pub b: Direction,
    pub b_prime: Direction,
}

impl ChshSettings {
    fn from_angles(x: &[f64]) -> Self {
        Self {
            a: Direction::new(x[0], x[1]),
            a_prime: Direction::new(x[2], x[3]),
            b: Direction::new(x[4], x[5]),
            b_prime: Direction::new(x[6], x[7]),
        }
    }

    fn pairs(&self) -> [(Direction, Direction); 4] {
        [(self.a, self.b), (self.a, self.b_prime), (self.a_prime, self.b_prime), (self.a_prime, self.b)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ChshRecord {
    pub b_value: f64,
    /// `E(a,b), E(a,b'), E(a',b'), E(a',b)`.
    pub correlations: [f64; 4],
    /// The same with the product of marginals in place of the joint.
    pub product_correlations: [f64; 4],
}

impl ChshRecord {
    pub fn product_b_value(&self) -> f64 {
        let e = self.product_correlations;
        (e[0] - e[1]).abs() + (e[2] + e[3]).abs()
    }
}

fn correlation(jd: &JointDistribution, ca: &[f64], cb: &[f64]) -> (f64, f64) {
    let p = jd.probabilities();
    let (pa, pb) = jd.marginals();
    let mut e = 0.0;
    for r in 0..ca.len() {
        for s in 0..cb.len() {
            e += ca[r] * cb[s] * p[(r, s)];
        }
    }
    let ma: f64 = ca.iter().zip(&pa).map(|(c, p)| c * p).sum();
    let mb: f64 = cb.iter().zip(&pb).map(|(c, p)| c * p).sum();
    (e, ma * mb)
}

/// `B = |E(a,b) - E(a,b')| + |E(a',b') + E(a',b)|` with
/// `E = Σ c_i c_j P(i,j)`.
pub fn chsh(state: &PureState, settings: &ChshSettings, sigma: f64, rule: SignRule) -> Result<ChshRecord> {
    let ca = half_chain_coefficients(state.sites_a().len(), sigma, rule)?;
    let cb = half_chain_coefficients(state.sites_b().len(), sigma, rule)?;
    let mut correlations = [0.0; 4];
    let mut product_correlations = [0.0; 4];
    for (k, (a, b)) in settings.pairs().into_iter().enumerate() {
        let jd = joint_distribution_dense(state, &MeasurementSetting::uniform(a, b))?;
        (correlations[k], product_correlations[k]) = correlation(&jd, &ca, &cb);
    }
    let e = correlations;
    Ok(ChshRecord {
        b_value: (e[0] - e[1]).abs() + (e[2] + e[3]).abs(),
        correlations,
        product_correlations,
    })
}

/// `Δ_C` of each of the four setting pairs, in [`ChshRecord`] order.
pub fn chsh_delta_c(state: &PureState, settings: &ChshSettings, sigma: f64) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (k, (a, b)) in settings.pairs().into_iter().enumerate() {
        let jd = joint_distribution_dense(state, &MeasurementSetting::uniform(a, b))?;
        out[k] = delta_c(&jd, sigma, &QuadratureSpec::default())?;
    }
    Ok(out)
}

/// `2 + 8(1 - exp(-M/(16σ²)))`.
pub fn chsh_macro_bound(m: f64, sigma: f64) -> f64 {
    2.0 + 8.0 * macro_bound(m, sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChshOptimum {
    pub best_b: f64,
    pub settings: ChshSettings,
    pub record: ChshRecord,
    pub m_upper: f64,
    pub chsh_macro_bound: f64,
}

impl ChshOptimum {
    pub fn respects_bound(&self, tol: f64) -> bool {
        self.best_b <= self.chsh_macro_bound + tol
    }
}

/// Multi-start simplex search over the eight setting angles.
pub fn chsh_optimize(state: &PureState, sigma: f64, restarts: usize, seed: u64) -> Result<ChshOptimum> {
    check_sigma(sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = PI / 2.0;
    // The textbook qubit optimum in the x-z plane, then random starts.
    let mut starts = vec![vec![0.0, 0.0, h, 0.0, h / 2.0, 0.0, 3.0 * h / 2.0, 0.0]];
    while starts.len() < restarts.max(1) {
        starts.push((0..8).map(|k| if k % 2 == 0 { rng.random_range(0.0..PI) } else { rng.random_range(-PI..PI) }).collect());
    }
    let opts = NelderMeadOptions {
        initial_step: 0.3,
        f_tol: 1e-12,
        x_tol: 1e-9,
        max_evals: 4000,
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in starts {
        let m = nelder_mead(
            |x| chsh(state, &ChshSettings::from_angles(x), sigma, SignRule::default()).map_or(f64::INFINITY, |r| -r.b_value),
            &start,
            &opts,
        );
        if best.as_ref().is_none_or(|b| -m.value > b.0) {
            best = Some((-m.value, m.x));
        }
    }
    let (_, x) = best.expect("at least one start");
    let settings = ChshSettings::from_angles(&x);
    let record = chsh(state, &settings, sigma, SignRule::default())?;
    let m_upper = CovarianceTensor::new(state)?.relaxation_bound();
    Ok(ChshOptimum {
        best_b: record.b_value,
        settings,
        record,
        m_upper,
        chsh_macro_bound: chsh_macro_bound(m_upper, sigma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statelib::ghz;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ghz_fidelity_closed_form() {
        for (n, sigma) in [(8usize, 1.0), (8, 2.5), (12, 0.7)] {
            let f2 = post_measurement_fidelity_sq(&ghz(n).unwrap(), &MeasurementSetting::zz(), sigma).unwrap();
            let nf = n as f64;
            assert_abs_diff_eq!(f2, 0.5 * (1.0 + (-nf * nf / (16.0 * sigma * sigma)).exp()), epsilon = 1e-12);
        }
    }

    #[test]
    fn single_outcome_states_are_undisturbed() {
        let psi = PureState::basis(6, 0b000111).unwrap();
        for sigma in [0.1, 1.0, 10.0] {
            let f2 = post_measurement_fidelity_sq(&psi, &MeasurementSetting::zz(), sigma).unwrap();
            assert_abs_diff_eq!(f2, 1.0, epsilon = 1e-12);
            let t5 = theorem5_gap(&psi, &MeasurementSetting::zz(), sigma).unwrap();
            assert_abs_diff_eq!(t5.variance_bound, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn broad_kernel_means_no_disturbance() {
        let f2 = post_measurement_fidelity_sq(&ghz(8).unwrap(), &MeasurementSetting::zz(), 1e4).unwrap();
        assert_abs_diff_eq!(f2, 1.0, epsilon = 1e-7);
    }

    #[test]
    fn coefficients() {
        let c = dichotomized_coefficients(&[0.0, 5.0, -5.0], 2.0, SignRule::default()).unwrap();
        assert_eq!(c[0], 0.0);
        assert_abs_diff_eq!(c[1], 0.987_580_669_348_447_7, epsilon = 1e-12);
        assert_abs_diff_eq!(c[2], -c[1], epsilon = 1e-15);
        let sharp = dichotomized_coefficients(&[-1.5, 0.5, 2.0], 1e-4, SignRule::default()).unwrap();
        assert_eq!(sharp, vec![-1.0, 1.0, 1.0]);
        assert!(dichotomized_coefficients(&[1.0], 0.0, SignRule::default()).is_err());
    }

    #[test]
    fn smoothed_joint_is_normalized() {
        let jd = joint_distribution_dense(&ghz(8).unwrap(), &MeasurementSetting::zz()).unwrap();
        let s = smoothed_joint(&jd, &SmoothingKernel::new(0.8).unwrap(), 0.05).unwrap();
        assert_abs_diff_eq!(s.total(), 1.0, epsilon = 1e-8);
        // Peaks sit at (±2, ±2).
        let (r, c) = s.joint.iamax_full();
        assert_abs_diff_eq!(s.x[r].abs(), 2.0, epsilon = 0.05);
        assert_abs_diff_eq!(s.y[c].abs(), 2.0, epsilon = 0.05);
    }

    #[test]
    fn coarse_ghz_respects_disturbance_bound() {
        let t = theorem4_gap(&ghz(20).unwrap(), &MeasurementSetting::zz(), 2.0).unwrap();
        assert!(t.holds(1e-6));
        assert_abs_diff_eq!(t.delta_c, 0.48766, epsilon = 1e-5);
    }
}
