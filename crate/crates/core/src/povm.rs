//! Outcome statistics of local collective-spin measurements.
//!
//! Subsystem A measures `S_A(α) = Σ_{i∈A} α·σ_i / 2` and B measures
//! `S_B(β)`. Outcomes are half-chain magnetizations `i = r - |A|/2`, where
//! `r` counts spins found up along the measurement axis. The degenerate
//! projectors are never built: each site is rotated so its measurement axis
//! becomes `z`, and `|amplitude|^2` is binned by the popcount of each half.

use nalgebra::DMatrix;

use crate::error::{invalid, ClmError, Result};
use crate::statecore::{PureState, C64, MAX_DENSE_SITES};
use crate::statelib::{dicke_split_coefficients, SymmetricState};

const UNIT_TOL: f64 = 1e-12;

/// Unit vector parametrized by polar angle `theta` and azimuth `phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    pub const fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn x() -> Self {
        Self::new(std::f64::consts::FRAC_PI_2, 0.0)
    }

    pub fn y() -> Self {
        Self::new(std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2)
    }

    pub fn z() -> Self {
        Self::new(0.0, 0.0)
    }

    /// Accepts a Cartesian vector that must already have unit length.
    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return invalid(format!("direction {v:?} is not a unit vector (norm {norm})"));
        }
        Ok(Self::new(v[2].clamp(-1.0, 1.0).acos(), v[1].atan2(v[0])))
    }

    pub fn vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Rows of `U^†` where `U = exp(-i φ σ_z/2) exp(-i θ σ_y/2)` maps `z` to
    /// this direction; entries act on `(up, down)` amplitudes.
    pub(crate) fn to_z_frame(&self) -> [[C64; 2]; 2] {
        let (s, c) = (self.theta / 2.0).sin_cos();
        let plus = C64::from_polar(1.0, self.phi / 2.0);
        let minus = plus.conj();
        [[plus * c, minus * s], [-plus * s, minus * c]]
    }
}

/// Directions for one party: a single axis for every site, or one per site.
#[derive(Debug, Clone, PartialEq)]
pub enum PartyAxes {
    Uniform(Direction),
    PerSite(Vec<Direction>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetting {
    pub a: PartyAxes,
    pub b: PartyAxes,
}

impl MeasurementSetting {
    pub fn uniform(a: Direction, b: Direction) -> Self {
        Self {
            a: PartyAxes::Uniform(a),
            b: PartyAxes::Uniform(b),
        }
    }

    pub fn per_site(a: Vec<Direction>, b: Vec<Direction>) -> Self {
        Self {
            a: PartyAxes::PerSite(a),
            b: PartyAxes::PerSite(b),
        }
    }

    pub fn zz() -> Self {
        Self::uniform(Direction::z(), Direction::z())
    }

    pub fn xx() -> Self {
        Self::uniform(Direction::x(), Direction::x())
    }
}

/// Joint outcome distribution `P_AB(i, j)`, stored by up-spin counts
/// `(r, s)` with `i = r - n_a/2`, `j = s - n_b/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    n_a: usize,
    n_b: usize,
    p: DMatrix<f64>,
}

impl JointDistribution {
    pub fn new(n_a: usize, n_b: usize, mut p: DMatrix<f64>) -> Result<Self> {
        if p.nrows() != n_a + 1 || p.ncols() != n_b + 1 {
            return Err(ClmError::DimensionMismatch(p.nrows() * p.ncols(), (n_a + 1) * (n_b + 1)));
        }
        for v in p.iter_mut() {
            if *v < -1e-14 || !v.is_finite() {
                return invalid(format!("probability {v} is negative or not finite"));
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let total = p.sum();
        if (total - 1.0).abs() > 1e-10 {
            return invalid(format!("joint distribution sums to {total}"));
        }
        Ok(Self { n_a, n_b, p })
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn probabilities(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// `P_AB(r, s)` by up-spin counts.
    pub fn prob(&self, r: usize, s: usize) -> f64 {
        self.p[(r, s)]
    }

    /// `P_AB(i, j)` by outcome values; zero off the outcome lattice.
    pub fn prob_at(&self, i: f64, j: f64) -> f64 {
        let r = i + self.n_a as f64 / 2.0;
        let s = j + self.n_b as f64 / 2.0;
        if r < -1e-9 || s < -1e-9 || (r - r.round()).abs() > 1e-9 || (s - s.round()).abs() > 1e-9 {
            return 0.0;
        }
        let (r, s) = (r.round() as usize, s.round() as usize);
        if r > self.n_a || s > self.n_b {
            return 0.0;
        }
        self.p[(r, s)]
    }

    pub fn outcome_a(&self, r: usize) -> f64 {
        r as f64 - self.n_a as f64 / 2.0
    }

    pub fn outcome_b(&self, s: usize) -> f64 {
        s as f64 - self.n_b as f64 / 2.0
    }

    pub fn outcomes_a(&self) -> Vec<f64> {
        (0..=self.n_a).map(|r| self.outcome_a(r)).collect()
    }

    pub fn outcomes_b(&self) -> Vec<f64> {
        (0..=self.n_b).map(|s| self.outcome_b(s)).collect()
    }

    /// Row and column sums `(P_A, P_B)`.
    pub fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let pa = (0..=self.n_a).map(|r| self.p.row(r).sum()).collect();
        let pb = (0..=self.n_b).map(|s| self.p.column(s).sum()).collect();
        (pa, pb)
    }

    /// Product of the marginals as a distribution of the same shape.
    pub fn product_of_marginals(&self) -> JointDistribution {
        let (pa, pb) = self.marginals();
        let p = DMatrix::from_fn(self.n_a + 1, self.n_b + 1, |r, s| pa[r] * pb[s]);
        JointDistribution {
            n_a: self.n_a,
            n_b: self.n_b,
            p,
        }
    }

    /// `<i j> - <i><j>` under the joint distribution.
    pub fn covariance(&self) -> f64 {
        let (pa, pb) = self.marginals();
        let mean_a: f64 = pa.iter().enumerate().map(|(r, p)| p * self.outcome_a(r)).sum();
        let mean_b: f64 = pb.iter().enumerate().map(|(s, p)| p * self.outcome_b(s)).sum();
        let mut cross = 0.0;
        for r in 0..=self.n_a {
            for s in 0..=self.n_b {
                cross += self.p[(r, s)] * self.outcome_a(r) * self.outcome_b(s);
            }
        }
        cross - mean_a * mean_b
    }

    /// Variances of the two outcome labels.
    pub fn outcome_variances(&self) -> (f64, f64) {
        let (pa, pb) = self.marginals();
        let var = |p: &[f64], f: &dyn Fn(usize) -> f64| {
            let m: f64 = p.iter().enumerate().map(|(k, w)| w * f(k)).sum();
            p.iter().enumerate().map(|(k, w)| w * (f(k) - m).powi(2)).sum::<f64>()
        };
        (var(&pa, &|r| self.outcome_a(r)), var(&pb, &|s| self.outcome_b(s)))
    }
}

pub fn marginals(jd: &JointDistribution) -> (Vec<f64>, Vec<f64>) {
    jd.marginals()
}

fn axes_for(party: &PartyAxes, sites: &[usize], n_sites: usize) -> Result<Vec<(usize, Direction)>> {
    match party {
        PartyAxes::Uniform(d) => Ok(sites.iter().map(|&s| (s, *d)).collect()),
        PartyAxes::PerSite(list) => {
            if list.len() != sites.len() {
                return Err(ClmError::DimensionMismatch(list.len(), sites.len()));
            }
            if sites.iter().any(|&s| s >= n_sites) {
                return invalid("site outside chain");
            }
            Ok(sites.iter().copied().zip(list.iter().copied()).collect())
        }
    }
}

/// Rotates every site of `amps` into its measurement frame in place.
pub(crate) fn rotate_into_frames(amps: &mut [C64], frames: &[(usize, Direction)]) {
    for &(site, dir) in frames {
        if dir.theta == 0.0 && dir.phi == 0.0 {
            continue;
        }
        let u = dir.to_z_frame();
        let bit = 1usize << site;
        // Walk only indices with the bit clear; their partner has it set.
        let mut base = 0usize;
        while base < amps.len() {
            for x in base..base + bit {
                let (down, up) = (amps[x], amps[x | bit]);
                amps[x | bit] = u[0][0] * up + u[0][1] * down;
                amps[x] = u[1][0] * up + u[1][1] * down;
            }
            base += bit << 1;
        }
    }
}

/// Exact projective statistics of `S_A(α) ⊗ S_B(β)` on a dense state.
pub fn joint_distribution_dense(state: &PureState, setting: &MeasurementSetting) -> Result<JointDistribution> {
    let n = state.n_sites();
    if n > MAX_DENSE_SITES {
        return Err(ClmError::Capacity {
            what: "dense measurement",
            requested: n,
            limit: MAX_DENSE_SITES,
        });
    }
    let mut frames = axes_for(&setting.a, state.sites_a(), n)?;
    frames.extend(axes_for(&setting.b, state.sites_b(), n)?);
    let mut amps = state.amplitudes().to_vec();
    rotate_into_frames(&mut amps, &frames);
    Ok(bin_by_halves(state, &amps))
}

pub(crate) fn bin_by_halves(state: &PureState, amps: &[C64]) -> JointDistribution {
    let mask_a: usize = state.sites_a().iter().map(|s| 1usize << s).sum();
    let mask_b: usize = state.sites_b().iter().map(|s| 1usize << s).sum();
    let (n_a, n_b) = (state.sites_a().len(), state.sites_b().len());
    let mut p = DMatrix::zeros(n_a + 1, n_b + 1);
    for (x, a) in amps.iter().enumerate() {
        let r = (x & mask_a).count_ones() as usize;
        let s = (x & mask_b).count_ones() as usize;
        p[(r, s)] += a.norm_sqr();
    }
    // Rotations are unitary; renormalize away the last bits of rounding.
    let total = p.sum();
    p /= total;
    JointDistribution { n_a, n_b, p }
}

/// Statistics for a permutation-symmetric state measured along the same
/// axis on both halves, computed in the Dicke basis.
pub fn joint_distribution_symmetric(state: &SymmetricState, direction: Direction) -> Result<JointDistribution> {
    let n = state.n_sites();
    if !n.is_multiple_of(2) {
        return invalid("symmetric measurement needs an even number of sites");
    }
    // U^† = exp(i θ S_y) exp(i φ S_z)
    let rotated = state.rotate_z(-direction.phi);
    let rotated = if direction.theta == 0.0 {
        rotated
    } else {
        rotated.rotate_y(-direction.theta)?
    };
    let h = n / 2;
    let mut p = DMatrix::zeros(h + 1, h + 1);
    for (k, b) in rotated.amplitudes().iter().enumerate() {
        let w = b.norm_sqr();
        if w == 0.0 {
            continue;
        }
        for (r, c) in dicke_split_coefficients(n, k)?.iter().enumerate() {
            if *c != 0.0 {
                p[(r, k - r)] += w * c * c;
            }
        }
    }
    let total = p.sum();
    p /= total;
    JointDistribution::new(h, h, p)
}

/// Covariance `<S_A S_B> - <S_A><S_B>` of the measured outcomes.
pub fn correlation_function(state: &PureState, setting: &MeasurementSetting) -> Result<f64> {
    Ok(joint_distribution_dense(state, setting)?.covariance())
}

/// Applies the same single-qubit rotation `exp(-i ω n·σ/2)` to every site.
pub fn rotate_all_sites(state: &PureState, axis: [f64; 3], omega: f64) -> Result<PureState> {
    let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let n = [axis[0] / norm, axis[1] / norm, axis[2] / norm];
    let (s, c) = (omega / 2.0).sin_cos();
    let i = C64::new(0.0, 1.0);
    // (up, down) basis: c - i s (n_z σ_z + n_x σ_x + n_y σ_y)
    let u = [
        [C64::new(c, 0.0) - i * s * n[2], -i * s * C64::new(n[0], -n[1])],
        [-i * s * C64::new(n[0], n[1]), C64::new(c, 0.0) + i * s * n[2]],
    ];
    let mut amps = state.amplitudes().to_vec();
    for site in 0..state.n_sites() {
        let bit = 1usize << site;
        for x in 0..amps.len() {
            if x & bit == 0 {
                let (down, up) = (amps[x], amps[x | bit]);
                amps[x | bit] = u[0][0] * up + u[0][1] * down;
                amps[x] = u[1][0] * up + u[1][1] * down;
            }
        }
    }
    PureState::with_split(state.n_sites(), amps, state.sites_a().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statelib::{coherent_plus, ghz, neel_superposition, permutation_pair_state, w_like, binomial};
    use approx::assert_abs_diff_eq;

    #[test]
    fn ghz_zz_two_corners() {
        for n in [4, 8, 12] {
            let jd = joint_distribution_dense(&ghz(n).unwrap(), &MeasurementSetting::zz()).unwrap();
            let q = n as f64 / 4.0;
            assert_abs_diff_eq!(jd.prob_at(q, q), 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(jd.prob_at(-q, -q), 0.5, epsilon = 1e-12);
            let (pa, pb) = jd.marginals();
            assert_abs_diff_eq!(pa[0], 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(pa[n / 2], 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(pb.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn w_like_zz_adjacent_corners() {
        let n = 8;
        let jd = joint_distribution_dense(&w_like(n).unwrap(), &MeasurementSetting::zz()).unwrap();
        let q = n as f64 / 4.0;
        assert_abs_diff_eq!(jd.prob_at(q, q - 1.0), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(jd.prob_at(q - 1.0, q), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn neel_xx_closed_form() {
        for n in [4, 8, 12] {
            let jd = joint_distribution_dense(&neel_superposition(n).unwrap(), &MeasurementSetting::xx()).unwrap();
            let q = n as f64 / 4.0;
            for r in 0..=n / 2 {
                for s in 0..=n / 2 {
                    let (i, j) = (jd.outcome_a(r), jd.outcome_b(s));
                    let even = ((i + j + n as f64 / 2.0).round() as i64) % 2 == 0;
                    let want = if even {
                        binomial(n / 2, (i + q) as usize) * binomial(n / 2, (j + q) as usize) / 2f64.powi(n as i32 - 1)
                    } else {
                        0.0
                    };
                    assert_abs_diff_eq!(jd.prob(r, s), want, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn permutation_pair_zz_is_a_point_mass() {
        for n in [4, 8, 12] {
            let jd = joint_distribution_dense(&permutation_pair_state(n).unwrap(), &MeasurementSetting::zz()).unwrap();
            assert_abs_diff_eq!(jd.prob_at(0.0, 0.0), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn correlation_functions_of_example_states() {
        for n in [4, 8, 12, 16] {
            let nf = n as f64;
            let c0 = correlation_function(&ghz(n).unwrap(), &MeasurementSetting::zz()).unwrap();
            let c1 = correlation_function(&w_like(n).unwrap(), &MeasurementSetting::zz()).unwrap();
            assert_abs_diff_eq!(c0, nf * nf / 16.0, epsilon = 1e-10);
            assert_abs_diff_eq!(c1, -0.25, epsilon = 1e-10);
        }
        let prod = PureState::basis(6, 0b101100).unwrap();
        assert_abs_diff_eq!(correlation_function(&prod, &MeasurementSetting::xx()).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_path_for_coherent_state_is_product() {
        let jd = joint_distribution_symmetric(&coherent_plus(10).unwrap(), Direction::z()).unwrap();
        let prod = jd.product_of_marginals();
        assert!((jd.probabilities() - prod.probabilities()).amax() < 1e-14);
        let (pa, _) = jd.marginals();
        for (r, p) in pa.iter().enumerate() {
            assert_abs_diff_eq!(*p, binomial(5, r) / 32.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn direction_validation() {
        assert!(Direction::from_vector([1.0, 1.0, 0.0]).is_err());
        let d = Direction::from_vector([0.0, 1.0, 0.0]).unwrap();
        let v = d.vector();
        assert_abs_diff_eq!(v[1], 1.0, epsilon = 1e-15);
        let bad = MeasurementSetting::per_site(vec![Direction::z()], vec![Direction::z(); 2]);
        assert!(joint_distribution_dense(&ghz(4).unwrap(), &bad).is_err());
    }
}
