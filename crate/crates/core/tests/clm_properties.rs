use approx::assert_abs_diff_eq;
use clmlab::clm::{bound_chain, delta_c, delta_d, schmidt_clm, QuadratureSpec};
use clmlab::povm::{
    joint_distribution_dense, joint_distribution_symmetric, rotate_all_sites, Direction, MeasurementSetting,
};
use clmlab::statecore::{purity, reduced_density, PureState, Subsystem, C64};
use clmlab::statelib::{
    ghz, haar_random, haar_vector, one_axis_twist, symmetric_to_dense, w_like, coherent_plus, SqueezingParams,
    SymmetricState,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fibonacci_sphere(n: usize) -> Vec<Direction> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            Direction::new(z.acos(), golden * k as f64)
        })
        .collect()
}

fn random_symmetric(n: usize, seed: u64) -> SymmetricState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SymmetricState::new(n, haar_vector(n + 1, &mut rng)).unwrap()
}

// Rotation of `v` by `omega` about unit axis `k` (Rodrigues).
fn rotate_vector(v: [f64; 3], k: [f64; 3], omega: f64) -> [f64; 3] {
    let (s, c) = omega.sin_cos();
    let dot = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
    let cross = [k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]];
    [0, 1, 2].map(|i| v[i] * c + cross[i] * s + k[i] * dot * (1.0 - c))
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    v.map(|x| x / n)
}

#[test]
fn dense_and_symmetric_paths_agree_on_sphere_grid() {
    let mut states = vec![SymmetricState::ghz(8).unwrap(), SymmetricState::dicke(10, 4).unwrap(), coherent_plus(6).unwrap()];
    states.push(one_axis_twist(&coherent_plus(12).unwrap(), &SqueezingParams::aligned(12, 0.3)).unwrap());
    states.extend((0..3).map(|s| random_symmetric(2 * (s as usize + 2), 40 + s)));
    for sym in &states {
        let dense = symmetric_to_dense(sym).unwrap();
        for dir in fibonacci_sphere(20) {
            let fast = joint_distribution_symmetric(sym, dir).unwrap();
            let slow = joint_distribution_dense(&dense, &MeasurementSetting::uniform(dir, dir)).unwrap();
            let gap = (fast.probabilities() - slow.probabilities()).amax();
            assert!(gap < 1e-10, "N={} dir={dir:?} gap={gap}", sym.n_sites());
        }
    }
}

#[test]
fn delta_c_never_exceeds_delta_d_and_decreases_with_sigma() {
    let sigmas = [0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
    let twisted = symmetric_to_dense(&one_axis_twist(&coherent_plus(12).unwrap(), &SqueezingParams::aligned(12, 0.1)).unwrap()).unwrap();
    let states = [ghz(8).unwrap(), w_like(8).unwrap(), twisted];
    for state in &states {
        let jd = joint_distribution_dense(state, &MeasurementSetting::zz()).unwrap();
        let dd = delta_d(&jd);
        let mut previous = f64::INFINITY;
        for &sigma in &sigmas {
            let dc = delta_c(&jd, sigma, &QuadratureSpec::default()).unwrap();
            assert!(dc <= dd + 1e-6, "sigma={sigma}: {dc} > {dd}");
            assert!(dc <= previous + 1e-9, "sigma={sigma}: {dc} after {previous}");
            previous = dc;
        }
    }
}

#[test]
fn schmidt_clm_on_ghz_and_products() {
    let product = PureState::product(&[[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]; 6]).unwrap();
    assert_abs_diff_eq!(schmidt_clm(&product).unwrap(), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(schmidt_clm(&ghz(10).unwrap()).unwrap(), 0.5, epsilon = 1e-12);
}

fn direction() -> impl Strategy<Value = Direction> {
    (0.0..std::f64::consts::PI, -std::f64::consts::PI..std::f64::consts::PI).prop_map(|(t, p)| Direction::new(t, p))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotation_covariance(seed in 0u64..1000, a in direction(), b in direction(),
                           axis in prop::array::uniform3(-1.0f64..1.0), omega in -3.0f64..3.0) {
        prop_assume!(axis.iter().map(|x| x * x).sum::<f64>() > 1e-2);
        let k = normalize(axis);
        let psi = haar_random(6, seed).unwrap();
        let rotated = rotate_all_sites(&psi, k, omega).unwrap();
        let ra = Direction::from_vector(normalize(rotate_vector(a.vector(), k, omega))).unwrap();
        let rb = Direction::from_vector(normalize(rotate_vector(b.vector(), k, omega))).unwrap();
        let before = joint_distribution_dense(&psi, &MeasurementSetting::uniform(a, b)).unwrap();
        let after = joint_distribution_dense(&rotated, &MeasurementSetting::uniform(ra, rb)).unwrap();
        prop_assert!((before.probabilities() - after.probabilities()).amax() < 1e-10);
    }

    #[test]
    fn distributions_are_normalized_and_delta_d_bounded(seed in 0u64..10_000, n in prop::sample::select(vec![2usize, 4, 6, 8]),
                                                       a in direction(), b in direction()) {
        let jd = joint_distribution_dense(&haar_random(n, seed).unwrap(), &MeasurementSetting::uniform(a, b)).unwrap();
        prop_assert!(jd.probabilities().iter().all(|&p| p >= 0.0));
        prop_assert!((jd.probabilities().sum() - 1.0).abs() < 1e-10);
        let d = delta_d(&jd);
        prop_assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn product_states_have_zero_clm(angles in prop::collection::vec((0.0f64..3.2, -3.2f64..3.2), 6),
                                    a in direction(), b in direction()) {
        let sites: Vec<[C64; 2]> = angles
            .iter()
            .map(|&(t, p)| [C64::new((t / 2.0).cos(), 0.0), C64::from_polar((t / 2.0).sin(), p)])
            .collect();
        let psi = PureState::product(&sites).unwrap();
        let jd = joint_distribution_dense(&psi, &MeasurementSetting::uniform(a, b)).unwrap();
        prop_assert!(delta_d(&jd) < 1e-12);
    }

    #[test]
    fn theorem_one_identity(seed in 0u64..10_000, n in prop::sample::select(vec![2usize, 4, 6, 8, 10, 12])) {
        let psi = haar_random(n, seed).unwrap();
        let p = purity(&reduced_density(&psi, Subsystem::A).unwrap());
        prop_assert!((schmidt_clm(&psi).unwrap() - (1.0 - p)).abs() < 1e-10);
    }

    #[test]
    fn bound_chain_orders_on_random_states(seed in 0u64..10_000, n in prop::sample::select(vec![2usize, 4, 6, 8, 10]),
                                           a in direction(), b in direction()) {
        let psi = haar_random(n, seed).unwrap();
        let jd = joint_distribution_dense(&psi, &MeasurementSetting::uniform(a, b)).unwrap();
        let bounds = bound_chain(&psi, &jd).unwrap();
        prop_assert!(bounds.is_ordered(1e-9), "{bounds:?}");
    }

    #[test]
    fn smoothing_contracts(seed in 0u64..10_000, sigma in 0.2f64..6.0) {
        let jd = joint_distribution_dense(&haar_random(8, seed).unwrap(), &MeasurementSetting::zz()).unwrap();
        let dc = delta_c(&jd, sigma, &QuadratureSpec::default()).unwrap();
        prop_assert!(dc <= delta_d(&jd) + 1e-6);
    }
}
