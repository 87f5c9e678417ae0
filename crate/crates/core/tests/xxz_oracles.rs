mod common;

use approx::assert_abs_diff_eq;
use common::{dense_hamiltonian, lowest_dense};
use clmlab::clm::delta_d;
use clmlab::povm::{joint_distribution_dense, MeasurementSetting};
use clmlab::statecore::{PureState, C64};
use clmlab::xxz::{apply_hamiltonian, ground_state, sweep_point, translate, SzSector, XxzParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vec(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..dim).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

#[test]
fn matvec_matches_explicit_matrix() {
    for (n, jz) in [(4, 0.3), (6, -1.7)] {
        let p = XxzParams::new(n, 0.8, jz).unwrap();
        let h = dense_hamiltonian(n, 0.8, jz);
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let v = random_vec(1 << n, &mut rng);
        let got = apply_hamiltonian(&p, &v).unwrap();
        for x in 0..1 << n {
            let want: C64 = (0..1 << n).map(|y| v[y] * h[(x, y)]).sum();
            assert!((got[x] - want).norm() < 1e-12);
        }
    }
}

#[test]
fn hamiltonian_is_hermitian() {
    let p = XxzParams::new(8, 1.0, 0.4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let u = random_vec(256, &mut rng);
        let v = random_vec(256, &mut rng);
        let hu = apply_hamiltonian(&p, &u).unwrap();
        let hv = apply_hamiltonian(&p, &v).unwrap();
        let uhv: C64 = u.iter().zip(&hv).map(|(a, b)| a.conj() * b).sum();
        let vhu: C64 = v.iter().zip(&hu).map(|(a, b)| a.conj() * b).sum();
        assert!((uhv - vhu.conj()).norm() < 1e-10);
    }
}

#[test]
fn sector_is_closed_under_h() {
    let n = 10;
    let p = XxzParams::new(n, 1.0, 0.6).unwrap();
    let sector = SzSector::new(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let v: Vec<f64> = (0..sector.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let full = apply_hamiltonian(&p, &sector.embed(&v)).unwrap();
    for (x, a) in full.iter().enumerate() {
        if x.count_ones() as usize != n / 2 {
            assert_eq!(*a, C64::new(0.0, 0.0));
        }
    }
    let mut out = vec![0.0; sector.dim()];
    sector.apply(&p, &v, &mut out);
    for (k, &x) in sector.states().iter().enumerate() {
        assert!((full[x].re - out[k]).abs() < 1e-12);
    }
}

#[test]
fn lanczos_matches_dense_diagonalization() {
    for n in [4, 6, 8, 10] {
        for ratio in [-0.9, -0.3, 0.0, 0.5, 1.0, 2.5] {
            let gs = ground_state(&XxzParams::with_ratio(n, ratio).unwrap()).unwrap();
            let want = lowest_dense(n, 1.0, ratio);
            assert!((gs.energy - want).abs() < 1e-9, "N={n} ratio={ratio}: {} vs {want}", gs.energy);
            assert!(gs.residual <= 1e-8);
        }
    }
}

#[test]
fn ground_state_is_translation_invariant() {
    for n in [8, 12, 16] {
        for ratio in [-0.5, 0.0, 1.0, 3.0] {
            let gs = ground_state(&XxzParams::with_ratio(n, ratio).unwrap()).unwrap();
            let shifted = translate(&gs.state).unwrap();
            let gap = shifted
                .amplitudes()
                .iter()
                .zip(gs.state.amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(gap < 1e-8, "N={n} ratio={ratio}: {gap}");
        }
    }
}

#[test]
fn ground_state_is_deterministic() {
    let p = XxzParams::with_ratio(12, 0.4).unwrap();
    let a = ground_state(&p).unwrap();
    let b = ground_state(&p).unwrap();
    assert_eq!(a.state, b.state);
    assert_eq!(a.energy.to_bits(), b.energy.to_bits());
}

#[test]
fn neel_limit_and_heisenberg_point() {
    let strong = sweep_point(12, 50.0).unwrap();
    assert!(strong.delta_d_zz < 0.05);
    assert!(strong.delta_d_xx >= 0.45 && strong.delta_d_xx <= 0.5 + 1e-12);
    let iso = sweep_point(12, 1.0).unwrap();
    assert_abs_diff_eq!(iso.delta_d_xx, iso.delta_d_zz, epsilon = 1e-8);
    let ferro = sweep_point(8, -1.5).unwrap();
    assert_eq!(ferro.delta_d_zz, 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn variational_bound(seed in 0u64..10_000, ratio in -0.95f64..4.0) {
        let n = 8;
        let p = XxzParams::with_ratio(n, ratio).unwrap();
        let gs = ground_state(&p).unwrap();
        let sector = SzSector::new(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..sector.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut hv = vec![0.0; v.len()];
        sector.apply(&p, &v, &mut hv);
        let rq = v.iter().zip(&hv).map(|(a, b)| a * b).sum::<f64>() / v.iter().map(|a| a * a).sum::<f64>();
        prop_assert!(gs.energy <= rq + 1e-12);
    }
}

#[test]
fn ghz_substitution_is_exact() {
    for ratio in [-1.01, -2.0, -10.0] {
        let gs = ground_state(&XxzParams::with_ratio(12, ratio).unwrap()).unwrap();
        let jd = joint_distribution_dense(&gs.state, &MeasurementSetting::zz()).unwrap();
        assert_eq!(delta_d(&jd), 0.5);
        assert!(gs.sector.is_none());
        assert_eq!(gs.state, PureState::normalized(12, gs.state.amplitudes().to_vec()).unwrap());
    }
}
