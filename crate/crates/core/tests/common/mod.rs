//! Dense-operator oracles shared by the integration tests.
#![allow(dead_code)]

use clmlab::optim::{nelder_mead, NelderMeadOptions};
use clmlab::povm::Direction;
use clmlab::statecore::{PureState, C64};
use clmlab::statelib::SymmetricState;
use nalgebra::{DMatrix, SymmetricEigen};

pub fn pauli(axis: usize) -> DMatrix<C64> {
    let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    // Basis order (down, up) matches bit value 0, 1.
    match axis {
        0 => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        1 => DMatrix::from_row_slice(2, 2, &[o, i, -i, o]),
        _ => DMatrix::from_row_slice(2, 2, &[-l, o, o, l]),
    }
}

// Site 0 is the least significant bit, so it is the rightmost factor.
pub fn site_operator(n: usize, site: usize, op: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    for s in (0..n).rev() {
        let factor = if s == site { op.clone() } else { DMatrix::identity(2, 2) };
        out = out.kronecker(&factor);
    }
    out
}

pub fn collective(n: usize, dirs: &[[f64; 3]]) -> DMatrix<C64> {
    let mut total = DMatrix::zeros(1 << n, 1 << n);
    for (site, d) in dirs.iter().enumerate() {
        for a in 0..3 {
            if d[a] != 0.0 {
                total += site_operator(n, site, &pauli(a)) * C64::new(d[a], 0.0);
            }
        }
    }
    total
}

pub fn dense_variance(psi: &PureState, dirs: &[[f64; 3]]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
    let a = collective(psi.n_sites(), dirs);
    let av = &a * &v;
    let mean = v.dotc(&av).re;
    av.dotc(&av).re - mean * mean
}

pub fn angles_to_dirs(x: &[f64]) -> Vec<[f64; 3]> {
    x.chunks(2).map(|c| Direction::new(c[0], c[1]).vector()).collect()
}

pub fn fibonacci(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            Direction::new(z.acos(), golden * k as f64).vector()
        })
        .collect()
}

// Grid over per-site directions from explicit two-site expectation values,
// then simplex refinement of the best grid points on the dense variance.
pub fn grid_oracle(psi: &PureState, points: usize) -> f64 {
    let n = psi.n_sites();
    let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
    let ops: Vec<DMatrix<C64>> = (0..3 * n).map(|r| site_operator(n, r / 3, &pauli(r % 3))).collect();
    let mean: Vec<f64> = ops.iter().map(|o| v.dotc(&(o * &v)).re).collect();
    let mut k = DMatrix::zeros(3 * n, 3 * n);
    for r in 0..3 * n {
        for c in 0..3 * n {
            let sym = (&ops[r] * &ops[c] + &ops[c] * &ops[r]) * C64::new(0.5, 0.0);
            k[(r, c)] = v.dotc(&(sym * &v)).re - mean[r] * mean[c];
        }
    }
    let grid = fibonacci(points);
    let proj: Vec<Vec<[f64; 3]>> = (0..n)
        .map(|_| grid.clone())
        .collect();
    let mut best: Vec<(f64, Vec<usize>)> = Vec::new();
    let total = points.pow(n as u32);
    for code in 0..total {
        let idx: Vec<usize> = (0..n).map(|s| code / points.pow(s as u32) % points).collect();
        let mut val = 0.0;
        for i in 0..n {
            for j in 0..n {
                let (u, w) = (proj[i][idx[i]], proj[j][idx[j]]);
                for a in 0..3 {
                    for b in 0..3 {
                        val += u[a] * k[(3 * i + a, 3 * j + b)] * w[b];
                    }
                }
            }
        }
        if best.len() < 8 || val > best[best.len() - 1].0 {
            best.push((val, idx));
            best.sort_by(|x, y| y.0.total_cmp(&x.0));
            best.truncate(8);
        }
    }
    let opts = NelderMeadOptions {
        initial_step: 0.2,
        f_tol: 1e-13,
        x_tol: 1e-10,
        max_evals: 20_000,
    };
    best.iter()
        .map(|(_, idx)| {
            let start: Vec<f64> = idx
                .iter()
                .flat_map(|&g| {
                    let d = Direction::from_vector(grid[g]).unwrap();
                    [d.theta, d.phi]
                })
                .collect();
            -nelder_mead(|x| -dense_variance(psi, &angles_to_dirs(x)), &start, &opts).value
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn spin_ops(n: usize) -> (DMatrix<C64>, DMatrix<C64>, DMatrix<C64>) {
    // Dicke basis k = 0..=n, m = k - n/2; S+ |k> = sqrt((n-k)(k+1)) |k+1>.
    let dim = n + 1;
    let mut sp = DMatrix::<C64>::zeros(dim, dim);
    for k in 0..n {
        sp[(k + 1, k)] = C64::new((((n - k) * (k + 1)) as f64).sqrt(), 0.0);
    }
    let sm = sp.adjoint();
    let sx = (&sp + &sm) * C64::new(0.5, 0.0);
    let sy = (&sp - &sm) * C64::new(0.0, -0.5);
    let sz = DMatrix::from_fn(dim, dim, |i, j| if i == j { C64::new(i as f64 - n as f64 / 2.0, 0.0) } else { C64::new(0.0, 0.0) });
    (sx, sy, sz)
}

pub fn moments(state: &SymmetricState, op: &DMatrix<C64>) -> (f64, f64) {
    let v = nalgebra::DVector::from_column_slice(state.amplitudes());
    let ov = op * &v;
    let mean = v.dotc(&ov).re;
    let sq = ov.dotc(&ov).re;
    (mean, sq - mean * mean)
}

// Explicit Hamiltonian from Kronecker products of Pauli matrices.
pub fn dense_hamiltonian(n: usize, j: f64, jz: f64) -> DMatrix<f64> {
    let dim = 1 << n;
    let mut h = DMatrix::zeros(dim, dim);
    for i in 0..n {
        let k = (i + 1) % n;
        for x in 0..dim {
            let (si, sk) = (x >> i & 1, x >> k & 1);
            // σ_z has eigenvalue +1 on bit 1 (up).
            let zi = if si == 1 { 1.0 } else { -1.0 };
            let zk = if sk == 1 { 1.0 } else { -1.0 };
            h[(x, x)] += jz * zi * zk;
            let y = x ^ (1 << i) ^ (1 << k);
            // σ_x σ_x contributes 1 to every double flip; σ_y σ_y gives -zi*zk.
            h[(y, x)] += j * (1.0 - zi * zk);
        }
    }
    h
}

pub fn lowest_dense(n: usize, j: f64, jz: f64) -> f64 {
    let eig = SymmetricEigen::new(dense_hamiltonian(n, j, jz));
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}
