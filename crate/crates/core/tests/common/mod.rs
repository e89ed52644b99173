//! Dense whole-system simulation shared by the oracle tests. Built from raw
//! index arithmetic and a Taylor-series propagator, independent of the
//! library's own partial trace and eigen-based evolution.

#![allow(dead_code, clippy::needless_range_loop)]

use erepr::linalg::{ComplexMatrix, DensityMatrix, C64};
use erepr::worlds::{build_epr_world, pair_layout};

type Dense = Vec<Vec<C64>>;

fn zeros(n: usize) -> Dense {
    vec![vec![C64::new(0.0, 0.0); n]; n]
}

fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let mut out = zeros(n);
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn adjoint(a: &Dense) -> Dense {
    let n = a.len();
    let mut out = zeros(n);
    for i in 0..n {
        for j in 0..n {
            out[j][i] = a[i][j].conj();
        }
    }
    out
}

/// `exp(-iHt)` by scaling and squaring a truncated Taylor series.
pub fn propagator(h: &Dense, t: f64) -> Dense {
    let n = h.len();
    let squarings = 10;
    let step = t / f64::from(1 << squarings);
    let a: Dense = h
        .iter()
        .map(|row| row.iter().map(|z| z * C64::new(0.0, -step)).collect())
        .collect();
    let mut sum = zeros(n);
    let mut term = zeros(n);
    for i in 0..n {
        sum[i][i] = C64::new(1.0, 0.0);
        term[i][i] = C64::new(1.0, 0.0);
    }
    for k in 1..20 {
        term = matmul(&term, &a);
        let inv = 1.0 / k as f64;
        for row in term.iter_mut() {
            for z in row.iter_mut() {
                *z *= inv;
            }
        }
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

fn bit(index: usize, position: usize, n_qubits: usize) -> usize {
    (index >> (n_qubits - 1 - position)) & 1
}

/// Full-system delivery: qubits ordered `q_A q_B Q0 … Qbar…`, the pair is
/// handed to the boundary by swapping `(q_A, Q0)` and `(q_B, Q1)`.
pub fn full_space_pair(
    q_dim: usize,
    qbar_dim: usize,
    lambda: f64,
    seed: u64,
    t: f64,
) -> DensityMatrix {
    let world = build_epr_world(q_dim, qbar_dim, lambda, seed).unwrap();
    let n = 2 + q_dim + qbar_dim;
    let d = 1usize << n;
    let env_d = 1usize << (q_dim + qbar_dim);

    // environment Hamiltonian read entry-wise, then lifted with identity on the pair
    let h_env = world.decomposition().unwrap().total();
    let mut h = zeros(d);
    for r in 0..d {
        for c in 0..d {
            if r / env_d == c / env_d {
                h[r][c] = h_env.matrix().get(r % env_d, c % env_d);
            }
        }
    }

    // initial amplitudes: pair |00>, singlet on Q0 Q1, other Q in |0>, Qbar in |+>
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut psi = vec![C64::new(0.0, 0.0); d];
    for (i, amp) in psi.iter_mut().enumerate() {
        if bit(i, 0, n) != 0 || bit(i, 1, n) != 0 {
            continue;
        }
        if (2..q_dim).any(|k| bit(i, 2 + k, n) != 0) {
            continue;
        }
        let singlet = match (bit(i, 2, n), bit(i, 3, n)) {
            (0, 1) => s,
            (1, 0) => -s,
            _ => 0.0,
        };
        *amp = C64::new(singlet * s.powi(qbar_dim as i32), 0.0);
    }
    let mut rho = zeros(d);
    for r in 0..d {
        for c in 0..d {
            rho[r][c] = psi[r] * psi[c].conj();
        }
    }

    let u = propagator(&h, t);
    rho = matmul(&matmul(&u, &rho), &adjoint(&u));

    let swap_bits = |i: usize, a: usize, b: usize| -> usize {
        let (ba, bb) = (bit(i, a, n), bit(i, b, n));
        if ba == bb {
            i
        } else {
            i ^ (1 << (n - 1 - a)) ^ (1 << (n - 1 - b))
        }
    };
    let perm: Vec<usize> = (0..d)
        .map(|i| swap_bits(swap_bits(i, 0, 2), 1, 3))
        .collect();
    let mut swapped = zeros(d);
    for r in 0..d {
        for c in 0..d {
            swapped[perm[r]][perm[c]] = rho[r][c];
        }
    }

    let rest = d / 4;
    let mut pair = vec![C64::new(0.0, 0.0); 16];
    for a in 0..4 {
        for b in 0..4 {
            for k in 0..rest {
                pair[a * 4 + b] += swapped[a * rest + k][b * rest + k];
            }
        }
    }
    DensityMatrix::new(
        ComplexMatrix::from_row_major(4, 4, pair).unwrap(),
        pair_layout(),
    )
    .unwrap()
}
