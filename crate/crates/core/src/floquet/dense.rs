//! Brute-force reference propagator for small `N`.
//!
//! Builds the full 4N×4N one-period matrix by multiplying explicit factor
//! matrices: diagonal kick, dense DFT, diagonal kinetic phases, dense inverse
//! DFT and `exp(−iT H_SA) ⊗ I_N`. The spin factor comes from a
//! scaled-and-squared Taylor series, so nothing here shares code with the FFT
//! stepper or its Jacobi eigendecomposition.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::dd::{Cdd, Dd};
use super::{momentum_grid, position_grid, Mat4, ModelParams};

pub type Dense = Vec<Vec<C64>>;

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

type M4 = [[Cdd; 4]; 4];

fn mul4(a: &M4, b: &M4) -> M4 {
    let mut out = [[Cdd::ZERO; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            for j in 0..4 {
                out[i][j] = out[i][j] + a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// `exp(−i t H)` for a real-symmetric 4×4 `H`: scaled-and-squared Taylor
/// series in double-double.
pub fn expm_minus_i(h: &[[f64; 4]; 4], t: f64) -> Mat4 {
    let norm = (0..4)
        .map(|j| (0..4).map(|i| (t * h[i][j]).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scale = Dd::new(0.5f64.powi(squarings));
    let mut a = [[Cdd::ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] = Cdd::new(Dd::ZERO, -Dd::prod(t, h[i][j]) * scale);
        }
    }
    let mut sum = [[Cdd::ZERO; 4]; 4];
    for (i, row) in sum.iter_mut().enumerate() {
        row[i] = Cdd::new(Dd::ONE, Dd::ZERO);
    }
    let mut term = sum;
    for k in 1..=40 {
        term = mul4(&term, &a);
        let inv = Dd::ONE / Dd::new(k as f64);
        for i in 0..4 {
            for j in 0..4 {
                term[i][j] = term[i][j].scale(inv);
                sum[i][j] = sum[i][j] + term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul4(&sum, &sum);
    }
    let mut out = [[C64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = sum[i][j].to_c64();
        }
    }
    out
}

/// Unnormalized DFT matrix `F[k][j] = e^{−2πi kj/N}`.
pub fn dft(n: usize) -> Dense {
    (0..n)
        .map(|k| {
            (0..n)
                .map(|j| C64::from_polar(1.0, -2.0 * PI * ((k * j) % n) as f64 / n as f64))
                .collect()
        })
        .collect()
}

/// Full one-period propagator on the 4N-dimensional space.
pub fn propagator(p: &ModelParams) -> Dense {
    let n = p.n_rotor();
    let d = 4 * n;
    let t = p.period();

    let mut kick = zeros(d);
    let gammas: Vec<f64> = position_grid(n).collect();
    for block in 0..4 {
        let sign = if block % 2 == 0 { 1.0 } else { -1.0 };
        for (j, g) in gammas.iter().enumerate() {
            let i = block * n + j;
            kick[i][i] = C64::from_polar(1.0, -p.v() * g.cos())
                * C64::from_polar(1.0, -sign * p.lambda() * g.cos());
        }
    }

    let f = dft(n);
    let mut fwd = zeros(d);
    let mut inv = zeros(d);
    for block in 0..4 {
        for k in 0..n {
            for j in 0..n {
                fwd[block * n + k][block * n + j] = f[k][j];
                inv[block * n + j][block * n + k] = f[k][j].conj() / n as f64;
            }
        }
    }

    let mut kinetic = zeros(d);
    let moms: Vec<f64> = momentum_grid(n).collect();
    for block in 0..4 {
        for (k, m) in moms.iter().enumerate() {
            let i = block * n + k;
            kinetic[i][i] = C64::from_polar(1.0, -0.5 * t * m * m);
        }
    }

    let u = expm_minus_i(&p.spin_hamiltonian(), t);
    let mut spin = zeros(d);
    for r in 0..4 {
        for c in 0..4 {
            for j in 0..n {
                spin[r * n + j][c * n + j] = u[r][c];
            }
        }
    }

    let m = matmul(&fwd, &kick);
    let m = matmul(&kinetic, &m);
    let m = matmul(&inv, &m);
    matmul(&spin, &m)
}

pub fn apply(u: &Dense, psi: &[C64]) -> Vec<C64> {
    u.iter()
        .map(|row| row.iter().zip(psi).map(|(a, b)| a * b).sum())
        .collect()
}
