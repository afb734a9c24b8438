//! One-period Floquet propagator and stroboscopic evolution.
//!
//! Per period the state is hit by, in this order: the position-space kick
//! `e^{−i(v ± λ) cos γ}` (sign set by the A spin along z), free rotation
//! `e^{−iT p²/2}` in momentum space, and finally the 4×4 spin unitary
//! `e^{−iT(ω_x σ_x^S + ω_z σ_z^S + ω_A σ_x^A + ε σ_z^S σ_z^A)}` on every rotor
//! index. The rotor lives on a torus with position grid `γ_j = 2πj/N` and
//! momenta `p_n = n`, `n ∈ {−N/2, …, N/2 − 1}`.

pub mod checkpoint;
pub mod dd;
pub mod dense;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use self::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use crate::qstate::TotalState;

pub type Mat4 = [[C64; 4]; 4];

/// Scalars of the model Hamiltonian. `T = 2π/N` is derived from `n_rotor`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    omega_x: f64,
    omega_z: f64,
    omega_a: f64,
    epsilon: f64,
    lambda: f64,
    v: f64,
    n_rotor: usize,
    period: f64,
}

impl ModelParams {
    pub fn new(
        omega_x: f64,
        omega_z: f64,
        omega_a: f64,
        epsilon: f64,
        lambda: f64,
        v: f64,
        n_rotor: usize,
    ) -> Result<Self> {
        if n_rotor < 4 || !n_rotor.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "n_rotor must be a power of two ≥ 4, got {n_rotor}"
            )));
        }
        let all = [omega_x, omega_z, omega_a, epsilon, lambda, v];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite model parameter in {all:?}"
            )));
        }
        Ok(ModelParams {
            omega_x,
            omega_z,
            omega_a,
            epsilon,
            lambda,
            v,
            n_rotor,
            period: 2.0 * PI / n_rotor as f64,
        })
    }

    /// Same as [`ModelParams::new`] but with the kick given as `v·T`, which
    /// keeps the classical chaos parameter fixed when `N` changes.
    pub fn with_kick_times_period(
        omega_x: f64,
        omega_z: f64,
        omega_a: f64,
        epsilon: f64,
        lambda: f64,
        v_times_t: f64,
        n_rotor: usize,
    ) -> Result<Self> {
        let t = 2.0 * PI / n_rotor.max(1) as f64;
        Self::new(omega_x, omega_z, omega_a, epsilon, lambda, v_times_t / t, n_rotor)
    }

    /// ω_x = 500, ω_z = 1000, ω_A = 1500, λ = 0.1, v·T = 90.
    pub fn reference(epsilon: f64, n_rotor: usize) -> Result<Self> {
        Self::with_kick_times_period(500.0, 1000.0, 1500.0, epsilon, 0.1, 90.0, n_rotor)
    }

    pub fn omega_x(&self) -> f64 {
        self.omega_x
    }
    pub fn omega_z(&self) -> f64 {
        self.omega_z
    }
    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn v(&self) -> f64 {
        self.v
    }
    pub fn n_rotor(&self) -> usize {
        self.n_rotor
    }
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// Largest of ω_x, ω_z, ω_A, |ε|; used to make tolerances scale-free.
    pub fn scale(&self) -> f64 {
        [self.omega_x, self.omega_z, self.omega_a, self.epsilon]
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// The 4×4 real-symmetric spin Hamiltonian on S ⊗ A, basis index `2s + a`.
    pub fn spin_hamiltonian(&self) -> [[f64; 4]; 4] {
        let mut h = [[0.0; 4]; 4];
        for s in 0..2 {
            for a in 0..2 {
                let k = 2 * s + a;
                let zs = if s == 0 { 1.0 } else { -1.0 };
                let za = if a == 0 { 1.0 } else { -1.0 };
                h[k][k] = self.omega_z * zs + self.epsilon * zs * za;
                // σ_x^S flips s, σ_x^A flips a.
                h[k][2 * (1 - s) + a] += self.omega_x;
                h[k][2 * s + (1 - a)] += self.omega_a;
            }
        }
        h
    }
}

/// Cyclic Jacobi diagonalization of a real-symmetric 4×4 matrix in
/// double-double. Returns eigenvalues and eigenvectors as columns.
fn jacobi_eigen(h: &[[f64; 4]; 4]) -> ([Dd; 4], [[Dd; 4]; 4]) {
    let mut a = [[Dd::ZERO; 4]; 4];
    let mut v = [[Dd::ZERO; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            a[i][j] = Dd::new(h[i][j]);
        }
        v[i][i] = Dd::ONE;
    }
    let scale = h.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    for _sweep in 0..30 {
        let off: f64 = (0..4)
            .flat_map(|i| (0..4).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j].hi.abs())
            .sum();
        if off <= 1e-33 * scale {
            break;
        }
        for p in 0..3 {
            for q in p + 1..4 {
                if a[p][q].hi.abs() <= 1e-36 * scale {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (Dd::new(2.0) * a[p][q]);
                let root = (theta * theta + Dd::ONE).sqrt();
                let t = if theta.hi >= 0.0 {
                    Dd::ONE / (theta + root)
                } else {
                    -(Dd::ONE / (root - theta))
                };
                let c = Dd::ONE / (t * t + Dd::ONE).sqrt();
                let s = t * c;
                for k in 0..4 {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..4 {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ([a[0][0], a[1][1], a[2][2], a[3][3]], v)
}

/// `e^{−iT H_SA}` from the eigendecomposition of the real-symmetric spin
/// Hamiltonian. Eigenphases are reduced modulo 2π in double-double so the
/// result stays accurate when `T‖H‖` is large.
pub fn build_spin_unitary(p: &ModelParams) -> Mat4 {
    let (vals, vecs) = jacobi_eigen(&p.spin_hamiltonian());
    let t = Dd::new(p.period());
    let phases: Vec<Cdd> = vals
        .iter()
        .map(|&e| {
            let r = (t * e).reduce_2pi().to_f64();
            Cdd::new(Dd::new(r.cos()), Dd::new(-r.sin()))
        })
        .collect();
    let mut u = [[C64::new(0.0, 0.0); 4]; 4];
    for (i, row) in u.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let mut acc = Cdd::ZERO;
            for k in 0..4 {
                acc = acc + phases[k].scale(vecs[i][k] * vecs[j][k]);
            }
            *cell = acc.to_c64();
        }
    }
    u
}

/// Immutable, shareable one-period propagator.
#[derive(Clone)]
pub struct FloquetStepper {
    params: ModelParams,
    spin_unitary: Mat4,
    kinetic_phases: Vec<C64>,
    kick_phases_plus: Vec<C64>,
    kick_phases_minus: Vec<C64>,
    momentum_offset: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl std::fmt::Debug for FloquetStepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FloquetStepper")
            .field("params", &self.params)
            .field("momentum_offset", &self.momentum_offset)
            .finish_non_exhaustive()
    }
}

impl FloquetStepper {
    pub fn new(params: ModelParams) -> Self {
        Self::with_momentum_offset(params, 0.0)
    }

    /// Momenta `p_n = n + offset`. Offset 0 is the default torus convention.
    pub fn with_momentum_offset(params: ModelParams, momentum_offset: f64) -> Self {
        let n = params.n_rotor();
        let t = params.period();
        let kinetic_phases = momentum_grid(n)
            .map(|p| {
                let p = p + momentum_offset;
                C64::from_polar(1.0, -0.5 * t * p * p)
            })
            .collect();
        let kick = |strength: f64| -> Vec<C64> {
            position_grid(n)
                .map(|g| C64::from_polar(1.0, -strength * g.cos()))
                .collect()
        };
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        FloquetStepper {
            params,
            spin_unitary: build_spin_unitary(&params),
            kinetic_phases,
            kick_phases_plus: kick(params.v() + params.lambda()),
            kick_phases_minus: kick(params.v() - params.lambda()),
            momentum_offset,
            fft,
            ifft,
            scratch_len,
        }
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn spin_unitary(&self) -> &Mat4 {
        &self.spin_unitary
    }

    /// Indexed by FFT bin `k`, i.e. momentum `k` for `k < N/2`, `k − N` above.
    pub fn kinetic_phases(&self) -> &[C64] {
        &self.kinetic_phases
    }

    /// Kick phases for A spin up along z (`v + λ`).
    pub fn kick_phases_plus(&self) -> &[C64] {
        &self.kick_phases_plus
    }

    /// Kick phases for A spin down along z (`v − λ`).
    pub fn kick_phases_minus(&self) -> &[C64] {
        &self.kick_phases_minus
    }

    pub fn momentum_offset(&self) -> f64 {
        self.momentum_offset
    }

    /// One period, returning a new state.
    pub fn step(&self, state: &TotalState) -> Result<TotalState> {
        let mut out = state.clone();
        let mut scratch = self.scratch();
        self.step_in_place(&mut out, &mut scratch)?;
        Ok(out)
    }

    /// Scratch buffer sized for [`FloquetStepper::step_in_place`].
    pub fn scratch(&self) -> Vec<C64> {
        vec![C64::new(0.0, 0.0); self.scratch_len]
    }

    pub fn step_in_place(&self, state: &mut TotalState, scratch: &mut Vec<C64>) -> Result<()> {
        let n = self.params.n_rotor();
        if state.n_rotor() != n {
            return Err(Error::DimensionMismatch {
                expected: 4 * n,
                got: state.dim(),
            });
        }
        if scratch.len() < self.scratch_len {
            scratch.resize(self.scratch_len, C64::new(0.0, 0.0));
        }
        let amps = state.amplitudes_mut();

        for (block, chunk) in amps.chunks_exact_mut(n).enumerate() {
            let kick = if block % 2 == 0 {
                &self.kick_phases_plus
            } else {
                &self.kick_phases_minus
            };
            chunk.iter_mut().zip(kick).for_each(|(c, k)| *c *= k);
        }

        self.fft.process_with_scratch(amps, scratch);
        let inv_n = 1.0 / n as f64;
        for chunk in amps.chunks_exact_mut(n) {
            chunk
                .iter_mut()
                .zip(&self.kinetic_phases)
                .for_each(|(c, k)| *c *= k * inv_n);
        }
        self.ifft.process_with_scratch(amps, scratch);

        let u = &self.spin_unitary;
        let (b01, b23) = amps.split_at_mut(2 * n);
        let (b0, b1) = b01.split_at_mut(n);
        let (b2, b3) = b23.split_at_mut(n);
        for j in 0..n {
            let x = [b0[j], b1[j], b2[j], b3[j]];
            let y = |r: &[C64; 4]| r[0] * x[0] + r[1] * x[1] + r[2] * x[2] + r[3] * x[3];
            b0[j] = y(&u[0]);
            b1[j] = y(&u[1]);
            b2[j] = y(&u[2]);
            b3[j] = y(&u[3]);
        }
        Ok(())
    }

    /// Applies `n_steps` periods in place. `observer(k, state)` runs after the
    /// k-th period (k starts at 1); an `Err` from it stops the evolution and
    /// leaves `state` at the last completed period.
    pub fn evolve_in_place<F>(&self, state: &mut TotalState, n_steps: usize, mut observer: F) -> Result<()>
    where
        F: FnMut(usize, &TotalState) -> std::result::Result<(), String>,
    {
        let mut scratch = self.scratch();
        for k in 1..=n_steps {
            self.step_in_place(state, &mut scratch)?;
            if let Err(reason) = observer(k, state) {
                return Err(Error::ObserverAborted {
                    completed: k,
                    requested: n_steps,
                    reason,
                });
            }
        }
        Ok(())
    }

    pub fn evolve<F>(&self, mut state: TotalState, n_steps: usize, observer: F) -> Result<TotalState>
    where
        F: FnMut(usize, &TotalState) -> std::result::Result<(), String>,
    {
        self.evolve_in_place(&mut state, n_steps, observer)?;
        Ok(state)
    }
}

/// `γ_j = 2πj/N`.
pub fn position_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |j| 2.0 * PI * j as f64 / n as f64)
}

/// Momentum of each FFT bin: `k` for `k < N/2`, `k − N` otherwise.
pub fn momentum_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| if k < n / 2 { k as f64 } else { k as f64 - n as f64 })
}

/// i.i.d. complex Gaussian entries, normalized; reproducible from `seed`.
pub fn random_rotor_state(n_rotor: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<C64> = (0..n_rotor)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|c| *c /= norm);
    v
}
