//! State space of the composite system S ⊗ A ⊗ B.
//!
//! Amplitudes are stored as one flat vector indexed by `(s, a, j)` with the
//! rotor index `j` fastest: `idx = (2 s + a) N + j`. Spin index 0 is spin up
//! along z (σ_z = +1), index 1 is spin down. Each `(s, a)` pair owns a
//! contiguous rotor block of length `N`, which is what the FFT passes and the
//! partial trace iterate over.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// A 2-component complex vector in the σ_z basis of a qubit.
pub type Vec2 = [C64; 2];

/// A 2×2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];

/// Tolerance on Σ|c|² = 1 for total states.
pub const NORM_TOL: f64 = 1e-10;

/// Eigenvalue gap below which a 2×2 spectrum is flagged degenerate.
pub const DEGENERACY_TOL: f64 = 1e-13;

const UNIT_TOL: f64 = 1e-8;
const HERMITIAN_TOL: f64 = 1e-10;

#[inline]
pub fn inner(v: &Vec2, w: &Vec2) -> C64 {
    v[0].conj() * w[0] + v[1].conj() * w[1]
}

#[inline]
pub fn norm2(v: &Vec2) -> f64 {
    (v[0].norm_sqr() + v[1].norm_sqr()).sqrt()
}

fn check_unit(v: &Vec2) -> Result<()> {
    let n = norm2(v);
    if (n - 1.0).abs() > UNIT_TOL || !n.is_finite() {
        return Err(Error::NotUnit { norm: n });
    }
    Ok(())
}

/// Coherently evolving wavefunction of S ⊗ A ⊗ B (dimension 4N).
#[derive(Debug, Clone, PartialEq)]
pub struct TotalState {
    amps: Vec<C64>,
    n_rotor: usize,
}

impl TotalState {
    /// Wraps raw amplitudes. The length must be a multiple of four and the
    /// vector normalized within [`NORM_TOL`].
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() || amps.len() % 4 != 0 {
            return Err(Error::DimensionMismatch {
                expected: 4 * (amps.len() / 4).max(1),
                got: amps.len(),
            });
        }
        let n_rotor = amps.len() / 4;
        let state = TotalState { amps, n_rotor };
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL || !norm_sqr.is_finite() {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(state)
    }

    /// `|system⟩ ⊗ |ancilla⟩ ⊗ |rotor⟩`, each factor in its own basis.
    pub fn product(system: Vec2, ancilla: Vec2, rotor: &[C64]) -> Result<Self> {
        let n = rotor.len();
        let mut amps = Vec::with_capacity(4 * n);
        for s in system {
            for a in ancilla {
                let w = s * a;
                amps.extend(rotor.iter().map(|r| w * r));
            }
        }
        Self::from_amplitudes(amps)
    }

    #[inline]
    pub fn n_rotor(&self) -> usize {
        self.n_rotor
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    #[inline]
    pub fn index(&self, s: usize, a: usize, j: usize) -> usize {
        (2 * s + a) * self.n_rotor + j
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    /// Rotor block for spin indices `(s, a)`.
    pub fn block(&self, s: usize, a: usize) -> &[C64] {
        let start = (2 * s + a) * self.n_rotor;
        &self.amps[start..start + self.n_rotor]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Result of a closed-form 2×2 Hermitian eigendecomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eig2 {
    /// Descending.
    pub values: [f64; 2],
    /// `vectors[k]` belongs to `values[k]`; largest-magnitude component real positive.
    pub vectors: [Vec2; 2],
    /// Gap below [`DEGENERACY_TOL`]; the vectors are orthonormal but arbitrary.
    pub degenerate: bool,
}

/// Closed-form eigenpairs of a 2×2 Hermitian matrix.
///
/// Writes `m = μ I + h·σ` and takes the eigenvector of `+|h|` along the Bloch
/// direction of `h`, choosing the numerically stable branch by the sign of
/// `h_z`.
pub fn eig_2x2_hermitian(m: &Mat2) -> Result<Eig2> {
    let dev = ((m[0][0] - m[0][0].conj()).norm_sqr()
        + (m[1][1] - m[1][1].conj()).norm_sqr()
        + 2.0 * (m[0][1] - m[1][0].conj()).norm_sqr())
    .sqrt();
    if dev > HERMITIAN_TOL || !dev.is_finite() {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let p = m[0][0].re;
    let r = m[1][1].re;
    // Average the off-diagonal pair so tiny asymmetries cannot bias the result.
    let q = 0.5 * (m[0][1] + m[1][0].conj());
    Ok(eig_hermitian_parts(p, r, q))
}

pub(crate) fn eig_hermitian_parts(p: f64, r: f64, q: C64) -> Eig2 {
    let mean = 0.5 * (p + r);
    let hx = q.re;
    let hy = -q.im;
    let hz = 0.5 * (p - r);
    let h = (hx * hx + hy * hy + hz * hz).sqrt();
    let values = [mean + h, mean - h];
    if 2.0 * h < DEGENERACY_TOL {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        return Eig2 {
            values,
            vectors: [[one, zero], [zero, one]],
            degenerate: true,
        };
    }
    let raw = if hz >= 0.0 {
        [C64::new(h + hz, 0.0), C64::new(hx, hy)]
    } else {
        [C64::new(hx, -hy), C64::new(h - hz, 0.0)]
    };
    let v0 = fix_phase(normalize(raw));
    let v1 = fix_phase([-v0[1].conj(), v0[0].conj()]);
    Eig2 {
        values,
        vectors: [v0, v1],
        degenerate: false,
    }
}

fn normalize(v: Vec2) -> Vec2 {
    let n = norm2(&v);
    [v[0] / n, v[1] / n]
}

/// Global phase convention: largest-magnitude component real and positive
/// (first component on ties).
pub fn fix_phase(v: Vec2) -> Vec2 {
    let pivot = if v[0].norm() >= v[1].norm() { v[0] } else { v[1] };
    let mag = pivot.norm();
    if mag == 0.0 {
        return v;
    }
    let phase = pivot.conj() / mag;
    [v[0] * phase, v[1] * phase]
}

/// 2×2 reduced density matrix of S.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rdm2 {
    pub m00: f64,
    pub m11: f64,
    pub m01: C64,
    pub eig: Eig2,
}

impl Rdm2 {
    pub fn new(m00: f64, m11: f64, m01: C64) -> Self {
        let eig = eig_hermitian_parts(m00, m11, m01);
        Rdm2 { m00, m11, m01, eig }
    }

    /// Pure projector `|v⟩⟨v|`.
    pub fn pure(v: &Vec2) -> Self {
        Self::new(v[0].norm_sqr(), v[1].norm_sqr(), v[0] * v[1].conj())
    }

    pub fn matrix(&self) -> Mat2 {
        [
            [C64::new(self.m00, 0.0), self.m01],
            [self.m01.conj(), C64::new(self.m11, 0.0)],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.m00 + self.m11
    }

    /// `⟨u|ρ|w⟩`.
    pub fn element(&self, u: &Vec2, w: &Vec2) -> C64 {
        let m = self.matrix();
        let mw = [m[0][0] * w[0] + m[0][1] * w[1], m[1][0] * w[0] + m[1][1] * w[1]];
        inner(u, &mw)
    }

    /// `(ρ_αα, ρ_ββ, ρ_αβ)` in the given basis.
    pub fn in_basis(&self, basis: &BasisPair) -> (f64, f64, C64) {
        let (a, b) = (basis.alpha(), basis.beta());
        (
            self.element(&a, &a).re,
            self.element(&b, &b).re,
            self.element(&a, &b),
        )
    }
}

/// `ρ^s = Tr_E |Ψ⟩⟨Ψ|`.
pub fn partial_trace_env(state: &TotalState) -> Rdm2 {
    let half = state.dim() / 2;
    let (up, down) = state.amplitudes().split_at(half);
    let mut m00 = 0.0;
    let mut m11 = 0.0;
    let mut m01 = C64::new(0.0, 0.0);
    for (c0, c1) in up.iter().zip(down) {
        m00 += c0.norm_sqr();
        m11 += c1.norm_sqr();
        m01 += c0 * c1.conj();
    }
    Rdm2::new(m00, m11, m01)
}

/// `D(v, w) = 1 − |⟨v|w⟩|²`.
pub fn basis_distance(v: &Vec2, w: &Vec2) -> Result<f64> {
    check_unit(v)?;
    check_unit(w)?;
    Ok((1.0 - inner(v, w).norm_sqr()).clamp(0.0, 1.0))
}

/// Spin up along x, `|1⟩_x`, in the σ_z basis.
pub fn x_up() -> Vec2 {
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(FRAC_1_SQRT_2, 0.0)]
}

/// Spin down along x, `|0⟩_x`, in the σ_z basis.
pub fn x_down() -> Vec2 {
    [C64::new(FRAC_1_SQRT_2, 0.0), C64::new(-FRAC_1_SQRT_2, 0.0)]
}

/// Orthonormal system basis parameterized on the Bloch sphere:
/// `|α⟩ = a e^{iφ}|1⟩_x + b|0⟩_x`, `|β⟩ = b e^{iφ}|1⟩_x − a|0⟩_x`, `a = √(1 − b²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisPair {
    b: f64,
    a: f64,
    phi: f64,
}

impl BasisPair {
    pub fn new(b: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&b) || !phi.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "basis needs b in [0, 1] and finite phi, got b = {b}, phi = {phi}"
            )));
        }
        Ok(BasisPair {
            b,
            a: ((1.0 - b) * (1.0 + b)).sqrt(),
            phi: phi.rem_euclid(2.0 * PI),
        })
    }

    /// Basis whose `|α⟩` equals `v` up to a global phase.
    pub fn from_vector(v: &Vec2) -> Result<Self> {
        check_unit(v)?;
        let n = norm2(v);
        let up = inner(&x_up(), v) / n;
        let down = inner(&x_down(), v) / n;
        let h = up.norm().hypot(down.norm());
        let (a, b) = (up.norm() / h, down.norm() / h);
        let rel = up * down.conj();
        let phi = if b > 0.0 && rel.norm() > 0.0 {
            rel.arg()
        } else if up.norm() > 0.0 {
            up.arg()
        } else {
            0.0
        };
        let mut out = Self::new(b, phi)?;
        out.a = a;
        Ok(out)
    }

    /// σ_z eigenbasis (also the eigenbasis of H_I on S): `|α⟩ = |↑_z⟩`.
    pub fn sigma_z() -> Self {
        BasisPair {
            b: FRAC_1_SQRT_2,
            a: FRAC_1_SQRT_2,
            phi: 0.0,
        }
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn alpha(&self) -> Vec2 {
        let ae = C64::from_polar(self.a(), self.phi);
        let (u, d) = (x_up(), x_down());
        [ae * u[0] + self.b * d[0], ae * u[1] + self.b * d[1]]
    }

    pub fn beta(&self) -> Vec2 {
        let be = C64::from_polar(self.b, self.phi);
        let a = self.a();
        let (u, d) = (x_up(), x_down());
        [be * u[0] - a * d[0], be * u[1] - a * d[1]]
    }

    /// Same pair with α and β exchanged, mapped back to the `(b, φ)` chart.
    pub fn swapped(&self) -> Self {
        BasisPair {
            b: self.a,
            a: self.b,
            phi: (self.phi + PI).rem_euclid(2.0 * PI),
        }
    }

    /// Representative with `b ≤ 1/√2` (quotients out the α ↔ β swap).
    pub fn canonical(&self) -> Self {
        if self.b > FRAC_1_SQRT_2 {
            self.swapped()
        } else {
            *self
        }
    }

    /// Bloch vector of `|α⟩`.
    pub fn bloch(&self) -> [f64; 3] {
        let (a, b) = (self.a(), self.b);
        [
            1.0 - 2.0 * b * b,
            2.0 * a * b * self.phi.sin(),
            2.0 * a * b * self.phi.cos(),
        ]
    }
}

/// Environment histories `|φ_α⟩ = ⟨α|Ψ⟩`, `|φ_β⟩ = ⟨β|Ψ⟩` (unnormalized,
/// length 2N, indexed `a N + j`).
pub fn environment_histories(state: &TotalState, basis: &BasisPair) -> (Vec<C64>, Vec<C64>) {
    let half = state.dim() / 2;
    let (up, down) = state.amplitudes().split_at(half);
    let (al, be) = (basis.alpha(), basis.beta());
    let (al0, al1) = (al[0].conj(), al[1].conj());
    let (be0, be1) = (be[0].conj(), be[1].conj());
    let phi_a = up.iter().zip(down).map(|(u, d)| al0 * u + al1 * d).collect();
    let phi_b = up.iter().zip(down).map(|(u, d)| be0 * u + be1 * d).collect();
    (phi_a, phi_b)
}
