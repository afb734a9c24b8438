//! Environment-history operator algebra.
//!
//! Writing `|Ψ⟩ = |α⟩|φ_α⟩ + |β⟩|φ_β⟩` for a fixed system basis, the two
//! histories evolve under the block operators `H_αα`, `H_αβ`, … obtained by
//! projecting the total Hamiltonian onto `|α⟩`, `|β⟩`. Because `H_I` is a
//! product `ε σ_z^S ⊗ σ_z^A`, every block acts on the rotor only through the
//! identity, so all operators here live on the A qubit: the environment part
//! `H_E` enters only as `H_A = ω_A σ_x^A` (σ_z^A commutes with the kick and
//! kinetic terms, so `H_B` and `H_AB` drop out of every commutator).
//!
//! The basis maximizing ‖ΔH‖ is the theoretical pointer-basis prediction.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::floquet::ModelParams;
use crate::qstate::{eig_2x2_hermitian, inner, BasisPair, Vec2};

/// Relative determinant threshold for inverting `H_αβ`.
pub const SINGULAR_TOL: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// 2×2 operator on the A qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AOperator(pub Matrix2<C64>);

impl AOperator {
    pub fn zero() -> Self {
        AOperator(Matrix2::zeros())
    }
    pub fn identity() -> Self {
        AOperator(Matrix2::identity())
    }
    pub fn sigma_x() -> Self {
        AOperator(Matrix2::new(ZERO, ONE, ONE, ZERO))
    }
    pub fn sigma_y() -> Self {
        AOperator(Matrix2::new(ZERO, -I, I, ZERO))
    }
    pub fn sigma_z() -> Self {
        AOperator(Matrix2::new(ONE, ZERO, ZERO, -ONE))
    }

    pub fn scale(&self, s: C64) -> Self {
        AOperator(self.0 * s)
    }

    /// Frobenius-2 norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn adjoint(&self) -> Self {
        AOperator(self.0.adjoint())
    }

    pub fn det(&self) -> C64 {
        let m = &self.0;
        m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
    }

    /// Adjugate inverse; fails when `|det| < SINGULAR_TOL · ‖M‖²`.
    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        let scale_sqr = self.norm().powi(2);
        if !(det.norm() >= SINGULAR_TOL * scale_sqr) || scale_sqr == 0.0 {
            return Err(Error::SingularBlock {
                det: det.norm(),
                scale_sqr,
            });
        }
        let m = &self.0;
        Ok(AOperator(
            Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det,
        ))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        AOperator(self.0 * other.0 - other.0 * self.0)
    }
}

impl std::ops::Add for AOperator {
    type Output = AOperator;
    fn add(self, rhs: Self) -> Self {
        AOperator(self.0 + rhs.0)
    }
}

impl std::ops::Sub for AOperator {
    type Output = AOperator;
    fn sub(self, rhs: Self) -> Self {
        AOperator(self.0 - rhs.0)
    }
}

impl std::ops::Mul for AOperator {
    type Output = AOperator;
    fn mul(self, rhs: Self) -> Self {
        AOperator(self.0 * rhs.0)
    }
}

impl std::ops::Neg for AOperator {
    type Output = AOperator;
    fn neg(self) -> Self {
        AOperator(-self.0)
    }
}

fn op2(m: [[f64; 2]; 2], v: &Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

fn expect(m: [[f64; 2]; 2], u: &Vec2, w: &Vec2) -> C64 {
    inner(u, &op2(m, w))
}

fn h_s(p: &ModelParams) -> [[f64; 2]; 2] {
    [[p.omega_z(), p.omega_x()], [p.omega_x(), -p.omega_z()]]
}

const SIGMA_Z: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, -1.0]];

/// Projections of `H_S` and `H_I` onto a system basis pair. The `H_E` part
/// of `H_αα`, `H_ββ` is the same operator for both and is kept symbolic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockHamiltonians {
    pub hs_aa: f64,
    pub hs_bb: f64,
    pub hs_ab: C64,
    pub hi_aa: AOperator,
    pub hi_bb: AOperator,
    pub hi_ab: AOperator,
    /// `H_αβ = H^S_αβ I + H^I_αβ`.
    pub h_ab: AOperator,
    /// `H_βα = H_αβ†`.
    pub h_ba: AOperator,
}

pub fn block_hamiltonians(basis: &BasisPair, p: &ModelParams) -> BlockHamiltonians {
    let (al, be) = (basis.alpha(), basis.beta());
    let hs = h_s(p);
    let hs_ab = expect(hs, &al, &be);
    let sz = AOperator::sigma_z();
    let eps = C64::new(p.epsilon(), 0.0);
    let hi_aa = sz.scale(eps * expect(SIGMA_Z, &al, &al).re);
    let hi_bb = sz.scale(eps * expect(SIGMA_Z, &be, &be).re);
    let hi_ab = sz.scale(eps * expect(SIGMA_Z, &al, &be));
    let h_ab = AOperator::identity().scale(hs_ab) + hi_ab;
    BlockHamiltonians {
        hs_aa: expect(hs, &al, &al).re,
        hs_bb: expect(hs, &be, &be).re,
        hs_ab,
        hi_aa,
        hi_bb,
        hi_ab,
        h_ab,
        h_ba: h_ab.adjoint(),
    }
}

impl BlockHamiltonians {
    /// A-space part of `H_αα`: `H^S_αα I + H^I_αα + ω_A σ_x^A`.
    pub fn h_aa_reduced(&self, p: &ModelParams) -> AOperator {
        AOperator::identity().scale(C64::new(self.hs_aa, 0.0))
            + self.hi_aa
            + AOperator::sigma_x().scale(C64::new(p.omega_a(), 0.0))
    }

    pub fn h_bb_reduced(&self, p: &ModelParams) -> AOperator {
        AOperator::identity().scale(C64::new(self.hs_bb, 0.0))
            + self.hi_bb
            + AOperator::sigma_x().scale(C64::new(p.omega_a(), 0.0))
    }
}

/// `ΔH = H_αα − H_ββ = (H^S_αα − H^S_ββ) I + H^I_αα − H^I_ββ`.
pub fn delta_h(basis: &BasisPair, p: &ModelParams) -> AOperator {
    let bh = block_hamiltonians(basis, p);
    AOperator::identity().scale(C64::new(bh.hs_aa - bh.hs_bb, 0.0)) + bh.hi_aa - bh.hi_bb
}

/// `ΔJ = H_αβ H_βα − H_βα H_αβ`.
pub fn delta_j(basis: &BasisPair, p: &ModelParams) -> AOperator {
    let bh = block_hamiltonians(basis, p);
    bh.h_ab * bh.h_ba - bh.h_ba * bh.h_ab
}

/// `c₁ = ⟨α|σ_z^S|β⟩` as a function of `(b, φ)`.
pub fn coeff_c1(basis: &BasisPair) -> C64 {
    let b = basis.b();
    let phi = basis.phi();
    C64::new((2.0 * b * b - 1.0) * phi.cos(), phi.sin())
}

/// `d₁ = ⟨α|H_S|β⟩ = 2ω_x a b + ω_z c₁`.
pub fn coeff_d1(basis: &BasisPair, p: &ModelParams) -> C64 {
    2.0 * p.omega_x() * basis.a() * basis.b() + p.omega_z() * coeff_c1(basis)
}

/// `H_αβ` is treated as singular when `|det| < SINGULAR_TOL · ‖H_αβ‖²` or
/// when `‖H_αβ‖` itself is at roundoff level relative to the model scale.
fn check_block(det: f64, scale_sqr: f64, p: &ModelParams) -> Result<()> {
    let floor = SINGULAR_TOL * 1e-2 * p.scale();
    if !(det >= SINGULAR_TOL * scale_sqr) || scale_sqr <= floor * floor {
        return Err(Error::SingularBlock { det, scale_sqr });
    }
    Ok(())
}

/// Closed form `Y = 2iεω_A (η L − η̄ L̄)` with `η = c₁/(d₁² − ε²c₁²)` and
/// `L = −iεc₁ σ_x^A + d₁ σ_y^A`.
pub fn y_operator(basis: &BasisPair, p: &ModelParams) -> Result<AOperator> {
    let eps = p.epsilon();
    let c1 = coeff_c1(basis);
    let d1 = coeff_d1(basis, p);
    let det = d1 * d1 - eps * eps * c1 * c1;
    // det H_αβ = d₁² − ε²c₁²; ‖H_αβ‖² = 2(|d₁|² + ε²|c₁|²).
    let scale_sqr = 2.0 * (d1.norm_sqr() + eps * eps * c1.norm_sqr());
    check_block(det.norm(), scale_sqr, p)?;
    let (c2, d2) = (c1.conj(), d1.conj());
    let eta = c1 / det;
    let eta_bar = c2 / det.conj();
    let l = |c: C64, d: C64| {
        AOperator::sigma_x().scale(-I * eps * c) + AOperator::sigma_y().scale(d)
    };
    let inner_op = l(c1, d1).scale(eta) - l(c2, d2).scale(eta_bar);
    Ok(inner_op.scale(2.0 * I * eps * p.omega_a()))
}

/// `Y = X_α H_αβ⁻¹ − X_β H_βα⁻¹` with `X_α = [H_αβ, H_ββ]`, from explicit
/// 2×2 matrices.
pub fn y_operator_direct(basis: &BasisPair, p: &ModelParams) -> Result<AOperator> {
    let bh = block_hamiltonians(basis, p);
    check_block(bh.h_ab.det().norm(), bh.h_ab.norm().powi(2), p)?;
    let x_a = bh.h_ab.commutator(&bh.h_bb_reduced(p));
    let x_b = bh.h_ba.commutator(&bh.h_aa_reduced(p));
    Ok(x_a * bh.h_ab.inverse()? - x_b * bh.h_ba.inverse()?)
}

/// `ΔK = −ΔH + Y`.
pub fn delta_k(basis: &BasisPair, p: &ModelParams) -> Result<AOperator> {
    Ok(-delta_h(basis, p) + y_operator(basis, p)?)
}

/// `ΔK = K_α − K_β` from `K_α = H_αβ H_ββ H_αβ⁻¹`.
pub fn delta_k_definitional(basis: &BasisPair, p: &ModelParams) -> Result<AOperator> {
    let bh = block_hamiltonians(basis, p);
    check_block(bh.h_ab.det().norm(), bh.h_ab.norm().powi(2), p)?;
    let k_a = bh.h_ab * bh.h_bb_reduced(p) * bh.h_ab.inverse()?;
    let k_b = bh.h_ba * bh.h_aa_reduced(p) * bh.h_ba.inverse()?;
    Ok(k_a - k_b)
}

/// `r = ‖Y‖ / ‖ΔH‖`.
pub fn ratio_r(basis: &BasisPair, p: &ModelParams) -> Result<f64> {
    let dh = delta_h(basis, p).norm();
    if dh == 0.0 || !dh.is_finite() {
        return Err(Error::UndefinedRatio);
    }
    Ok(y_operator(basis, p)?.norm() / dh)
}

/// Eigenbasis of `H_S`, `|α⟩` the upper level.
pub fn hs_eigenbasis(p: &ModelParams) -> BasisPair {
    let h = h_s(p);
    let m = [
        [C64::new(h[0][0], 0.0), C64::new(h[0][1], 0.0)],
        [C64::new(h[1][0], 0.0), C64::new(h[1][1], 0.0)],
    ];
    let eig = eig_2x2_hermitian(&m).expect("H_S is real symmetric");
    BasisPair::from_vector(&eig.vectors[0])
        .expect("unit eigenvector")
        .canonical()
}

/// Eigenbasis of `H_I` on S, i.e. the σ_z basis.
pub fn hi_eigenbasis() -> BasisPair {
    BasisPair::sigma_z()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximizeOptions {
    pub grid_b: usize,
    pub grid_phi: usize,
    /// Refinement stops once `|∇f| < grad_tol · scale`.
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        MaximizeOptions {
            grid_b: 257,
            grid_phi: 256,
            grad_tol: 1e-8,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximizer {
    /// Canonical representative (`b ≤ 1/√2`).
    pub basis: BasisPair,
    pub value: f64,
    /// `value / scale`.
    pub value_normalized: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy)]
enum Objective {
    Full,
    WithoutScalar,
}

fn objective(kind: Objective, p: &ModelParams, b: f64, phi: f64) -> f64 {
    let basis = BasisPair::new(b.clamp(0.0, 1.0), phi).expect("clamped b");
    match kind {
        Objective::Full => delta_h(&basis, p).norm(),
        Objective::WithoutScalar => {
            let bh = block_hamiltonians(&basis, p);
            (bh.hi_aa - bh.hi_bb).norm()
        }
    }
}

/// Exhaustive grid over `b ∈ [0, 1]`, `φ ∈ [0, 2π)`. Ties go to the
/// lexicographically smallest `(b, φ)`.
fn grid_argmax(kind: Objective, p: &ModelParams, nb: usize, nphi: usize) -> (f64, f64, f64) {
    let nb = nb.max(2);
    let nphi = nphi.max(1);
    let best = (0..nb)
        .into_par_iter()
        .map(|i| {
            let b = i as f64 / (nb - 1) as f64;
            let mut row = (f64::NEG_INFINITY, i, 0usize);
            for k in 0..nphi {
                let phi = 2.0 * PI * k as f64 / nphi as f64;
                let f = objective(kind, p, b, phi);
                if f > row.0 {
                    row = (f, i, k);
                }
            }
            row
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX, usize::MAX),
            |x, y| {
                if y.0 > x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) {
                    y
                } else {
                    x
                }
            },
        );
    (
        best.0,
        best.1 as f64 / (nb - 1) as f64,
        2.0 * PI * best.2 as f64 / nphi as f64,
    )
}

/// Brute-force grid maximum of ‖ΔH‖; returns `(value, b, φ)`.
pub fn grid_max_delta_h(p: &ModelParams, nb: usize, nphi: usize) -> (f64, f64, f64) {
    grid_argmax(Objective::Full, p, nb, nphi)
}

fn refine(kind: Objective, p: &ModelParams, b0: f64, phi0: f64, opts: &MaximizeOptions) -> Maximizer {
    let f = |b: f64, phi: f64| objective(kind, p, b, phi);
    let scale = p.scale().max(f64::MIN_POSITIVE);
    let hg = 1e-6;
    let hh = 1e-4;
    let (mut b, mut phi) = (b0, phi0);
    let mut fx = f(b, phi);
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for it in 0..opts.max_iter {
        iterations = it;
        // One-sided differences at the b bounds.
        let (bl, bu) = ((b - hg).max(0.0), (b + hg).min(1.0));
        let gb = (f(bu, phi) - f(bl, phi)) / (bu - bl);
        let gp = (f(b, phi + hg) - f(b, phi - hg)) / (2.0 * hg);
        grad_norm = gb.hypot(gp);
        if grad_norm < opts.grad_tol * scale {
            converged = true;
            break;
        }
        let (bl, bu) = ((b - hh).max(0.0), (b + hh).min(1.0));
        let bm = 0.5 * (bl + bu);
        let hb = 0.5 * (bu - bl);
        let fbb = (f(bu, phi) - 2.0 * f(bm, phi) + f(bl, phi)) / (hb * hb);
        let fpp = (f(b, phi + hh) - 2.0 * fx + f(b, phi - hh)) / (hh * hh);
        let fbp = (f(bu, phi + hh) - f(bu, phi - hh) - f(bl, phi + hh) + f(bl, phi - hh))
            / (4.0 * hb * hh);
        let det = fbb * fpp - fbp * fbp;
        let (mut sb, mut sp) = if fbb < 0.0 && det > 0.0 {
            (-(fpp * gb - fbp * gp) / det, -(-fbp * gb + fbb * gp) / det)
        } else {
            let step = 1e-3 / grad_norm;
            (gb * step, gp * step)
        };
        let mut improved = false;
        for _ in 0..40 {
            let nb = (b + sb).clamp(0.0, 1.0);
            let np = phi + sp;
            let fn_ = f(nb, np);
            if fn_ >= fx {
                improved = fn_ > fx || (nb, np) != (b, phi);
                b = nb;
                phi = np;
                fx = fn_;
                break;
            }
            sb *= 0.5;
            sp *= 0.5;
        }
        if !improved {
            break;
        }
    }

    let basis = BasisPair::new(b.clamp(0.0, 1.0), phi)
        .expect("clamped b")
        .canonical();
    Maximizer {
        basis,
        value: fx,
        value_normalized: fx / scale,
        grad_norm,
        iterations,
        converged,
    }
}

/// Basis pair maximizing ‖ΔH‖: coarse grid, then Newton refinement with
/// finite-difference derivatives.
pub fn maximize_delta_h(p: &ModelParams) -> Maximizer {
    maximize_delta_h_with(p, &MaximizeOptions::default())
}

pub fn maximize_delta_h_with(p: &ModelParams, opts: &MaximizeOptions) -> Maximizer {
    let (_, b, phi) = grid_argmax(Objective::Full, p, opts.grid_b, opts.grid_phi);
    refine(Objective::Full, p, b, phi, opts)
}

/// Maximizer of ‖ΔH − ΔH^S I‖, i.e. with the c-number part of ΔH dropped.
pub fn without_scalar_term(p: &ModelParams) -> Maximizer {
    let opts = MaximizeOptions::default();
    let (_, b, phi) = grid_argmax(Objective::WithoutScalar, p, opts.grid_b, opts.grid_phi);
    refine(Objective::WithoutScalar, p, b, phi, &opts)
}

/// Maximizer plus the quantities reported per ε in a theory sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryPoint {
    pub epsilon: f64,
    pub maximizer: Maximizer,
    pub norm_dk: Option<f64>,
    pub theta_vs_hs: f64,
    pub theta_vs_hi: f64,
    pub r_at_max: Option<f64>,
}

pub fn theory_point(p: &ModelParams) -> TheoryPoint {
    use crate::pointer::angle_to_basis;
    let m = maximize_delta_h(p);
    let alpha = m.basis.alpha();
    TheoryPoint {
        epsilon: p.epsilon(),
        maximizer: m,
        norm_dk: delta_k(&m.basis, p).ok().map(|k| k.norm()),
        theta_vs_hs: angle_to_basis(&hs_eigenbasis(p), &alpha),
        theta_vs_hi: angle_to_basis(&hi_eigenbasis(), &alpha),
        r_at_max: ratio_r(&m.basis, p).ok(),
    }
}
