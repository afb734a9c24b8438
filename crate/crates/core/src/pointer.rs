//! Pointer-state identification from a stroboscopic RDM trajectory.
//!
//! The procedure: follow one eigenvector branch of ρ^s(t) continuously, average
//! its projector over a late-time window into ρ̄, and take the eigenbasis
//! {|ρ̃₀⟩, |ρ̃₁⟩} of ρ̄ as the candidate pointer basis. Its quality is judged by
//! the window-averaged distance `d` between the instantaneous RDM eigenbasis
//! and the candidate.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qstate::{eig_hermitian_parts, inner, BasisPair, Mat2, Rdm2, Vec2};

/// Minimum number of samples in a window for a pointer candidate.
pub const MIN_WINDOW_SAMPLES: usize = 100;

/// ρ̄ eigenvalue gap below which the candidate is unresolved.
pub const CANDIDATE_GAP_TOL: f64 = 1e-6;

/// RDM eigenvalue gap below which the branch is chosen by eigenvector overlap
/// instead of by eigenvalue rank.
pub const TRACK_GAP: f64 = 0.1;

/// Inclusive range of period indices `[t_a, t_b]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub t_a: u64,
    pub t_b: u64,
}

impl Window {
    pub fn new(t_a: u64, t_b: u64) -> Result<Self> {
        if t_a > t_b {
            return Err(Error::InvalidParameter(format!("empty window [{t_a}, {t_b}]")));
        }
        Ok(Window { t_a, t_b })
    }

    pub fn contains(&self, step: u64) -> bool {
        (self.t_a..=self.t_b).contains(&step)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdmSample {
    pub step: u64,
    pub rdm: Rdm2,
}

/// RDM samples plus the continuously tracked eigenvector branch.
#[derive(Debug, Clone, PartialEq)]
pub struct RdmTrajectory {
    samples: Vec<RdmSample>,
    branch: Vec<Vec2>,
    /// Eigenvalue rank (0 = larger) of the tracked vector at each sample.
    rank: Vec<u8>,
    crossings: Vec<usize>,
}

impl RdmTrajectory {
    pub fn samples(&self) -> &[RdmSample] {
        &self.samples
    }

    pub fn branch(&self) -> &[Vec2] {
        &self.branch
    }

    pub fn branch_rank(&self) -> &[u8] {
        &self.rank
    }

    /// Sample indices at which a crossing event was recorded.
    pub fn crossings(&self) -> &[usize] {
        &self.crossings
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// First and last sampled step.
    pub fn span(&self) -> Window {
        Window {
            t_a: self.samples.first().map_or(0, |s| s.step),
            t_b: self.samples.last().map_or(0, |s| s.step),
        }
    }

    fn in_window(&self, window: Window) -> impl Iterator<Item = usize> + '_ {
        self.samples
            .iter()
            .enumerate()
            .filter(move |(_, s)| window.contains(s.step))
            .map(|(i, _)| i)
    }
}

/// Follows one RDM eigenvector through time.
///
/// The first resolved sample starts on the larger-eigenvalue vector. While the
/// eigenvalue gap stays above [`TRACK_GAP`] the branch keeps its eigenvalue
/// rank: the spectrum only changes through entanglement, which is slow, while
/// the eigenvectors can precess by more than π/2 between stroboscopic samples.
/// Near a degeneracy (gap below `TRACK_GAP` at either sample) the branch takes
/// whichever eigenvector overlaps most with the previous choice. A crossing
/// event is recorded when the rank changes or the overlap with the previous
/// vector falls below ½. Degenerate samples inherit the previous vector.
pub fn track_branch(samples: Vec<RdmSample>) -> Result<RdmTrajectory> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty RDM trajectory".into()));
    }
    if samples.windows(2).any(|w| w[1].step <= w[0].step) {
        return Err(Error::InvalidParameter(
            "RDM samples must be strictly increasing in step".into(),
        ));
    }
    let first = samples
        .iter()
        .position(|s| !s.rdm.eig.degenerate)
        .ok_or(Error::NoTrackableBranch)?;

    let mut branch = Vec::with_capacity(samples.len());
    let mut rank = Vec::with_capacity(samples.len());
    let mut crossings = Vec::new();
    let start = samples[first].rdm.eig.vectors[0];
    for _ in 0..first {
        branch.push(start);
        rank.push(0);
    }
    branch.push(start);
    rank.push(0);

    for (i, s) in samples.iter().enumerate().skip(first + 1) {
        let prev = branch[i - 1];
        let prev_rank = rank[i - 1];
        if s.rdm.eig.degenerate {
            branch.push(prev);
            rank.push(prev_rank);
            continue;
        }
        let ov = s.rdm.eig.vectors.map(|v| inner(&prev, &v).norm_sqr());
        let gap = |r: &Rdm2| r.eig.values[0] - r.eig.values[1];
        let k = if gap(&s.rdm) >= TRACK_GAP && gap(&samples[i - 1].rdm) >= TRACK_GAP {
            prev_rank as usize
        } else if ov[0] >= ov[1] {
            0
        } else {
            1
        };
        if k as u8 != prev_rank || ov[k] < 0.5 {
            crossings.push(i);
        }
        branch.push(s.rdm.eig.vectors[k]);
        rank.push(k as u8);
    }

    Ok(RdmTrajectory {
        samples,
        branch,
        rank,
        crossings,
    })
}

/// Time-averaged branch projector and its eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointerCandidate {
    pub rho_bar: Mat2,
    /// Eigenvalues of ρ̄, descending.
    pub weights: [f64; 2],
    pub tilde_0: Vec2,
    pub tilde_1: Vec2,
    pub window: Window,
    pub n_samples: usize,
}

impl PointerCandidate {
    pub fn basis(&self) -> BasisPair {
        BasisPair::from_vector(&self.tilde_0).expect("tilde_0 is a unit vector")
    }
}

pub fn pointer_candidate(rt: &RdmTrajectory, window: Window) -> Result<PointerCandidate> {
    let idx: Vec<usize> = rt.in_window(window).collect();
    if idx.len() < MIN_WINDOW_SAMPLES {
        return Err(Error::WindowTooSparse {
            t_a: window.t_a,
            t_b: window.t_b,
            found: idx.len(),
            needed: MIN_WINDOW_SAMPLES,
        });
    }
    let (mut p00, mut p11, mut p01) = (0.0, 0.0, C64::new(0.0, 0.0));
    for &i in &idx {
        let v = rt.branch[i];
        p00 += v[0].norm_sqr();
        p11 += v[1].norm_sqr();
        p01 += v[0] * v[1].conj();
    }
    let n = idx.len() as f64;
    let (p00, p11, p01) = (p00 / n, p11 / n, p01 / n);
    let eig = eig_hermitian_parts(p00, p11, p01);
    let gap = eig.values[0] - eig.values[1];
    if gap < CANDIDATE_GAP_TOL {
        return Err(Error::CandidateUnresolved { gap });
    }
    Ok(PointerCandidate {
        rho_bar: [
            [C64::new(p00, 0.0), p01],
            [p01.conj(), C64::new(p11, 0.0)],
        ],
        weights: eig.values,
        tilde_0: eig.vectors[0],
        tilde_1: eig.vectors[1],
        window,
        n_samples: idx.len(),
    })
}

/// `D` between an RDM eigenvector `v` and the basis, pairing `v` with the
/// basis vector it overlaps by at least ½. Lies in `[0, ½]`.
pub fn paired_distance(v: &Vec2, basis: &BasisPair) -> f64 {
    let oa = inner(v, &basis.alpha()).norm_sqr();
    let ob = inner(v, &basis.beta()).norm_sqr();
    let total = oa + ob;
    (oa.min(ob) / total).clamp(0.0, 0.5)
}

/// Stroboscopic mean of the paired distance over the window. NaN if the
/// window holds no samples.
pub fn avg_distance(rt: &RdmTrajectory, basis: &BasisPair, window: Window) -> f64 {
    let (sum, n) = rt
        .in_window(window)
        .fold((0.0, 0usize), |(s, n), i| (s + paired_distance(&rt.branch[i], basis), n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Distance from the RDM eigenbasis to `basis` via the off-diagonal element
/// and the population difference in the `(α, β)` representation.
pub fn distance_closed_form(rho: &Rdm2, basis: &BasisPair) -> f64 {
    let (raa, rbb, rab) = rho.in_basis(basis);
    let x2 = rab.norm_sqr();
    if x2 == 0.0 {
        return 0.0;
    }
    let dr = (raa - rbb).abs();
    let s = dr + (dr * dr + 4.0 * x2).sqrt();
    x2 / (0.25 * s * s + x2)
}

/// `θ = arccos |⟨reference|target⟩|`, in `[0, π/2]`.
pub fn angle_theta(reference: &Vec2, target: &Vec2) -> f64 {
    inner(reference, target).norm().min(1.0).acos()
}

/// Angle from the closer of the two basis vectors to `target`.
pub fn angle_to_basis(basis: &BasisPair, target: &Vec2) -> f64 {
    angle_theta(&basis.alpha(), target).min(angle_theta(&basis.beta(), target))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffDiagPoint {
    pub step: u64,
    /// `|ρ^s_αβ|`.
    pub offdiag: f64,
    /// `|ρ^s_αα − ρ^s_ββ|`.
    pub diag_diff: f64,
}

pub fn offdiag_trace(samples: &[RdmSample], basis: &BasisPair) -> Vec<OffDiagPoint> {
    samples
        .iter()
        .map(|s| {
            let (raa, rbb, rab) = s.rdm.in_basis(basis);
            OffDiagPoint {
                step: s.step,
                offdiag: rab.norm(),
                diag_diff: (raa - rbb).abs(),
            }
        })
        .collect()
}

/// Small-coherence estimate of `d`: window mean of `|ρ_αβ|²` over the
/// squared window mean of `δρ`. Meaningful when the ratio is ≪ 1.
pub fn small_coherence_estimate(rt: &RdmTrajectory, basis: &BasisPair, window: Window) -> f64 {
    let (mut x2, mut dr, mut n) = (0.0, 0.0, 0usize);
    for i in rt.in_window(window) {
        let (raa, rbb, rab) = rt.samples[i].rdm.in_basis(basis);
        x2 += rab.norm_sqr();
        dr += (raa - rbb).abs();
        n += 1;
    }
    if n == 0 {
        return f64::NAN;
    }
    let n = n as f64;
    (x2 / n) / (dr / n).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::basis_distance;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn constant(n: u64, rdm: Rdm2) -> Vec<RdmSample> {
        (0..n).map(|step| RdmSample { step, rdm }).collect()
    }

    #[test]
    fn constant_trajectory_tracks_constant_branch() {
        let rt = track_branch(constant(200, Rdm2::new(0.8, 0.2, c(0.0, 0.0)))).unwrap();
        assert!(rt.crossings().is_empty());
        assert!(rt.branch().iter().all(|v| *v == [c(1.0, 0.0), c(0.0, 0.0)]));

        let cand = pointer_candidate(&rt, Window::new(0, 199).unwrap()).unwrap();
        assert_eq!(cand.tilde_0, [c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(avg_distance(&rt, &cand.basis(), Window::new(0, 199).unwrap()) < 1e-15);
    }

    #[test]
    fn rotating_pure_state_is_followed() {
        let samples: Vec<RdmSample> = (0..300)
            .map(|k| {
                let th = 0.01 * k as f64;
                let v = [c(th.cos(), 0.0), C64::from_polar(th.sin(), 0.3)];
                RdmSample { step: k, rdm: Rdm2::pure(&v) }
            })
            .collect();
        let rt = track_branch(samples).unwrap();
        assert!(rt.crossings().is_empty());
        for w in rt.branch().windows(2) {
            assert!(inner(&w[0], &w[1]).norm_sqr() > 0.99);
        }
    }

    #[test]
    fn fast_precession_keeps_the_dominant_branch() {
        // Partially mixed state precessing about z by 2 rad per sample: the
        // nearest-overlap vector would flip between the two eigenvectors.
        let samples: Vec<RdmSample> = (0..400)
            .map(|k| {
                let ph = 2.0 * k as f64;
                let (nx, nz) = (0.6, 0.5);
                let m01 = C64::from_polar(0.5 * nx, -ph);
                RdmSample { step: k, rdm: Rdm2::new(0.5 * (1.0 + nz), 0.5 * (1.0 - nz), m01) }
            })
            .collect();
        let rt = track_branch(samples).unwrap();
        assert!(rt.branch_rank().iter().all(|&r| r == 0));
        let cand = pointer_candidate(&rt, Window::new(0, 399).unwrap()).unwrap();
        assert!(angle_to_basis(&BasisPair::sigma_z(), &cand.tilde_0) < 0.05);
    }

    #[test]
    fn eigenvalue_crossing_is_counted_but_not_fatal() {
        // Populations pass through ½ while the eigenvectors stay fixed: the
        // branch keeps e0 but its rank changes once.
        let samples: Vec<RdmSample> = (0..21)
            .map(|k| {
                let p = 0.7 - 0.02 * k as f64 + 0.001;
                RdmSample { step: k, rdm: Rdm2::new(p, 1.0 - p, c(0.0, 0.0)) }
            })
            .collect();
        let rt = track_branch(samples).unwrap();
        assert_eq!(rt.crossings(), &[11]);
        assert_eq!(rt.branch_rank()[20], 1);
        assert!(rt.branch().iter().all(|v| (v[0] - c(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn track_branch_errors() {
        assert!(matches!(
            track_branch(constant(5, Rdm2::new(0.5, 0.5, c(0.0, 0.0)))),
            Err(Error::NoTrackableBranch)
        ));
        let mut s = constant(3, Rdm2::new(0.9, 0.1, c(0.0, 0.0)));
        s[2].step = 1;
        assert!(track_branch(s).is_err());
    }

    #[test]
    fn alternating_orthogonal_branch_is_unresolved() {
        // Build the trajectory directly: the tracked vector alternates
        // between e0 and e1 with equal weight.
        let e0 = [c(1.0, 0.0), c(0.0, 0.0)];
        let e1 = [c(0.0, 0.0), c(1.0, 0.0)];
        let samples = constant(200, Rdm2::new(0.8, 0.2, c(0.0, 0.0)));
        let rt = RdmTrajectory {
            branch: (0..200).map(|k| if k % 2 == 0 { e0 } else { e1 }).collect(),
            rank: vec![0; 200],
            crossings: Vec::new(),
            samples,
        };
        assert!(matches!(
            pointer_candidate(&rt, Window::new(0, 199).unwrap()),
            Err(Error::CandidateUnresolved { .. })
        ));
    }

    #[test]
    fn sparse_window_is_rejected() {
        let rt = track_branch(constant(50, Rdm2::new(0.8, 0.2, c(0.0, 0.0)))).unwrap();
        assert!(matches!(
            pointer_candidate(&rt, Window::new(0, 49).unwrap()),
            Err(Error::WindowTooSparse { found: 50, .. })
        ));
    }

    #[test]
    fn closed_form_limits() {
        let z = BasisPair::sigma_z();
        assert!(distance_closed_form(&Rdm2::new(0.7, 0.3, c(0.0, 0.0)), &z) < 1e-15);
        let d = distance_closed_form(&Rdm2::new(0.5, 0.5, c(0.1, 0.2)), &z);
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn angle_examples() {
        let e0 = [c(1.0, 0.0), c(0.0, 0.0)];
        let e1 = [c(0.0, 0.0), c(1.0, 0.0)];
        let h = [c(std::f64::consts::FRAC_1_SQRT_2, 0.0), c(0.0, std::f64::consts::FRAC_1_SQRT_2)];
        assert_eq!(angle_theta(&e0, &e0), 0.0);
        assert!((angle_theta(&e0, &e1) - FRAC_PI_2).abs() < 1e-15);
        assert!((angle_theta(&e0, &h) - FRAC_PI_4).abs() < 1e-12);
    }

    fn rdm_strategy() -> impl Strategy<Value = Rdm2> {
        (0.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_filter_map("psd", |(p, x, y)| {
            let q = c(x, y) * 0.5;
            // PSD iff |q|² ≤ p(1 − p).
            (q.norm_sqr() <= p * (1.0 - p)).then(|| Rdm2::new(p, 1.0 - p, q))
        })
    }

    proptest! {
        #[test]
        fn closed_form_matches_eigen_route(rho in rdm_strategy(), b in 0.0f64..=1.0, phi in 0.0f64..6.28) {
            prop_assume!(!rho.eig.degenerate);
            let basis = BasisPair::new(b, phi).unwrap();
            let via_eig = paired_distance(&rho.eig.vectors[0], &basis);
            let direct = basis_distance(&rho.eig.vectors[0], &basis.alpha()).unwrap()
                .min(basis_distance(&rho.eig.vectors[0], &basis.beta()).unwrap());
            prop_assert!((via_eig - direct).abs() < 1e-12);
            prop_assert!((distance_closed_form(&rho, &basis) - via_eig).abs() < 1e-10);
        }

        #[test]
        fn theta_symmetric_and_phase_invariant(
            a in prop::array::uniform4(-1.0f64..1.0),
            w in prop::array::uniform4(-1.0f64..1.0),
            g in 0.0f64..6.28,
        ) {
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assume!(na > 0.1 && nw > 0.1);
            let v = [c(a[0], a[1]) / na, c(a[2], a[3]) / na];
            let u = [c(w[0], w[1]) / nw, c(w[2], w[3]) / nw];
            let ph = C64::from_polar(1.0, g);
            let t = angle_theta(&v, &u);
            prop_assert!((t - angle_theta(&u, &v)).abs() < 1e-12);
            prop_assert!((t - angle_theta(&v, &[u[0] * ph, u[1] * ph])).abs() < 1e-12);
            prop_assert!((0.0..=FRAC_PI_2).contains(&t));
        }

        #[test]
        fn avg_distance_bounded(rhos in prop::collection::vec(rdm_strategy(), 1..50), b in 0.0f64..=1.0, phi in 0.0f64..6.28) {
            let samples: Vec<RdmSample> = rhos.into_iter().enumerate()
                .map(|(k, rdm)| RdmSample { step: k as u64, rdm }).collect();
            if let Ok(rt) = track_branch(samples) {
                let d = avg_distance(&rt, &BasisPair::new(b, phi).unwrap(), rt.span());
                prop_assert!((0.0..=0.5).contains(&d));
            }
        }
    }
}
