//! Monte Carlo over typical total states.
//!
//! A typical vector of `C² ⊗ C^{n_E}` has i.i.d. Gaussian real and imaginary
//! parts, so its reduced state carries no memory of any particular system
//! basis. Its statistics set the baseline for "no pointer state".

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pointer::distance_closed_form;
use crate::qstate::{BasisPair, Rdm2};

/// Sample count required by the estimators.
pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TypicalEnsembleSpec {
    n_env: usize,
    n_samples: usize,
    seed: u64,
}

impl TypicalEnsembleSpec {
    pub fn new(n_env: usize, n_samples: usize, seed: u64) -> Result<Self> {
        if n_env < 2 {
            return Err(Error::InvalidParameter(format!("n_env = {n_env} < 2")));
        }
        if n_samples < 1 {
            return Err(Error::InvalidParameter("n_samples = 0".into()));
        }
        Ok(TypicalEnsembleSpec {
            n_env,
            n_samples,
            seed,
        })
    }

    pub fn n_env(&self) -> usize {
        self.n_env
    }
    pub fn n_samples(&self) -> usize {
        self.n_samples
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Reduced state of draw `draw`, in the coordinates of the fixed `(α, β)`
/// pair the vector was drawn in. Draw `k` uses stream `k` of the seeded
/// generator, so draws are independent of evaluation order.
pub fn sample_typical_rdm(spec: &TypicalEnsembleSpec, draw: u64) -> Rdm2 {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(draw);
    let g = Normal::new(0.0, 0.5f64.sqrt()).expect("valid normal");
    let n = spec.n_env;
    let mut c = Vec::with_capacity(2 * n);
    for _ in 0..2 * n {
        let re = g.sample(&mut rng);
        let im = g.sample(&mut rng);
        c.push(C64::new(re, im));
    }
    let norm2: f64 = c.iter().map(|z| z.norm_sqr()).sum();
    let s = 1.0 / norm2.sqrt();
    let (ca, cb) = c.split_at(n);
    let mut raa = 0.0;
    let mut rbb = 0.0;
    let mut rab = C64::new(0.0, 0.0);
    for (x, y) in ca.iter().zip(cb) {
        let (x, y) = (x * s, y * s);
        raa += x.norm_sqr();
        rbb += y.norm_sqr();
        rab += x * y.conj();
    }
    Rdm2::new(raa, rbb, rab)
}

/// Per-draw statistics against `basis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawStats {
    /// `|ρ_αβ|²`.
    pub offdiag_sqr: f64,
    /// `δρ = |ρ_αα − ρ_ββ|`.
    pub diag_diff: f64,
    pub d: f64,
}

pub fn draw_stats(rho: &Rdm2, basis: &BasisPair) -> DrawStats {
    let (raa, rbb, rab) = rho.in_basis(basis);
    DrawStats {
        offdiag_sqr: rab.norm_sqr(),
        diag_diff: (raa - rbb).abs(),
        d: distance_closed_form(rho, basis),
    }
}

/// All draws of the ensemble, evaluated against `basis`, in draw order.
pub fn sample_stats(spec: &TypicalEnsembleSpec, basis: &BasisPair) -> Vec<DrawStats> {
    (0..spec.n_samples as u64)
        .into_par_iter()
        .map(|k| draw_stats(&sample_typical_rdm(spec, k), basis))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    /// `None` below two samples.
    pub se: Option<f64>,
}

fn mean(xs: impl Iterator<Item = f64>, n: usize) -> f64 {
    xs.sum::<f64>() / n as f64
}

/// `⟨|ρ_αβ|²⟩ / ⟨δρ²⟩`, delta-method standard error.
fn ratio_of(stats: &[DrawStats]) -> Result<Estimate> {
    let n = stats.len();
    let mx = mean(stats.iter().map(|s| s.offdiag_sqr), n);
    let my = mean(stats.iter().map(|s| s.diag_diff.powi(2)), n);
    if !(my > 0.0) {
        return Err(Error::UndefinedRatio);
    }
    let r = mx / my;
    let se = (n >= 2).then(|| {
        let nf = n as f64;
        let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
        for s in stats {
            let dx = s.offdiag_sqr - mx;
            let dy = s.diag_diff.powi(2) - my;
            sxx += dx * dx;
            syy += dy * dy;
            sxy += dx * dy;
        }
        let (sxx, syy, sxy) = (sxx / (nf - 1.0), syy / (nf - 1.0), sxy / (nf - 1.0));
        ((sxx - 2.0 * r * sxy + r * r * syy) / (my * my * nf)).max(0.0).sqrt()
    });
    Ok(Estimate { value: r, se })
}

fn avg_d_of(stats: &[DrawStats]) -> Estimate {
    let n = stats.len();
    let m = mean(stats.iter().map(|s| s.d), n);
    let se = (n >= 2).then(|| {
        let var = stats.iter().map(|s| (s.d - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        (var / n as f64).sqrt()
    });
    Estimate { value: m, se }
}

fn check_samples(spec: &TypicalEnsembleSpec) -> Result<()> {
    if spec.n_samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: spec.n_samples,
            needed: MIN_SAMPLES,
        });
    }
    Ok(())
}

pub fn estimate_ratio(spec: &TypicalEnsembleSpec) -> Result<Estimate> {
    estimate_ratio_in(spec, &BasisPair::sigma_z())
}

pub fn estimate_ratio_in(spec: &TypicalEnsembleSpec, basis: &BasisPair) -> Result<Estimate> {
    check_samples(spec)?;
    ratio_of(&sample_stats(spec, basis))
}

pub fn estimate_avg_d(spec: &TypicalEnsembleSpec) -> Result<Estimate> {
    estimate_avg_d_in(spec, &BasisPair::sigma_z())
}

pub fn estimate_avg_d_in(spec: &TypicalEnsembleSpec, basis: &BasisPair) -> Result<Estimate> {
    check_samples(spec)?;
    Ok(avg_d_of(&sample_stats(spec, basis)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypicalityReport {
    pub n_env: usize,
    pub n_samples: usize,
    pub ratio: f64,
    pub ratio_se: Option<f64>,
    pub avg_d: f64,
    pub avg_d_se: Option<f64>,
    pub seed: u64,
}

/// Both estimates from one pass. Accepts any sample count; standard errors
/// are absent for a single draw.
pub fn typicality_report(spec: &TypicalEnsembleSpec) -> Result<TypicalityReport> {
    let stats = sample_stats(spec, &BasisPair::sigma_z());
    let ratio = ratio_of(&stats)?;
    let d = avg_d_of(&stats);
    Ok(TypicalityReport {
        n_env: spec.n_env,
        n_samples: spec.n_samples,
        ratio: ratio.value,
        ratio_se: ratio.se,
        avg_d: d.value,
        avg_d_se: d.se,
        seed: spec.seed,
    })
}
