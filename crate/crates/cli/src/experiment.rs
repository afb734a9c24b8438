//! Experiment drivers: single runs, ε sweeps, theory sweeps, typicality and
//! the dense-propagator cross-check.

use rayon::prelude::*;

use plab_core::floquet::{dense, random_rotor_state};
use plab_core::pointer::{
    angle_to_basis, avg_distance, offdiag_trace, pointer_candidate, track_branch, OffDiagPoint,
};
use plab_core::qstate::partial_trace_env;
use plab_core::theory::{hi_eigenbasis, hs_eigenbasis, maximize_delta_h, theory_point, TheoryPoint};
use plab_core::typicality::typicality_report;
use plab_core::{
    BasisPair, Error, FloquetStepper, Maximizer, ModelParams, PointerCandidate, RdmSample,
    RdmTrajectory, TotalState, TypicalEnsembleSpec, TypicalityReport, Window,
};

use crate::config::ExperimentConfig;
use crate::CliError;

/// A resolved candidate whose window-averaged `d` exceeds this is not a
/// pointer basis.
pub const NO_PS_THRESHOLD: f64 = 0.1;

/// Tolerated norm drift before a run is aborted as a numerical failure.
pub const NORM_DRIFT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ps,
    NoPs,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Ps => "PS",
            Status::NoPs => "no-PS",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub params: ModelParams,
    pub status: Status,
    pub trajectory: RdmTrajectory,
    pub window: Window,
    pub candidate: Option<PointerCandidate>,
    /// Set when the candidate could not be resolved.
    pub candidate_error: Option<String>,
    pub hs_basis: BasisPair,
    pub hi_basis: BasisPair,
    pub maximizer: Maximizer,
    pub d_tilde: Option<f64>,
    pub d_hs: f64,
    pub d_hi: f64,
    pub theta_tilde_hs: Option<f64>,
    pub theta_tilde_hi: Option<f64>,
    pub theta_tilde_max: Option<f64>,
    pub theta_max_hs: f64,
    pub theta_max_hi: f64,
    /// `|ρ_αβ|` along the run in the tilde, H_S and H_I bases.
    pub offdiag_tilde: Option<Vec<OffDiagPoint>>,
    pub offdiag_hs: Vec<OffDiagPoint>,
    pub offdiag_hi: Vec<OffDiagPoint>,
    pub final_state: TotalState,
    pub final_step: u64,
}

impl RunResult {
    pub fn epsilon(&self) -> f64 {
        self.params.epsilon()
    }

    pub fn crossings(&self) -> usize {
        self.trajectory.crossings().len()
    }

    pub fn tilde_basis(&self) -> Option<BasisPair> {
        self.candidate.as_ref().map(|c| c.basis())
    }
}

fn numerical(e: Error) -> CliError {
    CliError::Numerical(e.to_string())
}

/// Evolves the configured initial state and records the reduced state every
/// `stride` periods (and at step 0).
pub fn simulate(
    config: &ExperimentConfig,
    params: ModelParams,
) -> Result<(Vec<RdmSample>, TotalState), CliError> {
    let rotor = random_rotor_state(params.n_rotor(), config.rotor_seed);
    let psi = TotalState::product(config.system_state(), config.ancilla_state(), &rotor)
        .map_err(numerical)?;
    let stepper = FloquetStepper::new(params);
    let stride = config.stride;
    let mut samples = Vec::with_capacity((config.n_steps / stride + 1) as usize);
    samples.push(RdmSample {
        step: 0,
        rdm: partial_trace_env(&psi),
    });
    let mut state = psi;
    let n_steps = usize::try_from(config.n_steps).map_err(|_| CliError::Config("n_steps too large".into()))?;
    stepper
        .evolve_in_place(&mut state, n_steps, |k, s| {
            let k = k as u64;
            if k % stride == 0 {
                let drift = (s.norm_sqr() - 1.0).abs();
                if !(drift <= NORM_DRIFT_TOL) {
                    return Err(format!("norm drift {drift:e} at step {k}"));
                }
                samples.push(RdmSample {
                    step: k,
                    rdm: partial_trace_env(s),
                });
            }
            Ok(())
        })
        .map_err(numerical)?;
    Ok((samples, state))
}

pub fn run_single(config: &ExperimentConfig, epsilon: f64) -> Result<RunResult, CliError> {
    let params = config.params(epsilon)?;
    let window = Window::new(config.t_a, config.t_b).map_err(|e| CliError::Config(e.to_string()))?;
    let (samples, final_state) = simulate(config, params)?;
    let trajectory = track_branch(samples).map_err(numerical)?;

    let (candidate, candidate_error) = match pointer_candidate(&trajectory, window) {
        Ok(c) => (Some(c), None),
        Err(e @ Error::CandidateUnresolved { .. }) => (None, Some(e.to_string())),
        Err(e @ Error::WindowTooSparse { .. }) => return Err(CliError::Config(e.to_string())),
        Err(e) => return Err(numerical(e)),
    };
    let hs_basis = hs_eigenbasis(&params);
    let hi_basis = hi_eigenbasis();
    let maximizer = maximize_delta_h(&params);
    let tilde = candidate.as_ref().map(|c| c.basis());

    let d_tilde = tilde.map(|b| avg_distance(&trajectory, &b, window));
    let d_hs = avg_distance(&trajectory, &hs_basis, window);
    let d_hi = avg_distance(&trajectory, &hi_basis, window);
    let status = match d_tilde {
        Some(d) if d <= NO_PS_THRESHOLD => Status::Ps,
        _ => Status::NoPs,
    };
    let t0 = candidate.as_ref().map(|c| c.tilde_0);
    let max_alpha = maximizer.basis.alpha();

    Ok(RunResult {
        params,
        status,
        window,
        theta_tilde_hs: t0.map(|v| angle_to_basis(&hs_basis, &v)),
        theta_tilde_hi: t0.map(|v| angle_to_basis(&hi_basis, &v)),
        theta_tilde_max: t0.map(|v| angle_to_basis(&maximizer.basis, &v)),
        theta_max_hs: angle_to_basis(&hs_basis, &max_alpha),
        theta_max_hi: angle_to_basis(&hi_basis, &max_alpha),
        offdiag_tilde: tilde.map(|b| offdiag_trace(trajectory.samples(), &b)),
        offdiag_hs: offdiag_trace(trajectory.samples(), &hs_basis),
        offdiag_hi: offdiag_trace(trajectory.samples(), &hi_basis),
        candidate,
        candidate_error,
        hs_basis,
        hi_basis,
        maximizer,
        d_tilde,
        d_hs,
        d_hi,
        trajectory,
        final_state,
        final_step: config.n_steps,
    })
}

/// One sweep point: the run (or why it failed) plus the theory overlay.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub epsilon: f64,
    pub run: Result<RunResult, CliError>,
    pub theory: TheoryPoint,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    /// Sorted by ε, one entry per requested value.
    pub points: Vec<SweepPoint>,
}

pub fn run_sweep(config: &ExperimentConfig, workers: usize) -> Result<SweepResult, CliError> {
    if config.epsilons.len() < 2 {
        return Err(CliError::Config("a sweep needs at least two epsilon values".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let mut points: Vec<SweepPoint> = pool.install(|| {
        config
            .epsilons
            .par_iter()
            .map(|&eps| {
                let run = run_single(config, eps);
                let theory = theory_point(&config.params(eps).expect("validated"));
                SweepPoint { epsilon: eps, run, theory }
            })
            .collect()
    });
    points.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    Ok(SweepResult { points })
}

pub fn run_theory(config: &ExperimentConfig) -> Result<Vec<TheoryPoint>, CliError> {
    let mut eps = config.epsilons.clone();
    eps.sort_by(f64::total_cmp);
    eps.par_iter()
        .map(|&e| Ok(theory_point(&config.params(e)?)))
        .collect()
}

pub fn run_typicality(spec: &TypicalEnsembleSpec) -> Result<TypicalityReport, CliError> {
    typicality_report(spec).map_err(numerical)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub epsilon: f64,
    pub n_rotor: usize,
    pub n_states: usize,
    pub n_periods: usize,
    pub max_error: f64,
}

/// Largest amplitude difference between the FFT stepper and the dense
/// one-period matrix over random initial states.
pub fn oracle_compare(
    params: ModelParams,
    n_states: usize,
    n_periods: usize,
    seed: u64,
) -> Result<OracleRow, CliError> {
    if params.n_rotor() > 64 {
        return Err(CliError::Config(format!(
            "dense oracle limited to N ≤ 64, got {}",
            params.n_rotor()
        )));
    }
    let n = params.n_rotor();
    let u = dense::propagator(&params);
    let stepper = FloquetStepper::new(params);
    let mut worst = 0.0f64;
    for k in 0..n_states as u64 {
        let amps = random_rotor_state(4 * n, seed.wrapping_add(k));
        let mut fast = TotalState::from_amplitudes(amps).map_err(numerical)?;
        let mut slow = fast.amplitudes().to_vec();
        let mut scratch = stepper.scratch();
        for _ in 0..n_periods {
            stepper.step_in_place(&mut fast, &mut scratch).map_err(numerical)?;
            slow = dense::apply(&u, &slow);
            let d = fast
                .amplitudes()
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            worst = worst.max(d);
        }
    }
    Ok(OracleRow {
        epsilon: params.epsilon(),
        n_rotor: n,
        n_states,
        n_periods,
        max_error: worst,
    })
}
