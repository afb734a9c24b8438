//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use plab_cli::experiment::{oracle_compare, run_single, RunResult, Status};
use plab_cli::ExperimentConfig;
use plab_core::pointer::{angle_to_basis, distance_closed_form, paired_distance};
use plab_core::qstate::Rdm2;
use plab_core::theory::{
    block_hamiltonians, delta_h, delta_j, delta_k_definitional, hi_eigenbasis, hs_eigenbasis,
    maximize_delta_h, ratio_r, y_operator, y_operator_direct,
};
use plab_core::typicality::{estimate_avg_d, estimate_ratio};
use plab_core::{BasisPair, ModelParams, TypicalEnsembleSpec};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.random_range(lo.log10()..hi.log10()))
}

fn c1_oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    for n in [4usize, 8, 16] {
        for eps in [0.1, 2000.0, 1e4] {
            let p = ModelParams::reference(eps, n).unwrap();
            let row = oracle_compare(p, 50, 20, 1000 * n as u64).unwrap();
            worst = worst.max(row.max_error);
        }
    }
    let dt = secs(t.elapsed());
    outcome(
        worst < 1e-11 && dt < 10.0,
        format!("max amplitude error {worst:.2e} (< 1e-11), {dt:.2} s (< 10 s)"),
    )
}

fn c2_unitarity() -> Outcome {
    let t = Instant::now();
    let p = ModelParams::reference(2000.0, 512).unwrap();
    let stepper = plab_core::FloquetStepper::new(p);
    let amps = plab_core::floquet::random_rotor_state(2048, 5);
    let mut psi = plab_core::TotalState::from_amplitudes(amps).unwrap();
    let mut worst = 0.0f64;
    stepper
        .evolve_in_place(&mut psi, 10_000, |_, s| {
            worst = worst.max((s.norm_sqr().sqrt() - 1.0).abs());
            Ok(())
        })
        .unwrap();
    let dt = secs(t.elapsed());
    outcome(
        worst < 1e-10 && dt < 30.0,
        format!("norm drift {worst:.2e} over 1e4 periods at N = 512 (< 1e-10), {dt:.2} s (< 30 s)"),
    )
}

fn c3_identities() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut dj, mut dy, mut dk) = (0.0f64, 0.0f64, 0.0f64);
    let mut redraws = 0;
    let mut done = 0;
    while done < 1000 {
        let eps = log_uniform(&mut rng, 0.1, 1e6);
        let basis = BasisPair::new(rng.random_range(0.0..=1.0), rng.random_range(0.0..2.0 * PI)).unwrap();
        let p = ModelParams::reference(eps, 4096).unwrap();
        let (y, yd, kdef) = match (
            y_operator(&basis, &p),
            y_operator_direct(&basis, &p),
            delta_k_definitional(&basis, &p),
        ) {
            (Ok(a), Ok(b), Ok(c)) => (a, b, c),
            _ => {
                redraws += 1;
                continue;
            }
        };
        let bh = block_hamiltonians(&basis, &p);
        dj = dj.max(delta_j(&basis, &p).norm() / bh.h_ab.norm().powi(2));
        dy = dy.max((y - yd).norm() / y.norm().max(yd.norm()));
        let dh = delta_h(&basis, &p);
        dk = dk.max((kdef + dh - y).norm() / kdef.norm().max(dh.norm()));
        done += 1;
    }
    let dt = secs(t.elapsed());
    outcome(
        dj < 1e-12 && dy < 1e-9 && dk < 1e-9 && dt < 5.0,
        format!(
            "max rel |ΔJ| {dj:.1e} (< 1e-12), |Y − Y_direct| {dy:.1e} (< 1e-9), |ΔK + ΔH − Y| {dk:.1e} (< 1e-9); {redraws} singular redraws; {dt:.2} s (< 5 s)"
        ),
    )
}

fn c4_maximizer_limits() -> Outcome {
    let t = Instant::now();
    let weak = ModelParams::reference(0.1, 4096).unwrap();
    let strong = ModelParams::reference(1e6, 4096).unwrap();
    let th_weak = angle_to_basis(&hs_eigenbasis(&weak), &maximize_delta_h(&weak).basis.alpha());
    let th_strong = angle_to_basis(&hi_eigenbasis(), &maximize_delta_h(&strong).basis.alpha());
    let mut r_max = 0.0f64;
    let mut undefined = 0;
    for k in 0..=100 {
        let eps = 10f64.powf(-1.0 + k as f64 / 20.0);
        let p = ModelParams::reference(eps, 4096).unwrap();
        match ratio_r(&maximize_delta_h(&p).basis, &p) {
            Ok(r) => r_max = r_max.max(r),
            Err(_) => undefined += 1,
        }
    }
    let dt = secs(t.elapsed());
    outcome(
        th_weak < 1e-3 && th_strong < 1e-3 && r_max < 0.05 && undefined == 0 && dt < 10.0,
        format!(
            "θ(max, H_S) at ε = 0.1: {th_weak:.1e}; θ(max, H_I) at ε = 1e6: {th_strong:.1e} (< 1e-3); max r over 101 ε in [0.1, 1e4]: {r_max:.1e} (< 0.05, {undefined} undefined); {dt:.2} s (< 10 s)"
        ),
    )
}

struct Point {
    eps: f64,
    run: RunResult,
    seconds: f64,
}

fn sweep(cfg: &ExperimentConfig, eps: &[f64]) -> Vec<Point> {
    eps.iter()
        .map(|&e| {
            let t = Instant::now();
            let run = run_single(cfg, e).expect("run succeeds");
            Point {
                eps: e,
                run,
                seconds: secs(t.elapsed()),
            }
        })
        .collect()
}

struct Bands {
    weak_max: f64,
    strong_max: f64,
    deviates_at: Option<f64>,
    track_max: f64,
    missing: usize,
}

fn bands(points: &[Point]) -> Bands {
    let mut b = Bands {
        weak_max: 0.0,
        strong_max: 0.0,
        deviates_at: None,
        track_max: 0.0,
        missing: 0,
    };
    for p in points {
        let (Some(hs), Some(hi), Some(tm)) =
            (p.run.theta_tilde_hs, p.run.theta_tilde_hi, p.run.theta_tilde_max)
        else {
            b.missing += 1;
            continue;
        };
        if p.eps <= 10.0 {
            b.weak_max = b.weak_max.max(hs);
        }
        if p.eps >= 5e3 {
            b.strong_max = b.strong_max.max(hi);
        }
        if (1e2..=5e3).contains(&p.eps) {
            if hs > 0.1 && hi > 0.1 && b.deviates_at.is_none() {
                b.deviates_at = Some(p.eps);
            }
            b.track_max = b.track_max.max(tm);
        }
    }
    b
}

fn grid() -> Vec<f64> {
    let mut eps = vec![0.1, 1.0, 10.0];
    // Ten points per decade across [1e2, 5e3].
    let mut k = 0;
    loop {
        let e = 100.0 * 10f64.powf(k as f64 / 10.0);
        if e > 5e3 * (1.0 + 1e-12) {
            break;
        }
        eps.push(e);
        k += 1;
    }
    eps.extend([5e3, 1e4]);
    eps
}

fn c5_fig1(full: &[Point], scaled: &[Point]) -> Outcome {
    let f = bands(full);
    let s = bands(scaled);
    let full_worst = full.iter().map(|p| p.seconds).fold(0.0, f64::max);
    let scaled_worst = scaled.iter().map(|p| p.seconds).fold(0.0, f64::max);
    let full_ok = f.missing == 0
        && f.weak_max < 0.05
        && f.strong_max < 0.1
        && f.deviates_at.is_some()
        && f.track_max <= 0.15
        && full_worst <= 600.0;
    let scaled_ok = s.missing == 0
        && s.weak_max < 0.05
        && s.strong_max < 0.1
        && s.deviates_at.is_some()
        && s.track_max <= 0.15
        && scaled_worst <= 60.0;
    outcome(
        full_ok && scaled_ok,
        format!(
            "N = 4096, {} ε: θ(tilde, H_S) ≤ {:.3} for ε ≤ 10 (< 0.05); θ(tilde, H_I) ≤ {:.3} for ε ≥ 5e3 (< 0.1); deviates from both at ε = {:?}; θ(tilde, max) ≤ {:.3} (≤ 0.15); {:.1} s/point (≤ 600 s). \
             N = 1024: {:.3} / {:.3} / deviates at {:?} / tracking {:.3} (≤ 0.15); {:.1} s/point (≤ 60 s)",
            full.len(),
            f.weak_max,
            f.strong_max,
            f.deviates_at,
            f.track_max,
            full_worst,
            s.weak_max,
            s.strong_max,
            s.deviates_at,
            s.track_max,
            scaled_worst
        ),
    )
}

/// Time at which the 100-period running mean of `|ρ_01|` has lost 80% of
/// its initial excess over the plateau.
fn decay_time(steps: &[u64], x: &[f64], plateau: f64, stride: u64) -> Option<u64> {
    let k = (100 / stride).max(1) as usize;
    let sm: Vec<f64> = x.windows(k).map(|w| w.iter().sum::<f64>() / k as f64).collect();
    let thr = plateau + 0.2 * (sm[0] - plateau);
    sm.iter().position(|&v| v < thr).map(|i| steps[i])
}

fn window_mean(run: &RunResult, pick: impl Fn(usize) -> f64) -> f64 {
    let idx: Vec<usize> = run
        .trajectory
        .samples()
        .iter()
        .enumerate()
        .filter(|(_, s)| run.window.contains(s.step))
        .map(|(i, _)| i)
        .collect();
    idx.iter().map(|&i| pick(i)).sum::<f64>() / idx.len() as f64
}

fn c6_inset(cfg: &ExperimentConfig) -> Outcome {
    let run = run_single(cfg, 2000.0).expect("run succeeds");
    let Some(tilde) = run.offdiag_tilde.as_ref() else {
        return outcome(false, "pointer candidate unresolved at ε = 2000".into());
    };
    let pt = window_mean(&run, |i| tilde[i].offdiag);
    let phs = window_mean(&run, |i| run.offdiag_hs[i].offdiag);
    let phi = window_mean(&run, |i| run.offdiag_hi[i].offdiag);
    let steps: Vec<u64> = tilde.iter().map(|p| p.step).collect();
    let xs: Vec<f64> = tilde.iter().map(|p| p.offdiag).collect();
    let td = decay_time(&steps, &xs, pt, cfg.stride);
    let in_band = td.is_some_and(|t| (300..=900).contains(&t));
    outcome(
        in_band && pt < phs && pt < phi,
        format!(
            "ε = 2000: decay to plateau at {td:?} periods (300..=900); plateau |ρ_01| tilde {pt:.3e} < H_S {phs:.3e} and < H_I {phi:.3e}"
        ),
    )
}

fn c7_fig2(full: &[Point], cfg_l1: &ExperimentConfig) -> Outcome {
    let mut worst_margin = f64::INFINITY;
    let mut fails = Vec::new();
    for p in full.iter().filter(|p| (1e2..=5e3).contains(&p.eps)) {
        let floor = p.run.d_hs.min(p.run.d_hi);
        match p.run.d_tilde {
            Some(d) if d < floor => worst_margin = worst_margin.min(floor - d),
            _ => fails.push(p.eps),
        }
    }
    let run = run_single(cfg_l1, 1000.0).expect("run succeeds");
    let d = run.d_tilde;
    let l1_ok = d.is_some_and(|d| (d - 0.25).abs() <= 0.05) && run.status == Status::NoPs;
    outcome(
        fails.is_empty() && l1_ok,
        format!(
            "intermediate ε: d(tilde) < min(d(H_S), d(H_I)) everywhere (smallest margin {worst_margin:.2e}, failing ε {fails:?}); λ = 1.0, ε = 1000: d = {d:?}, status {}",
            run.status.as_str()
        ),
    )
}

fn c8_typicality() -> Outcome {
    let t = Instant::now();
    let spec = TypicalEnsembleSpec::new(4096, 10_000, 0).unwrap();
    let r = estimate_ratio(&spec).unwrap();
    let d = estimate_avg_d(&spec).unwrap();
    let dt = secs(t.elapsed());
    outcome(
        (r.value - 0.5).abs() <= 0.02 && (d.value - 0.25).abs() <= 0.01 && dt < 30.0,
        format!(
            "ratio {:.4} ± {:.4} (0.5 ± 0.02), ⟨d⟩ {:.4} ± {:.4} (0.25 ± 0.01), {dt:.2} s (< 30 s)",
            r.value,
            r.se.unwrap(),
            d.value,
            d.se.unwrap()
        ),
    )
}

fn c9_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..100_000 {
        // Uniform point in the Bloch ball.
        let (x, y, z): (f64, f64, f64) = loop {
            let v = (
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if v.0 * v.0 + v.1 * v.1 + v.2 * v.2 <= 1.0 {
                break v;
            }
        };
        let rho = Rdm2::new(0.5 * (1.0 + z), 0.5 * (1.0 - z), num_complex::Complex64::new(0.5 * x, -0.5 * y));
        let basis = BasisPair::new(rng.random_range(0.0..=1.0), rng.random_range(0.0..2.0 * PI)).unwrap();
        let eig = paired_distance(&rho.eig.vectors[0], &basis);
        worst = worst.max((eig - distance_closed_form(&rho, &basis)).abs());
    }
    outcome(worst < 1e-10, format!("max |closed form − eigen route| {worst:.2e} over 1e5 RDMs (< 1e-10)"))
}

fn main() {
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let mut report = |k: usize, o: Outcome| {
        println!("{} criterion {k}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((k, o));
    };
    report(1, c1_oracle_equivalence());
    report(2, c2_unitarity());
    report(3, c3_identities());
    report(4, c4_maximizer_limits());

    let full_cfg = ExperimentConfig::default();
    let scaled_cfg = ExperimentConfig {
        n_rotor: 1024,
        n_steps: 10_000,
        t_a: 7_500,
        t_b: 10_000,
        stride: 1,
        ..ExperimentConfig::default()
    };
    let eps = grid();
    let full = sweep(&full_cfg, &eps);
    let scaled = sweep(&scaled_cfg, &eps);
    report(5, c5_fig1(&full, &scaled));
    report(6, c6_inset(&full_cfg));
    let l1_cfg = ExperimentConfig {
        lambda: 1.0,
        ..ExperimentConfig::default()
    };
    report(7, c7_fig2(&full, &l1_cfg));
    report(8, c8_typicality());
    report(9, c9_closed_form());

    let failed: Vec<usize> = results.iter().filter(|(_, o)| !o.pass).map(|(k, _)| *k).collect();
    println!(
        "acceptance: {}/{} criteria pass",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
