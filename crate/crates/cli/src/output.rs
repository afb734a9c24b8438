//! CSV / JSON writers and run manifests.
//!
//! Reals are written as `{:.16e}` (17 significant digits). Every CSV starts
//! with `# manifest <sha256>`; JSON documents carry `manifest_sha256`.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use sha2::{Digest, Sha256};

use plab_core::floquet::checkpoint::write_checkpoint;
use plab_core::theory::TheoryPoint;
use plab_core::TypicalityReport;

use crate::config::ExperimentConfig;
use crate::experiment::{OracleRow, RunResult, SweepResult};
use crate::CliError;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), real)
}

/// Hash of everything that determines the outputs: canonical config,
/// subcommand-specific settings and code version. Wall time is excluded.
pub fn manifest_hash(config: &ExperimentConfig, extra: &[(&str, String)]) -> String {
    hex::encode(Sha256::digest(manifest_text(config, extra).as_bytes()))
}

fn manifest_text(config: &ExperimentConfig, extra: &[(&str, String)]) -> String {
    let mut s = config.canonical();
    for (k, v) in extra {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "code_version = {CODE_VERSION}");
    s
}

fn io(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn write(path: &Path, body: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, body).map_err(io)
}

/// Minimal flat JSON object builder with fixed number formatting.
#[derive(Default)]
pub struct JsonObject {
    fields: Vec<(String, String)>,
}

impl JsonObject {
    pub fn real(mut self, k: &str, v: f64) -> Self {
        let v = if v.is_finite() { real(v) } else { "null".into() };
        self.fields.push((k.into(), v));
        self
    }
    pub fn opt_real(self, k: &str, v: Option<f64>) -> Self {
        self.real(k, v.unwrap_or(f64::NAN))
    }
    pub fn int(mut self, k: &str, v: u64) -> Self {
        self.fields.push((k.into(), v.to_string()));
        self
    }
    pub fn str(mut self, k: &str, v: &str) -> Self {
        self.fields
            .push((k.into(), serde_json::to_string(v).expect("string encodes")));
        self
    }
    pub fn opt_str(mut self, k: &str, v: Option<&str>) -> Self {
        let v = v.map_or_else(|| "null".into(), |s| serde_json::to_string(s).expect("string encodes"));
        self.fields.push((k.into(), v));
        self
    }
    pub fn raw(mut self, k: &str, v: String) -> Self {
        self.fields.push((k.into(), v));
        self
    }
    pub fn render(&self) -> String {
        let mut s = String::from("{\n");
        for (i, (k, v)) in self.fields.iter().enumerate() {
            let sep = if i + 1 == self.fields.len() { "" } else { "," };
            let _ = writeln!(s, "  {}: {v}{sep}", serde_json::to_string(k).expect("key encodes"));
        }
        s.push_str("}\n");
        s
    }
}

pub fn write_manifest(
    dir: &Path,
    config: &ExperimentConfig,
    extra: &[(&str, String)],
    wall_time_s: f64,
) -> Result<String, CliError> {
    let hash = manifest_hash(config, extra);
    let body = JsonObject::default()
        .str("manifest_sha256", &hash)
        .str("code_version", CODE_VERSION)
        .str("config", &manifest_text(config, extra))
        .str("epsilon_grid", &config.epsilon_list)
        .int("rotor_seed", config.rotor_seed)
        .real("wall_time_s", wall_time_s)
        .render();
    write(&dir.join("manifest.json"), &body)?;
    Ok(hash)
}

pub fn trajectory_csv(hash: &str, r: &RunResult) -> String {
    let mut s = format!("# manifest {hash}\n");
    s.push_str("step,rho00,re_rho01,im_rho01,rho11,eig0,eig1,branch_re0,branch_im0,branch_re1,branch_im1\n");
    for (smp, v) in r.trajectory.samples().iter().zip(r.trajectory.branch()) {
        let m = &smp.rdm;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            smp.step,
            real(m.m00),
            real(m.m01.re),
            real(m.m01.im),
            real(m.m11),
            real(m.eig.values[0]),
            real(m.eig.values[1]),
            real(v[0].re),
            real(v[0].im),
            real(v[1].re),
            real(v[1].im)
        );
    }
    s
}

pub fn offdiag_csv(hash: &str, r: &RunResult) -> String {
    let mut s = format!("# manifest {hash}\n");
    s.push_str("step,offdiag_tilde,diagdiff_tilde,offdiag_hs,diagdiff_hs,offdiag_hi,diagdiff_hi\n");
    for (i, (hs, hi)) in r.offdiag_hs.iter().zip(&r.offdiag_hi).enumerate() {
        let (ot, dt) = match &r.offdiag_tilde {
            Some(t) => (real(t[i].offdiag), real(t[i].diag_diff)),
            None => ("nan".into(), "nan".into()),
        };
        let _ = writeln!(
            s,
            "{},{ot},{dt},{},{},{},{}",
            hs.step,
            real(hs.offdiag),
            real(hs.diag_diff),
            real(hi.offdiag),
            real(hi.diag_diff)
        );
    }
    s
}

pub fn run_summary_json(hash: &str, r: &RunResult) -> String {
    let tilde = r.tilde_basis();
    JsonObject::default()
        .str("manifest_sha256", hash)
        .real("epsilon", r.epsilon())
        .real("lambda", r.params.lambda())
        .int("n_rotor", r.params.n_rotor() as u64)
        .str("status", r.status.as_str())
        .opt_str("candidate_error", r.candidate_error.as_deref())
        .int("t_a", r.window.t_a)
        .int("t_b", r.window.t_b)
        .opt_real("tilde_b", tilde.map(|b| b.b()))
        .opt_real("tilde_phi", tilde.map(|b| b.phi()))
        .opt_real("d_tilde", r.d_tilde)
        .real("d_hs", r.d_hs)
        .real("d_hi", r.d_hi)
        .opt_real("theta_tilde_hs", r.theta_tilde_hs)
        .opt_real("theta_tilde_hi", r.theta_tilde_hi)
        .opt_real("theta_tilde_max", r.theta_tilde_max)
        .real("theta_max_hs", r.theta_max_hs)
        .real("theta_max_hi", r.theta_max_hi)
        .real("max_b", r.maximizer.basis.b())
        .real("max_phi", r.maximizer.basis.phi())
        .real("norm_dh_max", r.maximizer.value)
        .int("crossings", r.crossings() as u64)
        .int("final_step", r.final_step)
        .render()
}

/// Trajectory, off-diagonal traces, summary and final checkpoint of a run,
/// named with `prefix`.
pub fn write_run(dir: &Path, prefix: &str, hash: &str, r: &RunResult) -> Result<(), CliError> {
    write(&dir.join(format!("{prefix}trajectory.csv")), &trajectory_csv(hash, r))?;
    write(&dir.join(format!("{prefix}offdiag.csv")), &offdiag_csv(hash, r))?;
    write(&dir.join(format!("{prefix}summary.json")), &run_summary_json(hash, r))?;
    let f = fs::File::create(dir.join(format!("{prefix}final.ckpt"))).map_err(io)?;
    write_checkpoint(BufWriter::new(f), &r.params, r.final_step, &r.final_state)
        .map_err(|e| CliError::Io(e.to_string()))
}

pub fn sweep_csv(hash: &str, sweep: &SweepResult) -> String {
    let mut s = format!("# manifest {hash}\n");
    s.push_str("epsilon,status,theta_tilde_hs,theta_tilde_hi,theta_max_hs,theta_max_hi,theta_tilde_max,d_tilde,d_hs,d_hi,crossings,norm_dh_max,r_at_max\n");
    for p in &sweep.points {
        let t = &p.theory;
        let theory = format!(
            "{},{}",
            real(t.theta_vs_hs),
            real(t.theta_vs_hi)
        );
        let tail = format!("{},{}", real(t.maximizer.value), opt(t.r_at_max));
        match &p.run {
            Ok(r) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{theory},{},{},{},{},{},{tail}",
                    real(p.epsilon),
                    r.status.as_str(),
                    opt(r.theta_tilde_hs),
                    opt(r.theta_tilde_hi),
                    opt(r.theta_tilde_max),
                    opt(r.d_tilde),
                    real(r.d_hs),
                    real(r.d_hi),
                    r.crossings()
                );
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                let _ = writeln!(
                    s,
                    "{},error: {msg},nan,nan,{theory},nan,nan,nan,nan,,{tail}",
                    real(p.epsilon)
                );
            }
        }
    }
    s
}

pub fn theory_csv(hash: &str, points: &[TheoryPoint]) -> String {
    let mut s = format!("# manifest {hash}\n");
    s.push_str("epsilon,b_star,phi_star,norm_dh,norm_dh_scaled,theta_vs_HS,theta_vs_HI,r_at_max\n");
    for t in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            real(t.epsilon),
            real(t.maximizer.basis.b()),
            real(t.maximizer.basis.phi()),
            real(t.maximizer.value),
            real(t.maximizer.value_normalized),
            real(t.theta_vs_hs),
            real(t.theta_vs_hi),
            opt(t.r_at_max)
        );
    }
    s
}

pub fn typicality_json(hash: &str, r: &TypicalityReport) -> String {
    JsonObject::default()
        .int("n_env", r.n_env as u64)
        .int("n_samples", r.n_samples as u64)
        .real("ratio", r.ratio)
        .opt_real("ratio_se", r.ratio_se)
        .real("avg_d", r.avg_d)
        .opt_real("avg_d_se", r.avg_d_se)
        .int("seed", r.seed)
        .str("manifest_sha256", hash)
        .render()
}

pub fn oracle_csv(hash: &str, rows: &[OracleRow]) -> String {
    let mut s = format!("# manifest {hash}\n");
    s.push_str("epsilon,n_rotor,n_states,n_periods,max_error\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            real(r.epsilon),
            r.n_rotor,
            r.n_states,
            r.n_periods,
            real(r.max_error)
        );
    }
    s
}

pub fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    write(path, body)
}
