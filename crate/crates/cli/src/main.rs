use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use plab_cli::experiment::{oracle_compare, run_theory, run_typicality};
use plab_cli::output::{self, manifest_hash, write_file, write_manifest};
use plab_cli::{run_single, run_sweep, CliError, ExperimentConfig};
use plab_core::TypicalEnsembleSpec;

#[derive(Parser)]
#[command(name = "plab", version, about = "Pointer-state experiments on a qubit + kicked-rotor environment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Run at this single ε instead of the configured list.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    n_rotor: Option<usize>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Overrides rotor_seed (or the typicality seed).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one ε and write trajectory, traces, summary and checkpoint.
    Run(Common),
    /// Run every ε of the list and write the consolidated sweep table.
    Sweep(Common),
    /// Monte Carlo over typical states.
    Typicality {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4096)]
        n_env: usize,
        #[arg(long, default_value_t = 10_000)]
        n_samples: usize,
    },
    /// ‖ΔH‖ maximizer and r per ε, no dynamics.
    Theory(Common),
    /// Compare the FFT stepper with the dense one-period matrix at small N.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        n_states: usize,
        #[arg(long, default_value_t = 20)]
        n_periods: usize,
        #[arg(long, default_value_t = 1e-11)]
        tolerance: f64,
    },
}

fn load(c: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(n) = c.n_rotor {
        cfg.n_rotor = n;
    }
    if let Some(s) = c.seed {
        cfg.rotor_seed = s;
    }
    if let Some(e) = c.epsilon {
        cfg = cfg.with_epsilon(e)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let start = Instant::now();
    match cli.command {
        Command::Run(c) => {
            let cfg = load(&c)?;
            let extra = [("subcommand", "run".to_string())];
            let hash = manifest_hash(&cfg, &extra);
            let eps = cfg.epsilons[0];
            let r = run_single(&cfg, eps)?;
            output::write_run(&cfg.out_dir, "", &hash, &r)?;
            write_manifest(&cfg.out_dir, &cfg, &extra, start.elapsed().as_secs_f64())?;
            println!(
                "ε = {eps}: {} d(tilde) = {} d(H_S) = {} d(H_I) = {}",
                r.status.as_str(),
                r.d_tilde.map_or("n/a".into(), output::real),
                output::real(r.d_hs),
                output::real(r.d_hi)
            );
        }
        Command::Sweep(c) => {
            let cfg = load(&c)?;
            let extra = [("subcommand", "sweep".to_string())];
            let hash = manifest_hash(&cfg, &extra);
            let sweep = run_sweep(&cfg, c.workers)?;
            for (i, p) in sweep.points.iter().enumerate() {
                if let Ok(r) = &p.run {
                    output::write_run(&cfg.out_dir, &format!("eps_{i:03}_"), &hash, r)?;
                }
            }
            write_file(&cfg.out_dir.join("sweep.csv"), &output::sweep_csv(&hash, &sweep))?;
            write_manifest(&cfg.out_dir, &cfg, &extra, start.elapsed().as_secs_f64())?;
            let failed = sweep.points.iter().filter(|p| p.run.is_err()).count();
            println!("{} points, {failed} failed", sweep.points.len());
        }
        Command::Typicality { common, n_env, n_samples } => {
            let cfg = load(&common)?;
            let seed = common.seed.unwrap_or(0);
            let spec = TypicalEnsembleSpec::new(n_env, n_samples, seed)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let extra = [
                ("subcommand", "typicality".to_string()),
                ("n_env", n_env.to_string()),
                ("n_samples", n_samples.to_string()),
                ("seed", seed.to_string()),
            ];
            let hash = manifest_hash(&cfg, &extra);
            let report = run_typicality(&spec)?;
            let body = output::typicality_json(&hash, &report);
            write_file(&cfg.out_dir.join("typicality.json"), &body)?;
            write_manifest(&cfg.out_dir, &cfg, &extra, start.elapsed().as_secs_f64())?;
            print!("{body}");
        }
        Command::Theory(c) => {
            let cfg = load(&c)?;
            let extra = [("subcommand", "theory".to_string())];
            let hash = manifest_hash(&cfg, &extra);
            let pts = run_theory(&cfg)?;
            write_file(&cfg.out_dir.join("theory.csv"), &output::theory_csv(&hash, &pts))?;
            write_manifest(&cfg.out_dir, &cfg, &extra, start.elapsed().as_secs_f64())?;
            println!("{} points", pts.len());
        }
        Command::Oracle { common, n_states, n_periods, tolerance } => {
            let mut c = common;
            c.n_rotor = Some(c.n_rotor.unwrap_or(8));
            let cfg = load(&c)?;
            let seed = c.seed.unwrap_or(0);
            let extra = [
                ("subcommand", "oracle".to_string()),
                ("n_states", n_states.to_string()),
                ("n_periods", n_periods.to_string()),
                ("seed", seed.to_string()),
            ];
            let hash = manifest_hash(&cfg, &extra);
            let rows = cfg
                .epsilons
                .iter()
                .map(|&e| oracle_compare(cfg.params(e)?, n_states, n_periods, seed))
                .collect::<Result<Vec<_>, _>>()?;
            write_file(&cfg.out_dir.join("oracle.csv"), &output::oracle_csv(&hash, &rows))?;
            write_manifest(&cfg.out_dir, &cfg, &extra, start.elapsed().as_secs_f64())?;
            let worst = rows.iter().map(|r| r.max_error).fold(0.0, f64::max);
            println!("max amplitude error {worst:e}");
            if !(worst < tolerance) {
                return Err(CliError::Numerical(format!(
                    "oracle error {worst:e} ≥ {tolerance:e}"
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("plab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
