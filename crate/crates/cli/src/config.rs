//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_complex::Complex64 as C64;
use plab_core::qstate::{x_down, x_up};
use plab_core::{ModelParams, Vec2};

use crate::CliError;

pub const KEYS: [&str; 18] = [
    "omega_x",
    "omega_z",
    "omega_a",
    "epsilon_list",
    "lambda",
    "v_times_t",
    "n_rotor",
    "n_steps",
    "t_a",
    "t_b",
    "stride",
    "amp0_re",
    "amp0_im",
    "amp1_re",
    "amp1_im",
    "a_state",
    "rotor_seed",
    "out_dir",
];

pub const DEFAULT_EPSILON_LIST: &str = "logspace:-1:4:20";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub omega_x: f64,
    pub omega_z: f64,
    pub omega_a: f64,
    pub lambda: f64,
    pub v_times_t: f64,
    pub n_rotor: usize,
    /// As written in the config; expanded into `epsilons`.
    pub epsilon_list: String,
    pub epsilons: Vec<f64>,
    pub n_steps: u64,
    pub t_a: u64,
    pub t_b: u64,
    pub stride: u64,
    /// Coefficient of `|x₊⟩` (spin up along x).
    pub amp0: C64,
    /// Coefficient of `|x₋⟩`.
    pub amp1: C64,
    /// 0 = `|x₋⟩` (ground state of `ω_A σ_x`), 1 = `|x₊⟩`.
    pub a_state: u8,
    pub rotor_seed: u64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            omega_x: 500.0,
            omega_z: 1000.0,
            omega_a: 1500.0,
            lambda: 0.1,
            v_times_t: 90.0,
            n_rotor: 4096,
            epsilon_list: DEFAULT_EPSILON_LIST.into(),
            epsilons: parse_epsilon_list(DEFAULT_EPSILON_LIST).expect("default grid"),
            n_steps: 40_000,
            t_a: 30_000,
            t_b: 40_000,
            stride: 10,
            amp0: C64::from_polar(0.8, 5.0),
            amp1: C64::new(0.6, 0.0),
            a_state: 0,
            rotor_seed: 1,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// `a,b,c` or `logspace:LO:HI:PER_DECADE` (decades, inclusive of both ends).
pub fn parse_epsilon_list(s: &str) -> Result<Vec<f64>, CliError> {
    let s = s.trim();
    let out: Vec<f64> = if let Some(rest) = s.strip_prefix("logspace:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(cfg_err(format!("bad logspace spec {s:?}")));
        }
        let lo: f64 = parse_num(parts[0], "logspace low")?;
        let hi: f64 = parse_num(parts[1], "logspace high")?;
        let per: u32 = parts[2]
            .trim()
            .parse()
            .map_err(|_| cfg_err(format!("bad points per decade {:?}", parts[2])))?;
        if per == 0 || hi < lo {
            return Err(cfg_err(format!("empty logspace {s:?}")));
        }
        let n = ((hi - lo) * per as f64).round() as u32;
        (0..=n)
            .map(|k| 10f64.powf(lo + k as f64 / per as f64))
            .collect()
    } else {
        s.split(',')
            .map(|x| parse_num(x, "epsilon"))
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() || out.iter().any(|e| !e.is_finite() || *e < 0.0) {
        return Err(cfg_err(format!("epsilon list must be finite and ≥ 0: {s:?}")));
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(v: &str, key: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| cfg_err(format!("{key}: cannot parse {v:?}")))
}

impl ExperimentConfig {
    /// Parses the text format. Unset keys keep their defaults; unknown or
    /// repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {}: expected key = value", lineno + 1)))?;
            let k = k.trim();
            if !KEYS.contains(&k) {
                return Err(cfg_err(format!("line {}: unknown key {k:?}", lineno + 1)));
            }
            if seen.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(cfg_err(format!("line {}: duplicate key {k:?}", lineno + 1)));
            }
        }
        let mut c = ExperimentConfig::default();
        for (k, v) in &seen {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "omega_x" => self.omega_x = parse_num(v, key)?,
            "omega_z" => self.omega_z = parse_num(v, key)?,
            "omega_a" => self.omega_a = parse_num(v, key)?,
            "lambda" => self.lambda = parse_num(v, key)?,
            "v_times_t" => self.v_times_t = parse_num(v, key)?,
            "n_rotor" => self.n_rotor = parse_num(v, key)?,
            "epsilon_list" => {
                self.epsilons = parse_epsilon_list(v)?;
                self.epsilon_list = v.trim().to_string();
            }
            "n_steps" => self.n_steps = parse_num(v, key)?,
            "t_a" => self.t_a = parse_num(v, key)?,
            "t_b" => self.t_b = parse_num(v, key)?,
            "stride" => self.stride = parse_num(v, key)?,
            "amp0_re" => self.amp0.re = parse_num(v, key)?,
            "amp0_im" => self.amp0.im = parse_num(v, key)?,
            "amp1_re" => self.amp1.re = parse_num(v, key)?,
            "amp1_im" => self.amp1.im = parse_num(v, key)?,
            "a_state" => self.a_state = parse_num(v, key)?,
            "rotor_seed" => self.rotor_seed = parse_num(v, key)?,
            "out_dir" => self.out_dir = PathBuf::from(v.trim()),
            _ => return Err(cfg_err(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let n2 = self.amp0.norm_sqr() + self.amp1.norm_sqr();
        if !((n2 - 1.0).abs() <= 1e-10) {
            return Err(cfg_err(format!("|amp0|² + |amp1|² = {n2}, expected 1")));
        }
        if self.a_state > 1 {
            return Err(cfg_err(format!("a_state must be 0 or 1, got {}", self.a_state)));
        }
        if self.stride == 0 {
            return Err(cfg_err("stride must be ≥ 1"));
        }
        if self.t_a > self.t_b || self.t_b > self.n_steps {
            return Err(cfg_err(format!(
                "window [{}, {}] not inside [0, {}]",
                self.t_a, self.t_b, self.n_steps
            )));
        }
        if self.epsilons.is_empty() {
            return Err(cfg_err("empty epsilon list"));
        }
        for &e in &self.epsilons {
            self.params(e)?;
        }
        Ok(())
    }

    /// Overrides the sweep with a single value.
    pub fn with_epsilon(mut self, eps: f64) -> Result<Self, CliError> {
        self.epsilon_list = format!("{eps:.16e}");
        self.epsilons = parse_epsilon_list(&self.epsilon_list)?;
        self.validate()?;
        Ok(self)
    }

    pub fn params(&self, epsilon: f64) -> Result<ModelParams, CliError> {
        ModelParams::with_kick_times_period(
            self.omega_x,
            self.omega_z,
            self.omega_a,
            epsilon,
            self.lambda,
            self.v_times_t,
            self.n_rotor,
        )
        .map_err(|e| cfg_err(e.to_string()))
    }

    /// Initial system state in the σ_z basis.
    pub fn system_state(&self) -> Vec2 {
        let (u, d) = (x_up(), x_down());
        [
            self.amp0 * u[0] + self.amp1 * d[0],
            self.amp0 * u[1] + self.amp1 * d[1],
        ]
    }

    pub fn ancilla_state(&self) -> Vec2 {
        if self.a_state == 0 {
            x_down()
        } else {
            x_up()
        }
    }

    /// Canonical text of the configuration: every key in fixed order, reals
    /// with 17 significant digits. Parsing it back gives the same config.
    pub fn canonical(&self) -> String {
        let r = |x: f64| format!("{x:.16e}");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("omega_x", r(self.omega_x));
        kv("omega_z", r(self.omega_z));
        kv("omega_a", r(self.omega_a));
        kv("epsilon_list", self.epsilon_list.clone());
        kv("lambda", r(self.lambda));
        kv("v_times_t", r(self.v_times_t));
        kv("n_rotor", self.n_rotor.to_string());
        kv("n_steps", self.n_steps.to_string());
        kv("t_a", self.t_a.to_string());
        kv("t_b", self.t_b.to_string());
        kv("stride", self.stride.to_string());
        kv("amp0_re", r(self.amp0.re));
        kv("amp0_im", r(self.amp0.im));
        kv("amp1_re", r(self.amp1.re));
        kv("amp1_im", r(self.amp1.im));
        kv("a_state", self.a_state.to_string());
        kv("rotor_seed", self.rotor_seed.to_string());
        kv("out_dir", self.out_dir.display().to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_reference_run() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        let p = c.params(2000.0).unwrap();
        assert_eq!(p.n_rotor(), 4096);
        assert!((p.v() * p.period() - 90.0).abs() < 1e-9);
        assert_eq!(c.epsilons.len(), 101);
        assert!((c.epsilons[0] - 0.1).abs() < 1e-15 && (c.epsilons[100] - 1e4).abs() < 1e-9);
    }

    #[test]
    fn parse_round_trips_through_canonical_text() {
        let c = ExperimentConfig::parse("n_rotor = 64\nepsilon_list = 0.1, 2000\n# comment\nt_a=10\nt_b = 20\nn_steps = 20").unwrap();
        assert_eq!(c.n_rotor, 64);
        assert_eq!(c.epsilons, vec![0.1, 2000.0]);
        let back = ExperimentConfig::parse(&c.canonical()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            "bogus = 1",
            "n_rotor = 1000",
            "n_rotor = 64\nn_rotor = 64",
            "amp0_re = 1",
            "t_a = 50000",
            "stride = 0",
            "a_state = 2",
            "epsilon_list = logspace:1:0:5",
            "epsilon_list = -1",
            "no equals sign",
        ] {
            assert!(matches!(ExperimentConfig::parse(bad), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn x_amplitudes_map_to_sigma_z_coordinates() {
        let c = ExperimentConfig::default();
        let s = c.system_state();
        let n: f64 = s.iter().map(|z| z.norm_sqr()).sum();
        assert!((n - 1.0).abs() < 1e-15);
        let up = plab_core::qstate::inner(&x_up(), &s);
        assert!((up - C64::from_polar(0.8, 5.0)).norm() < 1e-15);
    }
}
