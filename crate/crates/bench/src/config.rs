//! Line-oriented `key = value` experiment configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cqnpm::solvers::Backtracking;
use cqnpm::{Formulation, Method, Sr1Params, SolverConfig, TvVariant, WaveletSpec};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryKind {
    Radial,
    Spiral,
}

impl std::fmt::Display for TrajectoryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Radial => "radial",
            Self::Spiral => "spiral",
        })
    }
}

impl FromStr for TrajectoryKind {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s {
            "radial" => Ok(Self::Radial),
            "spiral" => Ok(Self::Spiral),
            other => Err(BenchError::Config(format!("unknown trajectory '{other}'"))),
        }
    }
}

/// Largest number of Haar levels used by experiments.
pub const MAX_WAVELET_LEVELS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub size: usize,
    pub trajectory: TrajectoryKind,
    pub spokes: usize,
    pub interleaves: usize,
    pub readout: usize,
    pub coils: usize,
    pub noise_var: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    pub xi: f64,
    pub a_k: f64,
    pub outer_iters: usize,
    pub wpm_max_iter: usize,
    pub wpm_tol: f64,
    pub methods: Vec<Method>,
    pub tv_variant: TvVariant,
    pub formulation: Formulation,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    /// The bundled desk-scale problem.
    fn default() -> Self {
        Self {
            size: 64,
            trajectory: TrajectoryKind::Radial,
            spokes: 16,
            interleaves: 4,
            readout: 64,
            coils: 2,
            noise_var: 1e-2,
            lambda: 5e-4,
            alpha: 1.0,
            eta: 1e-5,
            gamma: 1.7,
            xi: 1.0,
            a_k: 1.0,
            outer_iters: 100,
            wpm_max_iter: 20,
            wpm_tol: 1e-6,
            methods: vec![Method::Cqnpm, Method::Apm],
            tv_variant: TvVariant::Iso,
            formulation: Formulation::Analysis,
            seed: 0,
            out: None,
        }
    }
}

pub const KEYS: [&str; 21] = [
    "size",
    "trajectory",
    "spokes",
    "interleaves",
    "readout",
    "coils",
    "noise_var",
    "lambda",
    "alpha",
    "eta",
    "gamma",
    "xi",
    "a_k",
    "outer_iters",
    "wpm_max_iter",
    "wpm_tol",
    "methods",
    "tv_variant",
    "formulation",
    "seed",
    "out",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, BenchError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| BenchError::Config(format!("bad value '{value}' for '{key}': {e}")))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| BenchError::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| BenchError::Config(format!("line {}: {}", lineno + 1, e.message())))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Overwrite one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), BenchError> {
        match key {
            "size" => self.size = parse_value(key, value)?,
            "trajectory" => self.trajectory = value.parse()?,
            "spokes" => self.spokes = parse_value(key, value)?,
            "interleaves" => self.interleaves = parse_value(key, value)?,
            "readout" => self.readout = parse_value(key, value)?,
            "coils" => self.coils = parse_value(key, value)?,
            "noise_var" => self.noise_var = parse_value(key, value)?,
            "lambda" => self.lambda = parse_value(key, value)?,
            "alpha" => self.alpha = parse_value(key, value)?,
            "eta" => self.eta = parse_value(key, value)?,
            "gamma" => self.gamma = parse_value(key, value)?,
            "xi" => self.xi = parse_value(key, value)?,
            "a_k" => self.a_k = parse_value(key, value)?,
            "outer_iters" => self.outer_iters = parse_value(key, value)?,
            "wpm_max_iter" => self.wpm_max_iter = parse_value(key, value)?,
            "wpm_tol" => self.wpm_tol = parse_value(key, value)?,
            "methods" => {
                self.methods = value
                    .split(',')
                    .map(|m| m.trim().parse::<Method>().map_err(BenchError::from_config))
                    .collect::<Result<_, _>>()?
            }
            "tv_variant" => self.tv_variant = value.parse().map_err(BenchError::from_config)?,
            "formulation" => self.formulation = value.parse().map_err(BenchError::from_config)?,
            "seed" => self.seed = parse_value(key, value)?,
            "out" => self.out = if value.is_empty() { None } else { Some(PathBuf::from(value)) },
            other => return Err(BenchError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Textual form accepted by [`ExperimentConfig::parse`].
    pub fn emit(&self) -> String {
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        let mut s = String::new();
        // `{:?}` prints floats in their shortest round-tripping form
        let _ = writeln!(s, "size = {}", self.size);
        let _ = writeln!(s, "trajectory = {}", self.trajectory);
        let _ = writeln!(s, "spokes = {}", self.spokes);
        let _ = writeln!(s, "interleaves = {}", self.interleaves);
        let _ = writeln!(s, "readout = {}", self.readout);
        let _ = writeln!(s, "coils = {}", self.coils);
        let _ = writeln!(s, "noise_var = {:?}", self.noise_var);
        let _ = writeln!(s, "lambda = {:?}", self.lambda);
        let _ = writeln!(s, "alpha = {:?}", self.alpha);
        let _ = writeln!(s, "eta = {:?}", self.eta);
        let _ = writeln!(s, "gamma = {:?}", self.gamma);
        let _ = writeln!(s, "xi = {:?}", self.xi);
        let _ = writeln!(s, "a_k = {:?}", self.a_k);
        let _ = writeln!(s, "outer_iters = {}", self.outer_iters);
        let _ = writeln!(s, "wpm_max_iter = {}", self.wpm_max_iter);
        let _ = writeln!(s, "wpm_tol = {:?}", self.wpm_tol);
        let _ = writeln!(s, "methods = {}", methods.join(","));
        let _ = writeln!(s, "tv_variant = {}", self.tv_variant);
        let _ = writeln!(s, "formulation = {}", self.formulation);
        let _ = writeln!(s, "seed = {}", self.seed);
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {}", out.display());
        }
        s
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let positive = [
            ("size", self.size),
            ("readout", self.readout),
            ("coils", self.coils),
            ("outer_iters", self.outer_iters),
            ("wpm_max_iter", self.wpm_max_iter),
        ];
        for (key, v) in positive {
            if v == 0 {
                return Err(BenchError::Config(format!("{key} must be positive")));
            }
        }
        match self.trajectory {
            TrajectoryKind::Radial if self.spokes == 0 => return Err(BenchError::Config("spokes must be positive".into())),
            TrajectoryKind::Spiral if self.interleaves == 0 => {
                return Err(BenchError::Config("interleaves must be positive".into()))
            }
            _ => {}
        }
        if !(self.noise_var >= 0.0) || !self.noise_var.is_finite() {
            return Err(BenchError::Config(format!("noise_var must be nonnegative, got {}", self.noise_var)));
        }
        if self.methods.is_empty() {
            return Err(BenchError::Config("at least one method is required".into()));
        }
        for &m in &self.methods {
            self.solver_config(m).validate().map_err(BenchError::from_config)?;
        }
        Ok(())
    }

    pub fn wavelet(&self) -> WaveletSpec {
        WaveletSpec::deepest(self.size, self.size, MAX_WAVELET_LEVELS)
    }

    pub fn solver_config(&self, method: Method) -> SolverConfig {
        SolverConfig {
            method,
            formulation: self.formulation,
            lambda: self.lambda,
            alpha: self.alpha,
            eta: self.eta,
            sr1: Sr1Params { gamma: self.gamma, xi: self.xi, ..Sr1Params::default() },
            step: self.a_k,
            outer_iters: self.outer_iters,
            wpm_max_iter: self.wpm_max_iter,
            wpm_tol: self.wpm_tol,
            tv_variant: self.tv_variant,
            wavelet: self.wavelet(),
            backtracking: Backtracking::default(),
            fixed_metric: false,
            power_iters: 100,
        }
    }
}

/// A `KEY=V1,V2,...` sweep request.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<String>,
}

impl FromStr for Sweep {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        let (key, values) = s
            .split_once('=')
            .ok_or_else(|| BenchError::Config(format!("sweep '{s}' is not KEY=V1,V2,...")))?;
        let key = key.trim().to_string();
        if !KEYS.contains(&key.as_str()) || key == "methods" || key == "out" {
            return Err(BenchError::Config(format!("cannot sweep over '{key}'")));
        }
        let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(BenchError::Config(format!("sweep over '{key}' has no values")));
        }
        Ok(Self { key, values })
    }
}

impl Sweep {
    /// One config per value, each validated.
    pub fn expand(&self, base: &ExperimentConfig) -> Result<Vec<ExperimentConfig>, BenchError> {
        self.values
            .iter()
            .map(|v| {
                let mut cfg = base.clone();
                cfg.set(&self.key, v)?;
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }
}
