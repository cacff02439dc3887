//! Flat `section.key = value` experiment configuration.
//!
//! Lines are `key = value`; `#` starts a comment. Lists are comma separated.
//! Any key can be overridden from the environment as
//! `SPDELAB_<SECTION>__<KEY>` (upper case, `.` written as `__`).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const ENV_PREFIX: &str = "SPDELAB_";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    OuValidate,
    Kolmogorov,
    Girsanov,
    Zvonkin,
    UniquenessByNoise,
    DeterministicNonuniqueness,
    KernelNorms,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::OuValidate,
        Self::Kolmogorov,
        Self::Girsanov,
        Self::Zvonkin,
        Self::UniquenessByNoise,
        Self::DeterministicNonuniqueness,
        Self::KernelNorms,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::OuValidate => "ou_validate",
            Self::Kolmogorov => "kolmogorov",
            Self::Girsanov => "girsanov",
            Self::Zvonkin => "zvonkin",
            Self::UniquenessByNoise => "uniqueness_by_noise",
            Self::DeterministicNonuniqueness => "deterministic_nonuniqueness",
            Self::KernelNorms => "kernel_norms",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftKind {
    Zero,
    Sine,
    Tanh,
    Sign,
    DirichletProduct,
    Composite,
}

impl DriftKind {
    const ALL: [DriftKind; 6] = [Self::Zero, Self::Sine, Self::Tanh, Self::Sign, Self::DirichletProduct, Self::Composite];

    pub fn name(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Sine => "sine",
            Self::Tanh => "tanh",
            Self::Sign => "sign",
            Self::DirichletProduct => "dirichlet_product",
            Self::Composite => "composite",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Eigenvalues `c·k^α`, `k = 1..m`, unless `file` names a spectral text file.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    pub m: usize,
    pub c: f64,
    pub alpha: f64,
    pub delta: f64,
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftSpec {
    pub kind: DriftKind,
    pub amplitude: f64,
    pub lambda1: f64,
    /// Sign weights for `sign`, product weights for `dirichlet_product`,
    /// tail weights for `composite`.
    pub weights: Vec<f64>,
    /// Mollification level `n`; 0 leaves the drift as is.
    pub mollify: usize,
    pub mollify_samples: usize,
    /// Nodes per axis of a spline table of the drift; 0 disables it.
    pub tabulate_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub horizon: f64,
    /// Coarsest step count; refinements double it `halvings` times.
    pub steps: usize,
    pub halvings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss–Hermite points per axis for the solver; 0 keeps the default.
    pub gh_points: usize,
    pub mc_samples: usize,
    pub time_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub paths: usize,
    pub probes: usize,
    pub start: Vec<f64>,
    /// `λ` as a multiple of the contraction threshold.
    pub lambda_factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsSpec {
    pub enabled: bool,
    pub q: f64,
    pub theta: f64,
    pub level: f64,
}

impl DiagnosticsSpec {
    pub fn gamma(&self) -> f64 {
        self.q / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub spectrum: SpectrumSpec,
    pub drift: DriftSpec,
    pub grid: GridSpec,
    pub quadrature: QuadratureConfig,
    pub run: RunSpec,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub diagnostics: DiagnosticsSpec,
}

impl ExperimentConfig {
    /// Defaults for everything but the kind.
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            spectrum: SpectrumSpec { m: 2, c: 1.0, alpha: 2.0, delta: 0.5, file: None },
            drift: DriftSpec {
                kind: DriftKind::Sine,
                amplitude: 1.0,
                lambda1: 1.0,
                weights: Vec::new(),
                mollify: 0,
                mollify_samples: 4096,
                tabulate_nodes: 0,
            },
            grid: GridSpec { horizon: 1.0, steps: 16, halvings: 3 },
            quadrature: QuadratureConfig { gh_points: 0, mc_samples: 4096, time_nodes: 32 },
            run: RunSpec { paths: 1000, probes: 64, start: Vec::new(), lambda_factor: 1.0 },
            seed: 1,
            output_dir: PathBuf::from("out"),
            diagnostics: DiagnosticsSpec { enabled: false, q: 5.0, theta: 0.5, level: 1.0 },
        }
    }

    /// Start state padded with zeros to `m` modes.
    pub fn start(&self, m: usize) -> Vec<f64> {
        let mut x = self.run.start.clone();
        x.resize(m, 0.0);
        x
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: `{key}` expects {expected}, found `{found}`")]
    TypeMismatch { key: String, line: usize, expected: &'static str, found: String },
    #[error("line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: `{key}` given twice")]
    Duplicate { key: String, line: usize },
    #[error("missing required key `{key}`")]
    MissingKey { key: String },
    #[error("invariant violated: {rule}")]
    InvariantViolation { rule: String },
}

/// Every violation found in one document. Line 0 marks an environment override.
#[derive(Debug, Clone, PartialEq, Error)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum Ty {
    Int,
    Float,
    Bool,
    Str,
    Floats,
}

impl Ty {
    fn describe(self) -> &'static str {
        match self {
            Ty::Int => "a non-negative integer",
            Ty::Float => "a number",
            Ty::Bool => "true or false",
            Ty::Str => "a string",
            Ty::Floats => "a comma-separated list of numbers",
        }
    }
}

const KEYS: &[(&str, Ty)] = &[
    ("experiment.kind", Ty::Str),
    ("spectrum.m", Ty::Int),
    ("spectrum.c", Ty::Float),
    ("spectrum.alpha", Ty::Float),
    ("spectrum.delta", Ty::Float),
    ("spectrum.file", Ty::Str),
    ("drift.kind", Ty::Str),
    ("drift.amplitude", Ty::Float),
    ("drift.lambda1", Ty::Float),
    ("drift.weights", Ty::Floats),
    ("drift.mollify", Ty::Int),
    ("drift.mollify_samples", Ty::Int),
    ("drift.tabulate_nodes", Ty::Int),
    ("grid.horizon", Ty::Float),
    ("grid.steps", Ty::Int),
    ("grid.halvings", Ty::Int),
    ("quadrature.gh_points", Ty::Int),
    ("quadrature.mc_samples", Ty::Int),
    ("quadrature.time_nodes", Ty::Int),
    ("run.paths", Ty::Int),
    ("run.probes", Ty::Int),
    ("run.start", Ty::Floats),
    ("run.lambda_factor", Ty::Float),
    ("seeds.master", Ty::Int),
    ("output.dir", Ty::Str),
    ("diagnostics.enabled", Ty::Bool),
    ("diagnostics.q", Ty::Float),
    ("diagnostics.theta", Ty::Float),
    ("diagnostics.level", Ty::Float),
];

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int(u64),
    Float(f64),
    Bool(bool),
    Str(String),
    Floats(Vec<f64>),
}

fn parse_value(ty: Ty, raw: &str) -> Option<Value> {
    match ty {
        Ty::Int => raw.parse().ok().map(Value::Int),
        Ty::Float => raw.parse().ok().filter(|v: &f64| v.is_finite()).map(Value::Float),
        Ty::Bool => raw.parse().ok().map(Value::Bool),
        Ty::Str => {
            let s = raw.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(raw);
            (!s.is_empty()).then(|| Value::Str(s.to_string()))
        }
        Ty::Floats => {
            if raw.is_empty() {
                return Some(Value::Floats(Vec::new()));
            }
            raw.split(',')
                .map(|p| p.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect::<Option<Vec<_>>>()
                .map(Value::Floats)
        }
    }
}

/// Environment key for a config key: `run.paths` → `SPDELAB_RUN__PATHS`.
pub fn env_key(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "__").to_uppercase())
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigErrors> {
    parse_config_with_env(text, std::iter::empty::<(String, String)>())
}

/// Parse `text`, then apply `SPDELAB_*` overrides from `env`.
pub fn parse_config_with_env<I, K, V>(text: &str, env: I) -> Result<ExperimentConfig, ConfigErrors>
where
    I: IntoIterator<Item = (K, V)>,
    K: AsRef<str>,
    V: AsRef<str>,
{
    let mut errors = Vec::new();
    let mut raw: BTreeMap<&'static str, (usize, String)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            errors.push(ConfigError::Syntax { line: line_no, text: content.to_string() });
            continue;
        };
        let key = key.trim();
        match KEYS.iter().find(|(k, _)| *k == key) {
            None => errors.push(ConfigError::UnknownKey { key: key.to_string(), line: line_no }),
            Some((k, _)) => {
                if raw.insert(k, (line_no, value.trim().to_string())).is_some() {
                    errors.push(ConfigError::Duplicate { key: key.to_string(), line: line_no });
                }
            }
        }
    }
    let mut overrides: Vec<(String, String)> = env
        .into_iter()
        .filter(|(k, _)| k.as_ref().starts_with(ENV_PREFIX))
        .map(|(k, v)| (k.as_ref().to_string(), v.as_ref().to_string()))
        .collect();
    overrides.sort();
    for (name, value) in overrides {
        match KEYS.iter().find(|(k, _)| env_key(k) == name) {
            Some((k, _)) => {
                raw.insert(k, (0, value.trim().to_string()));
            }
            None => errors.push(ConfigError::UnknownKey { key: name, line: 0 }),
        }
    }

    let mut values: BTreeMap<&'static str, Value> = BTreeMap::new();
    for (key, (line, text)) in &raw {
        let ty = KEYS.iter().find(|(k, _)| k == key).map(|(_, t)| *t).unwrap_or(Ty::Str);
        match parse_value(ty, text) {
            Some(v) => {
                values.insert(key, v);
            }
            None => errors.push(ConfigError::TypeMismatch {
                key: key.to_string(),
                line: *line,
                expected: ty.describe(),
                found: text.clone(),
            }),
        }
    }

    let kind = match values.get("experiment.kind") {
        Some(Value::Str(s)) => match ExperimentKind::from_name(s) {
            Some(k) => Some(k),
            None => {
                errors.push(ConfigError::TypeMismatch {
                    key: "experiment.kind".into(),
                    line: raw["experiment.kind"].0,
                    expected: "an experiment kind",
                    found: s.clone(),
                });
                None
            }
        },
        _ => {
            if !raw.contains_key("experiment.kind") {
                errors.push(ConfigError::MissingKey { key: "experiment.kind".into() });
            }
            None
        }
    };
    let mut cfg = ExperimentConfig::new(kind.unwrap_or(ExperimentKind::OuValidate));
    for (key, value) in &values {
        apply(&mut cfg, key, value, raw[key].0, &mut errors);
    }
    validate(&cfg, &mut errors);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(errors))
    }
}

fn apply(cfg: &mut ExperimentConfig, key: &str, value: &Value, line: usize, errors: &mut Vec<ConfigError>) {
    use Value::*;
    let as_usize = |v: u64| usize::try_from(v).unwrap_or(usize::MAX);
    match (key, value) {
        ("spectrum.m", Int(v)) => cfg.spectrum.m = as_usize(*v),
        ("spectrum.c", Float(v)) => cfg.spectrum.c = *v,
        ("spectrum.alpha", Float(v)) => cfg.spectrum.alpha = *v,
        ("spectrum.delta", Float(v)) => cfg.spectrum.delta = *v,
        ("spectrum.file", Str(v)) => cfg.spectrum.file = Some(PathBuf::from(v)),
        ("drift.kind", Str(v)) => match DriftKind::from_name(v) {
            Some(k) => cfg.drift.kind = k,
            None => errors.push(ConfigError::TypeMismatch {
                key: key.into(),
                line,
                expected: "a drift kind",
                found: v.clone(),
            }),
        },
        ("drift.amplitude", Float(v)) => cfg.drift.amplitude = *v,
        ("drift.lambda1", Float(v)) => cfg.drift.lambda1 = *v,
        ("drift.weights", Floats(v)) => cfg.drift.weights = v.clone(),
        ("drift.mollify", Int(v)) => cfg.drift.mollify = as_usize(*v),
        ("drift.mollify_samples", Int(v)) => cfg.drift.mollify_samples = as_usize(*v),
        ("drift.tabulate_nodes", Int(v)) => cfg.drift.tabulate_nodes = as_usize(*v),
        ("grid.horizon", Float(v)) => cfg.grid.horizon = *v,
        ("grid.steps", Int(v)) => cfg.grid.steps = as_usize(*v),
        ("grid.halvings", Int(v)) => cfg.grid.halvings = as_usize(*v),
        ("quadrature.gh_points", Int(v)) => cfg.quadrature.gh_points = as_usize(*v),
        ("quadrature.mc_samples", Int(v)) => cfg.quadrature.mc_samples = as_usize(*v),
        ("quadrature.time_nodes", Int(v)) => cfg.quadrature.time_nodes = as_usize(*v),
        ("run.paths", Int(v)) => cfg.run.paths = as_usize(*v),
        ("run.probes", Int(v)) => cfg.run.probes = as_usize(*v),
        ("run.start", Floats(v)) => cfg.run.start = v.clone(),
        ("run.lambda_factor", Float(v)) => cfg.run.lambda_factor = *v,
        ("seeds.master", Int(v)) => cfg.seed = *v,
        ("output.dir", Str(v)) => cfg.output_dir = PathBuf::from(v),
        ("diagnostics.enabled", Bool(v)) => cfg.diagnostics.enabled = *v,
        ("diagnostics.q", Float(v)) => cfg.diagnostics.q = *v,
        ("diagnostics.theta", Float(v)) => cfg.diagnostics.theta = *v,
        ("diagnostics.level", Float(v)) => cfg.diagnostics.level = *v,
        _ => {}
    }
}

fn validate(cfg: &ExperimentConfig, errors: &mut Vec<ConfigError>) {
    let mut rule = |ok: bool, text: &str| {
        if !ok {
            errors.push(ConfigError::InvariantViolation { rule: text.to_string() });
        }
    };
    rule(cfg.spectrum.m >= 1, "spectrum.m must be at least 1");
    rule(cfg.spectrum.c > 0.0, "spectrum.c must be positive");
    rule(cfg.spectrum.delta > 0.0 && cfg.spectrum.delta < 1.0, "spectrum.delta must lie in (0, 1)");
    rule(cfg.grid.horizon > 0.0, "grid.horizon must be positive");
    rule(cfg.grid.steps >= 1, "grid.steps must be at least 1");
    rule(cfg.grid.halvings <= 12, "grid.halvings must be at most 12");
    rule(cfg.run.paths >= 1, "run.paths must be at least 1");
    rule(cfg.run.lambda_factor >= 1.0, "run.lambda_factor must be at least 1");
    rule(cfg.drift.mollify == 0 || cfg.drift.mollify_samples >= 1, "drift.mollify_samples must be positive");
    rule(cfg.drift.tabulate_nodes == 0 || cfg.drift.tabulate_nodes >= 4, "drift.tabulate_nodes must be 0 or at least 4");
    rule(
        !cfg.diagnostics.enabled || cfg.diagnostics.q > 4.0,
        "diagnostics.q must satisfy q > 4 when diagnostics are enabled",
    );
    if let Some(path) = &cfg.spectrum.file {
        rule(path.is_file(), &format!("spectrum.file `{}` must exist", path.display()));
    }
}

fn fmt_floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

/// Every key in canonical order; `parse_config(serialize(c)) == c`.
pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    let mut out = String::new();
    let mut put = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    put("experiment.kind", cfg.kind.name().into());
    put("spectrum.m", cfg.spectrum.m.to_string());
    put("spectrum.c", format!("{:?}", cfg.spectrum.c));
    put("spectrum.alpha", format!("{:?}", cfg.spectrum.alpha));
    put("spectrum.delta", format!("{:?}", cfg.spectrum.delta));
    if let Some(p) = &cfg.spectrum.file {
        put("spectrum.file", p.display().to_string());
    }
    put("drift.kind", cfg.drift.kind.name().into());
    put("drift.amplitude", format!("{:?}", cfg.drift.amplitude));
    put("drift.lambda1", format!("{:?}", cfg.drift.lambda1));
    put("drift.weights", fmt_floats(&cfg.drift.weights));
    put("drift.mollify", cfg.drift.mollify.to_string());
    put("drift.mollify_samples", cfg.drift.mollify_samples.to_string());
    put("drift.tabulate_nodes", cfg.drift.tabulate_nodes.to_string());
    put("grid.horizon", format!("{:?}", cfg.grid.horizon));
    put("grid.steps", cfg.grid.steps.to_string());
    put("grid.halvings", cfg.grid.halvings.to_string());
    put("quadrature.gh_points", cfg.quadrature.gh_points.to_string());
    put("quadrature.mc_samples", cfg.quadrature.mc_samples.to_string());
    put("quadrature.time_nodes", cfg.quadrature.time_nodes.to_string());
    put("run.paths", cfg.run.paths.to_string());
    put("run.probes", cfg.run.probes.to_string());
    put("run.start", fmt_floats(&cfg.run.start));
    put("run.lambda_factor", format!("{:?}", cfg.run.lambda_factor));
    put("seeds.master", cfg.seed.to_string());
    put("output.dir", cfg.output_dir.display().to_string());
    put("diagnostics.enabled", cfg.diagnostics.enabled.to_string());
    put("diagnostics.q", format!("{:?}", cfg.diagnostics.q));
    put("diagnostics.theta", format!("{:?}", cfg.diagnostics.theta));
    put("diagnostics.level", format!("{:?}", cfg.diagnostics.level));
    out
}

/// Read and parse a config file, with overrides from the process environment.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, crate::LabError> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::LabError::io(path, e))?;
    Ok(parse_config_with_env(&text, std::env::vars())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_key_mapping() {
        assert_eq!(env_key("run.paths"), "SPDELAB_RUN__PATHS");
        assert_eq!(env_key("drift.mollify_samples"), "SPDELAB_DRIFT__MOLLIFY_SAMPLES");
    }

    #[test]
    fn every_kind_has_a_name() {
        for k in ExperimentKind::ALL {
            assert_eq!(ExperimentKind::from_name(k.name()), Some(k));
        }
        for k in DriftKind::ALL {
            assert_eq!(DriftKind::from_name(k.name()), Some(k));
        }
    }
}
