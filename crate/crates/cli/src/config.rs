//! Experiment configuration: JSON with a fixed schema, unknown keys rejected.

use std::fmt;

use clap::ValueEnum;
use hypowalk::fourier::{TrigPoly, TrigTerm};
use hypowalk::spectra::EpsRule;
use hypowalk::{Model, Point2};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    LieCheck,
    /// Debug dump of structure constants as CSV.
    LieDump,
    Spectrum,
    GapScan,
    Cluster,
    WalkTv,
    Diffuse,
    Minorize,
    Consistency,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::LieCheck => "lie-check",
            Subcommand::LieDump => "lie-dump",
            Subcommand::Spectrum => "spectrum",
            Subcommand::GapScan => "gap-scan",
            Subcommand::Cluster => "cluster",
            Subcommand::WalkTv => "walk-tv",
            Subcommand::Diffuse => "diffuse",
            Subcommand::Minorize => "minorize",
            Subcommand::Consistency => "consistency",
        }
    }

    /// Top-level keys the subcommand reads; anything else is rejected.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Subcommand::LieCheck => &["lie_generators", "lie_steps", "triples", "seed"],
            Subcommand::LieDump => &["lie_generators", "lie_steps"],
            Subcommand::Spectrum | Subcommand::Cluster => &["model", "h", "cutoff", "quadrature", "r", "eps"],
            Subcommand::GapScan => &["model", "h", "cutoff", "quadrature"],
            Subcommand::WalkTv => &[
                "model",
                "h",
                "cutoff",
                "quadrature",
                "seed",
                "walkers",
                "checkpoints",
                "bins",
                "x0",
                "f",
                "slope_steps",
            ],
            Subcommand::Diffuse => &["model", "h", "cutoff", "quadrature", "seed", "walkers", "t", "f", "x0"],
            Subcommand::Minorize => &["model", "h", "eps", "seed", "samples", "bins", "x0"],
            Subcommand::Consistency => &["generator", "chapman_taylor", "projector"],
        }
    }

    fn check_keys(self) -> &'static [&'static str] {
        match self {
            Subcommand::LieCheck => &["assoc_tol"],
            Subcommand::LieDump | Subcommand::Cluster => &[],
            Subcommand::Spectrum => &["oracle_tol"],
            Subcommand::GapScan => &["nu_target", "nu_rel_tol", "raw_rel_tol"],
            Subcommand::WalkTv => &["rate_rel_tol", "slope_tol"],
            Subcommand::Diffuse => &["z_max", "semigroup_tol", "halving_band", "oracle_tol"],
            Subcommand::Minorize => &["c_min", "mass_sigmas"],
            Subcommand::Consistency => &["ratio_band", "variation_max", "tail_ratio_max"],
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A scalar or a list of scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsSpec {
    Value(f64),
    Rule(EpsRule),
}

impl EpsSpec {
    pub fn rule(self) -> EpsRule {
        match self {
            EpsSpec::Value(e) => EpsRule::Fixed(e),
            EpsSpec::Rule(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Checkpoints {
    List(Vec<usize>),
    Range { start: usize, stop: usize, step: usize },
}

impl Checkpoints {
    pub fn to_vec(&self) -> Result<Vec<usize>, ConfigError> {
        match self {
            Checkpoints::List(v) => Ok(v.clone()),
            Checkpoints::Range { step: 0, .. } => Err(ConfigError::new("checkpoints.step must be positive")),
            Checkpoints::Range { start, stop, step } => Ok((*start..=*stop).step_by(*step).collect()),
        }
    }
}

/// Trigonometric polynomial as `[m, n, c]` triples meaning `c cos(2 pi (m x + n y))`.
pub type TermList = Vec<(i64, i64, f64)>;

pub fn trig_poly(terms: &TermList) -> TrigPoly {
    TrigPoly { terms: terms.iter().map(|&(m, n, c)| TrigTerm { m, n, cos: c, sin: 0.0 }).collect() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorPart {
    pub model: Model,
    pub h: Vec<f64>,
    pub cutoff: usize,
    #[serde(default = "default_quadrature")]
    pub quadrature: usize,
    pub f: TermList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChapmanTaylorPart {
    pub model: Model,
    pub h: f64,
    pub cutoff: usize,
    #[serde(default = "default_quadrature")]
    pub quadrature: usize,
    pub f: TermList,
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectorPart {
    pub model: Model,
    pub h: Vec<f64>,
    pub cutoff: usize,
    #[serde(default = "default_quadrature")]
    pub quadrature: usize,
    #[serde(default = "default_c4")]
    pub c4: f64,
    pub f: TermList,
}

/// Thresholds asserted by a run; exit status 1 when any configured one fails.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assoc_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_target: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semigroup_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halving_band: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_sigmas: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_band: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variation_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_ratio_max: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<Subcommand>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<OneOrMany<f64>>,
    /// Fourier cutoff `M`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<usize>,
    /// Upper end `R` of the rescaled window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<EpsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub walkers: Option<OneOrMany<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoints: Option<Checkpoints>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<TermList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Point2>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_steps: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lie_generators: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lie_steps: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Vec<GeneratorPart>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chapman_taylor: Option<ChapmanTaylorPart>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projector: Option<ProjectorPart>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub checks: Checks,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

fn is_default(c: &Checks) -> bool {
    *c == Checks::default()
}

fn default_quadrature() -> usize {
    16
}

fn default_c4() -> f64 {
    hypowalk::spectra::DEFAULT_C4
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl ConfigError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<hypowalk::Error> for ConfigError {
    fn from(e: hypowalk::Error) -> Self {
        Self(e.to_string())
    }
}

const COMMON_KEYS: [&str; 3] = ["subcommand", "out", "checks"];

/// Keys that identify a run manifest rather than a bare config.
const MANIFEST_KEYS: [&str; 2] = ["config", "config_sha256"];

/// Parses a config or a manifest (whose embedded config is used) for `sub`.
pub fn parse(text: &str, sub: Subcommand) -> Result<ExperimentConfig, ConfigError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| ConfigError::new(format!("invalid JSON: {e}")))?;
    if let Value::Object(map) = &value {
        if MANIFEST_KEYS.iter().all(|k| map.contains_key(*k)) {
            let embedded = map["config"].clone();
            let recorded = map["config_sha256"].as_str().unwrap_or_default().to_string();
            if config_hash(&embedded) != recorded {
                return Err(ConfigError::new("manifest config does not match its recorded hash"));
            }
            value = embedded;
        }
    }
    let Value::Object(map) = &value else {
        return Err(ConfigError::new("config must be a JSON object"));
    };
    for key in map.keys() {
        let common = COMMON_KEYS.contains(&key.as_str());
        if !common && !sub.keys().contains(&key.as_str()) {
            return Err(ConfigError::new(format!("key `{key}` is not used by `{sub}`")));
        }
    }
    if let Some(Value::Object(checks)) = map.get("checks") {
        for key in checks.keys() {
            if !sub.check_keys().contains(&key.as_str()) {
                return Err(ConfigError::new(format!("check `{key}` is not available for `{sub}`")));
            }
        }
    }
    let cfg: ExperimentConfig = serde_json::from_value(value).map_err(|e| ConfigError::new(e.to_string()))?;
    if let Some(s) = cfg.subcommand {
        if s != sub {
            return Err(ConfigError::new(format!("config is for `{s}`, invoked as `{sub}`")));
        }
    }
    Ok(cfg)
}

/// SHA-256 of the compact JSON serialization (keys in sorted order).
pub fn config_hash(value: &Value) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(serde_json::to_vec(value).expect("JSON values serialize")))
}

fn missing(key: &str) -> ConfigError {
    ConfigError::new(format!("missing `{key}`"))
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(format!("`{key}` must be positive and finite, got {v}")))
    }
}

/// Step sizes must lie in `(0, 1]`.
pub fn check_h(v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(ConfigError::new(format!("step size h = {v} outside (0, 1]")))
    }
}

impl ExperimentConfig {
    pub fn model(&self) -> Result<Model, ConfigError> {
        self.model.ok_or_else(|| missing("model"))
    }

    pub fn hs(&self) -> Result<Vec<f64>, ConfigError> {
        let hs = self.h.as_ref().ok_or_else(|| missing("h"))?.to_vec();
        if hs.is_empty() {
            return Err(ConfigError::new("`h` list is empty"));
        }
        hs.into_iter().map(check_h).collect()
    }

    pub fn single_h(&self) -> Result<f64, ConfigError> {
        match self.hs()?.as_slice() {
            [h] => Ok(*h),
            _ => Err(ConfigError::new("this subcommand takes a single `h`")),
        }
    }

    pub fn cutoff(&self) -> Result<usize, ConfigError> {
        self.cutoff.ok_or_else(|| missing("cutoff"))
    }

    pub fn quadrature(&self) -> usize {
        self.quadrature.unwrap_or_else(default_quadrature)
    }

    pub fn r(&self) -> Result<f64, ConfigError> {
        positive("r", self.r.ok_or_else(|| missing("r"))?)
    }

    pub fn eps(&self) -> Result<EpsSpec, ConfigError> {
        let e = self.eps.ok_or_else(|| missing("eps"))?;
        match e {
            EpsSpec::Value(v) | EpsSpec::Rule(EpsRule::Fixed(v)) | EpsSpec::Rule(EpsRule::DriftMultiple(v)) => {
                positive("eps", v)?;
            }
        }
        Ok(e)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn walkers(&self, count: usize) -> Result<Vec<usize>, ConfigError> {
        let w = self.walkers.as_ref().ok_or_else(|| missing("walkers"))?.to_vec();
        match w.len() {
            1 => Ok(vec![w[0]; count]),
            n if n == count => Ok(w),
            n => Err(ConfigError::new(format!("`walkers` has {n} entries for {count} step sizes"))),
        }
    }

    pub fn bins(&self) -> Result<usize, ConfigError> {
        self.bins.ok_or_else(|| missing("bins"))
    }

    pub fn t(&self) -> Result<f64, ConfigError> {
        positive("t", self.t.ok_or_else(|| missing("t"))?)
    }

    pub fn f(&self) -> Result<TrigPoly, ConfigError> {
        Ok(trig_poly(self.f.as_ref().ok_or_else(|| missing("f"))?))
    }

    pub fn x0(&self) -> Point2 {
        self.x0.unwrap_or([0.0, 0.0])
    }

    /// The effective config, as embedded in the manifest: output location
    /// dropped, subcommand filled in.
    pub fn embedded(&self, sub: Subcommand) -> Value {
        let mut c = self.clone();
        c.out = None;
        c.subcommand = Some(sub);
        serde_json::to_value(c).expect("config serializes")
    }
}
