//! Problem-config schema (JSON) and its validation into domain objects.

use std::path::Path;

use serde::{Deserialize, Serialize};

use jsrbound::matrix::NormKind;
use jsrbound::rotation::Side;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Jsr,
    Markov,
    Rotation,
    Ode,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Jsr => "jsr",
            Kind::Markov => "markov",
            Kind::Rotation => "rotation",
            Kind::Ode => "ode",
        }
    }
}

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub version: u32,
    pub kind: Kind,
    #[serde(default)]
    pub jsr: Option<JsrConfig>,
    #[serde(default)]
    pub markov: Option<MarkovConfig>,
    #[serde(default)]
    pub rotation: Option<RotationConfig>,
    #[serde(default)]
    pub ode: Option<OdeConfig>,
    #[serde(default)]
    pub out: OutConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutConfig {
    /// Report file name (JSON). Written under the output directory;
    /// omitted = report goes to stdout.
    pub report: Option<String>,
    /// Trace file name (CSV); only written when the kind produces a trace.
    pub trace_csv: Option<String>,
}

/// A matrix given as rows, the on-disk form.
pub type MatrixRows = Vec<Vec<f64>>;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsrConfig {
    pub matrices: Vec<MatrixRows>,
    pub constraint: Vec<Vec<u8>>,
    pub max_n: usize,
    #[serde(default = "default_norm")]
    pub norm: NormKind,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub dilation_alpha: Option<f64>,
    #[serde(default)]
    pub robust: Option<RobustConfig>,
    #[serde(default)]
    pub continuity: Option<ContinuityConfig>,
    /// Whether to search for a decay certificate (on by default).
    #[serde(default = "default_true")]
    pub certificate: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustConfig {
    pub epsilon: f64,
    pub samples: usize,
    #[serde(default)]
    pub max_n: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuityConfig {
    pub direction: Vec<MatrixRows>,
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub max_n: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovConfig {
    pub matrices: Vec<MatrixRows>,
    pub transition: Vec<Vec<f64>>,
    #[serde(default)]
    pub initial: Option<Vec<f64>>,
    pub seed: u64,
    #[serde(default)]
    pub mc: Option<McConfig>,
    #[serde(default)]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default)]
    pub periodic: Option<PeriodicConfig>,
    #[serde(default)]
    pub exterior_order: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub length: usize,
    pub trials: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub length: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicConfig {
    pub window: usize,
    pub max_length: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationConfig {
    /// Continued-fraction coefficients [0; a1, a2, ...] of the rotation
    /// number.
    pub cf: Vec<u64>,
    pub count: usize,
    pub side: Side,
    pub example: RotationExample,
    #[serde(default = "default_closing_angles")]
    pub closing_angles: usize,
    #[serde(default = "default_one")]
    pub closing_tolerance_factor: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RotationExample {
    /// Scaled-shear cocycle: periodic fiber values approach but never reach
    /// the upper envelope.
    FinitenessGap {
        dim: usize,
        n_max: usize,
        #[serde(default = "default_fiber_samples")]
        fiber_samples: usize,
    },
    /// Scalar cocycle contracting on every rational fiber, flat on the
    /// limit fiber.
    PeriodicDecay {
        gamma: f64,
        #[serde(default = "default_horizon")]
        horizon: usize,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeConfig {
    pub driving: DrivingConfig,
    pub generator: GeneratorConfig,
    pub step: f64,
    #[serde(default)]
    pub checks: Option<ChecksConfig>,
    #[serde(default)]
    pub quasi_contraction: Option<QuasiContractionConfig>,
    #[serde(default)]
    pub liao_epsilon: Option<f64>,
    #[serde(default)]
    pub xi: Option<XiConfig>,
    #[serde(default)]
    pub ergodic: Option<ErgodicConfig>,
    #[serde(default)]
    pub decay_fit: Option<DecayFitConfig>,
    #[serde(default)]
    pub series: Option<SeriesConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DrivingConfig {
    CircleRotation { speed: f64 },
    PeriodicOrbit { period: f64 },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    Constant {
        matrix: MatrixRows,
    },
    Trig {
        base: MatrixRows,
        harmonics: Vec<HarmonicConfig>,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarmonicConfig {
    pub frequency: u32,
    pub cos: MatrixRows,
    pub sin: MatrixRows,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    pub w: f64,
    pub s: f64,
    pub t: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuasiContractionConfig {
    pub subdivision: Vec<f64>,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XiConfig {
    pub w: f64,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicConfig {
    pub t: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayFitConfig {
    pub points: Vec<f64>,
    pub horizon: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesConfig {
    pub w: f64,
    pub horizon: f64,
    pub points: usize,
}

fn default_norm() -> NormKind {
    NormKind::Spectral2
}

fn default_true() -> bool {
    true
}

fn default_one() -> f64 {
    1.0
}

fn default_closing_angles() -> usize {
    16
}

fn default_fiber_samples() -> usize {
    4
}

fn default_horizon() -> usize {
    32
}

/// Loads and structurally validates a problem config: version, payload
/// presence matching the kind, and seeds wherever sampling happens.
pub fn load(path: &Path) -> Result<(ProblemConfig, Vec<u8>), String> {
    let bytes =
        std::fs::read(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let config: ProblemConfig =
        serde_json::from_slice(&bytes).map_err(|e| format!("malformed config: {e}"))?;
    validate(&config)?;
    Ok((config, bytes))
}

pub fn validate(config: &ProblemConfig) -> Result<(), String> {
    if config.version != CONFIG_VERSION {
        return Err(format!(
            "unsupported config version {} (expected {CONFIG_VERSION})",
            config.version
        ));
    }
    let present = |name: &str, there: bool| {
        if there {
            Ok(())
        } else {
            Err(format!("kind \"{name}\" requires a \"{name}\" payload"))
        }
    };
    match config.kind {
        Kind::Jsr => {
            present("jsr", config.jsr.is_some())?;
            let jsr = config.jsr.as_ref().expect("checked");
            if jsr.max_n == 0 {
                return Err("jsr.max_n must be at least 1".into());
            }
            if jsr.robust.is_some() && jsr.seed.is_none() {
                return Err("jsr.robust sampling requires jsr.seed".into());
            }
        }
        Kind::Markov => present("markov", config.markov.is_some())?,
        Kind::Rotation => present("rotation", config.rotation.is_some())?,
        Kind::Ode => present("ode", config.ode.is_some())?,
    }
    Ok(())
}
