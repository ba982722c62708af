//! Scenario files: a closed TOML schema with defaults, validated on load.

use std::fmt;
use std::path::Path;

use confine_core::geometry::{CurveShape, EmbeddingCurve};
use confine_core::potentials::{ConfinementFamily, ConfinementKind, LocalProfile};
use confine_core::series::CosineSeries;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid `{key}`: {reason}")]
    Validation { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    LimitSpectrum,
    VeffExtract,
    Ambiguity,
    DirectCompare,
    AdiabaticClassical,
    WkbGap,
    Decoupling,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::LimitSpectrum => "limit-spectrum",
            ExperimentKind::VeffExtract => "veff-extract",
            ExperimentKind::Ambiguity => "ambiguity",
            ExperimentKind::DirectCompare => "direct-compare",
            ExperimentKind::AdiabaticClassical => "adiabatic-classical",
            ExperimentKind::WkbGap => "wkb-gap",
            ExperimentKind::Decoupling => "decoupling",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Circle,
    Ellipse,
    Line,
    Fourier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSpec {
    pub shape: Shape,
    pub radius: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub length: Option<f64>,
    pub x_cos: Vec<f64>,
    pub x_sin: Vec<f64>,
    pub y_cos: Vec<f64>,
    pub y_sin: Vec<f64>,
}

impl Default for CurveSpec {
    fn default() -> Self {
        Self {
            shape: Shape::Circle,
            radius: Some(1.0),
            a: None,
            b: None,
            length: None,
            x_cos: Vec::new(),
            x_sin: Vec::new(),
            y_cos: Vec::new(),
            y_sin: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Smooth,
    Hardwall,
}

/// Confinement family; coefficient lists are cosine series on the curve length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySpec {
    pub kind: Kind,
    pub omega0: Vec<f64>,
    pub cubic: Vec<f64>,
    pub quartic: Vec<f64>,
    pub width: Vec<f64>,
    /// Replace `omega0` (or `width`) by its mean.
    pub tune: bool,
}

impl Default for FamilySpec {
    fn default() -> Self {
        Self {
            kind: Kind::Smooth,
            omega0: vec![1.0],
            cubic: Vec::new(),
            quartic: Vec::new(),
            width: vec![1.0],
            tune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSpec {
    /// Cosine coefficients of `V(s)`.
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n_s: usize,
    pub n_r: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_s: 128, n_r: 96 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub levels: Option<usize>,
    pub tol: f64,
    /// Cosine terms of the spectral fit.
    pub terms: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            levels: None,
            tol: 1e-10,
            terms: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VeffMethod {
    Assembly,
    Spectral,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VeffSpec {
    pub method: VeffMethod,
}

impl Default for VeffSpec {
    fn default() -> Self {
        Self {
            method: VeffMethod::Assembly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalSpec {
    pub lambda: Vec<f64>,
    pub s0: f64,
    pub speed: f64,
    /// Integration time in units of `L / |speed|`.
    pub laps: f64,
    pub steps_per_period: f64,
    pub record_every: usize,
}

impl Default for ClassicalSpec {
    fn default() -> Self {
        Self {
            lambda: vec![1e2, 1e3, 1e4],
            s0: 0.0,
            speed: 1.0,
            laps: 1.0,
            steps_per_period: 100.0,
            record_every: 10,
        }
    }
}

/// One-dimensional well used by the ramp and WKB experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WellSpec {
    pub kind: Kind,
    pub omega0: f64,
    pub cubic: f64,
    pub quartic: f64,
    pub width: f64,
    pub lambda: f64,
}

impl Default for WellSpec {
    fn default() -> Self {
        Self {
            kind: Kind::Smooth,
            omega0: 1.0,
            cubic: 0.0,
            quartic: 0.0,
            width: 1.0,
            lambda: 1.0,
        }
    }
}

impl WellSpec {
    pub fn profile(&self) -> LocalProfile {
        match self.kind {
            Kind::Smooth => LocalProfile::Smooth {
                omega0: self.omega0,
                cubic: self.cubic,
                quartic: self.quartic,
            },
            Kind::Hardwall => LocalProfile::Hardwall { width: self.width },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RampSpec {
    pub lambda_from: f64,
    pub lambda_to: f64,
    pub action: f64,
    pub steps_per_period: f64,
    /// Ramp durations in fast periods at the initial scale.
    pub periods: Vec<f64>,
}

impl Default for RampSpec {
    fn default() -> Self {
        Self {
            lambda_from: 1.0,
            lambda_to: 4.0,
            action: 0.5,
            steps_per_period: 4000.0,
            periods: vec![25.0, 50.0, 100.0, 200.0, 400.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WkbSpec {
    pub n: usize,
    pub n_grid: usize,
}

impl Default for WkbSpec {
    fn default() -> Self {
        Self { n: 0, n_grid: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Manifold {
    Curve,
    Sphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectSpec {
    pub manifold: Manifold,
    pub radius: f64,
    pub alphas: Vec<f64>,
    pub levels: usize,
    /// Also compare against the limit operator carrying `V_eff`.
    pub with_limit: bool,
}

impl Default for DirectSpec {
    fn default() -> Self {
        Self {
            manifold: Manifold::Curve,
            radius: 1.0,
            alphas: vec![0.0, 1.0 / 6.0, 0.25],
            levels: 6,
            with_limit: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecouplingSpec {
    pub speed: f64,
}

impl Default for DecouplingSpec {
    fn default() -> Self {
        Self { speed: 1.0 }
    }
}

/// Pass/fail thresholds. Unset entries take per-experiment defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSpec {
    pub spacing_error: Option<f64>,
    pub exponent_min: Option<f64>,
    pub exponent_max: Option<f64>,
    pub fit_residual: Option<f64>,
    pub coefficient: Option<f64>,
    pub coefficient_rel: Option<f64>,
    pub agreement: Option<f64>,
    pub relative_error: Option<f64>,
    pub classical_improvement: Option<f64>,
    pub shift: Option<f64>,
    pub energy_ratio: Option<f64>,
    pub drift: Option<f64>,
    pub min_periods: Option<f64>,
    pub slope_min: Option<f64>,
    pub slope_max: Option<f64>,
    pub exponent: Option<f64>,
    pub exponent_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_hbar")]
    pub hbar: Vec<f64>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub curve: CurveSpec,
    #[serde(default)]
    pub confinement: FamilySpec,
    #[serde(default)]
    pub confinement_b: Option<FamilySpec>,
    #[serde(default)]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub veff: VeffSpec,
    #[serde(default)]
    pub classical: ClassicalSpec,
    #[serde(default)]
    pub well: WellSpec,
    #[serde(default)]
    pub ramp: RampSpec,
    #[serde(default)]
    pub wkb: WkbSpec,
    #[serde(default)]
    pub direct: DirectSpec,
    #[serde(default)]
    pub decoupling: DecouplingSpec,
    #[serde(default)]
    pub tolerance: ToleranceSpec,
}

fn default_hbar() -> Vec<f64> {
    vec![1.0]
}

/// Every accepted key with a one-line description.
pub const SCHEMA: &[(&str, &str)] = &[
    ("name", "scenario name"),
    ("description", "free text"),
    ("kind", "limit-spectrum | veff-extract | ambiguity | direct-compare | adiabatic-classical | wkb-gap | decoupling"),
    ("seed", "eigensolver start-vector seed (default 0)"),
    ("hbar", "list of hbar values (default [1.0])"),
    ("lambda", "confinement scales, ascending"),
    ("curve", "constraint curve"),
    ("curve.shape", "circle | ellipse | line | fourier"),
    ("curve.radius", "circle radius"),
    ("curve.a", "ellipse semi-axis along x"),
    ("curve.b", "ellipse semi-axis along y"),
    ("curve.length", "line length (periodic)"),
    ("curve.x_cos", "fourier curve: cosine coefficients of x(t)"),
    ("curve.x_sin", "fourier curve: sine coefficients of x(t)"),
    ("curve.y_cos", "fourier curve: cosine coefficients of y(t)"),
    ("curve.y_sin", "fourier curve: sine coefficients of y(t)"),
    ("confinement", "confinement family"),
    ("confinement.kind", "smooth | hardwall"),
    ("confinement.omega0", "cosine series of the harmonic frequency"),
    ("confinement.cubic", "cosine series of the r^3 coefficient"),
    ("confinement.quartic", "cosine series of the r^4 coefficient"),
    ("confinement.width", "cosine series of the hard-wall width"),
    ("confinement.tune", "replace omega0 or width by its mean (default true)"),
    ("confinement_b", "second family for the ambiguity experiment"),
    ("confinement_b.kind", "smooth | hardwall"),
    ("confinement_b.omega0", "cosine series of the harmonic frequency"),
    ("confinement_b.cubic", "cosine series of the r^3 coefficient"),
    ("confinement_b.quartic", "cosine series of the r^4 coefficient"),
    ("confinement_b.width", "cosine series of the hard-wall width"),
    ("confinement_b.tune", "replace omega0 or width by its mean (default true)"),
    ("potential", "slow potential"),
    ("potential.v", "cosine series of V(s)"),
    ("grid", "discretisation"),
    ("grid.n_s", "points along the curve (default 128)"),
    ("grid.n_r", "points across the tube (default 96)"),
    ("solver", "eigensolver settings"),
    ("solver.levels", "slow levels to compute"),
    ("solver.tol", "relative residual tolerance (default 1e-10)"),
    ("solver.terms", "cosine terms of the spectral fit (default 8)"),
    ("veff", "effective potential extraction"),
    ("veff.method", "assembly | spectral | both"),
    ("classical", "constrained trajectories"),
    ("classical.lambda", "scales for the trajectory comparison"),
    ("classical.s0", "starting arc length"),
    ("classical.speed", "initial tangential speed"),
    ("classical.laps", "integration time in units of L / |speed|"),
    ("classical.steps_per_period", "steps per fast period"),
    ("classical.record_every", "record every n-th step"),
    ("well", "one-dimensional well"),
    ("well.kind", "smooth | hardwall"),
    ("well.omega0", "harmonic frequency"),
    ("well.cubic", "r^3 coefficient"),
    ("well.quartic", "r^4 coefficient"),
    ("well.width", "hard-wall width"),
    ("well.lambda", "confinement scale for wkb-gap"),
    ("ramp", "adiabatic ramp"),
    ("ramp.lambda_from", "initial scale"),
    ("ramp.lambda_to", "final scale"),
    ("ramp.action", "initial action"),
    ("ramp.steps_per_period", "integrator steps per fast period"),
    ("ramp.periods", "ramp durations in initial fast periods, ascending"),
    ("wkb", "semiclassical comparison"),
    ("wkb.n", "level index"),
    ("wkb.n_grid", "grid points for the exact level"),
    ("direct", "direct quantizations"),
    ("direct.manifold", "curve | sphere"),
    ("direct.radius", "sphere radius"),
    ("direct.alphas", "curvature coupling constants"),
    ("direct.levels", "levels to compare"),
    ("direct.with_limit", "compare with the limit operator (curves)"),
    ("decoupling", "adiabatic decoupling check"),
    ("decoupling.speed", "slow speed in the coupling-to-gap ratio"),
    ("tolerance", "pass/fail thresholds"),
    ("tolerance.spacing_error", "limit-spectrum: spacing error in units of hbar^2 (default 1e-3)"),
    ("tolerance.exponent_min", "limit-spectrum: lowest convergence exponent (default -0.6)"),
    ("tolerance.exponent_max", "limit-spectrum: highest convergence exponent (default -0.4)"),
    ("tolerance.fit_residual", "veff-extract: geometric fit residual over the V_eff range (default 0.1)"),
    ("tolerance.coefficient", "veff-extract: expected V_eff / (hbar kappa)^2"),
    ("tolerance.coefficient_rel", "veff-extract: relative tolerance on the coefficient (default 0.1)"),
    ("tolerance.agreement", "veff-extract: allowed multiple of the combined uncertainty (default 2)"),
    ("tolerance.relative_error", "ambiguity: difference against perturbation theory (default 0.15)"),
    ("tolerance.classical_improvement", "ambiguity: orbit deviation ratio first/last scale (default 5)"),
    ("tolerance.shift", "direct-compare: relative shift tolerance (default 1e-12)"),
    ("tolerance.energy_ratio", "adiabatic-classical: energy ratio tolerance (default 0.01)"),
    ("tolerance.drift", "adiabatic-classical: action drift bound (default 1e-3)"),
    ("tolerance.min_periods", "adiabatic-classical: slowest ramps checked for ratio and drift (default 200)"),
    ("tolerance.slope_min", "wkb-gap: lowest log-log slope (default 1.7)"),
    ("tolerance.slope_max", "wkb-gap: highest log-log slope (default 2.3)"),
    ("tolerance.exponent", "decoupling: expected exponent (default -0.5 smooth, -2 hardwall)"),
    ("tolerance.exponent_tol", "decoupling: allowed deviation (default 0.1 smooth, 0.2 hardwall)"),
];

fn schema_has(key: &str) -> bool {
    SCHEMA.iter().any(|(k, _)| *k == key)
}

fn suggestion(key: &str) -> Option<&'static str> {
    SCHEMA
        .iter()
        .map(|(k, _)| (*k, strsim::levenshtein(key, k)))
        .filter(|(_, d)| *d <= 3)
        .min_by_key(|(_, d)| *d)
        .map(|(k, _)| k)
}

fn check_keys(table: &toml::Table, prefix: &str) -> Result<(), ConfigError> {
    for (key, value) in table {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        if !schema_has(&path) {
            let reason = match suggestion(&path) {
                Some(s) => format!("unknown key; did you mean `{s}`?"),
                None => "unknown key".to_string(),
            };
            return Err(invalid(&path, reason));
        }
        if let toml::Value::Table(inner) = value {
            check_keys(inner, &path)?;
        }
    }
    Ok(())
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|b| *b == b'\n').count() + 1
}

fn parse_error(text: &str, err: toml::de::Error) -> ConfigError {
    ConfigError::Parse {
        line: err.span().map(|s| line_of(text, s.start)).unwrap_or(1),
        message: err.message().to_string(),
    }
}

impl Scenario {
    /// Parses and validates scenario text.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let table: toml::Table = text.parse().map_err(|e| parse_error(text, e))?;
        check_keys(&table, "")?;
        let scenario: Scenario = toml::from_str(text).map_err(|e| parse_error(text, e))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// The resolved scenario with every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serialises")
    }

    pub fn curve(&self) -> Result<EmbeddingCurve, ConfigError> {
        let c = &self.curve;
        let need = |v: Option<f64>, key: &str| v.ok_or_else(|| invalid(key, format!("required for {:?} curves", c.shape)));
        let shape = match c.shape {
            Shape::Circle => CurveShape::Circle {
                radius: need(c.radius, "curve.radius")?,
            },
            Shape::Ellipse => CurveShape::Ellipse {
                a: need(c.a, "curve.a")?,
                b: need(c.b, "curve.b")?,
            },
            Shape::Line => CurveShape::Line {
                length: need(c.length, "curve.length")?,
            },
            Shape::Fourier => CurveShape::Fourier {
                x_cos: c.x_cos.clone(),
                x_sin: c.x_sin.clone(),
                y_cos: c.y_cos.clone(),
                y_sin: c.y_sin.clone(),
            },
        };
        EmbeddingCurve::new(shape).map_err(|e| invalid("curve", e.to_string()))
    }

    pub fn family(&self, curve: &EmbeddingCurve) -> Result<ConfinementFamily, ConfigError> {
        build_family(&self.confinement, curve, "confinement")
    }

    pub fn family_b(&self, curve: &EmbeddingCurve) -> Result<ConfinementFamily, ConfigError> {
        match &self.confinement_b {
            Some(spec) => build_family(spec, curve, "confinement_b"),
            None => Err(invalid("confinement_b", "required for ambiguity experiments")),
        }
    }

    pub fn v_slow(&self, curve: &EmbeddingCurve) -> CosineSeries {
        CosineSeries::new(self.potential.v.clone(), curve.length())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must not be empty"));
        }
        positive_list("hbar", &self.hbar)?;
        if !self.lambda.is_empty() {
            positive_list("lambda", &self.lambda)?;
        }
        if self.grid.n_s < 16 {
            return Err(invalid("grid.n_s", "need at least 16 points"));
        }
        if self.grid.n_r < 32 {
            return Err(invalid("grid.n_r", "need at least 32 points (the grid is also halved)"));
        }
        if !(self.solver.tol > 0.0) {
            return Err(invalid("solver.tol", "must be positive"));
        }

        let needs_curve = !matches!(self.kind, ExperimentKind::AdiabaticClassical | ExperimentKind::WkbGap)
            && !(self.kind == ExperimentKind::DirectCompare && self.direct.manifold == Manifold::Sphere);
        if needs_curve {
            let curve = self.curve()?;
            let family = self.family(&curve)?;
            if self.kind == ExperimentKind::Ambiguity {
                let b = self.family_b(&curve)?;
                if family.kind() != ConfinementKind::Smooth || b.kind() != ConfinementKind::Smooth {
                    return Err(invalid("confinement", "ambiguity compares smooth families"));
                }
            }
        }

        match self.kind {
            ExperimentKind::LimitSpectrum => {
                min_count("lambda", &self.lambda, 3)?;
                if self.solver.levels.is_some_and(|k| k < 2) {
                    return Err(invalid("solver.levels", "need at least 2 levels for spacings"));
                }
            }
            ExperimentKind::VeffExtract => {
                min_count("lambda", &self.lambda, 3)?;
                if self.veff.method != VeffMethod::Assembly {
                    two_decades(&self.lambda)?;
                }
            }
            ExperimentKind::Ambiguity => {
                min_count("lambda", &self.lambda, 3)?;
                min_count("classical.lambda", &self.classical.lambda, 2)?;
                positive_list("classical.lambda", &self.classical.lambda)?;
                if !(self.classical.laps > 0.0) || self.classical.speed == 0.0 {
                    return Err(invalid("classical", "laps must be positive and speed nonzero"));
                }
                if !(self.classical.steps_per_period >= 50.0) {
                    return Err(invalid("classical.steps_per_period", "need at least 50"));
                }
                if self.classical.record_every == 0 {
                    return Err(invalid("classical.record_every", "must be at least 1"));
                }
            }
            ExperimentKind::DirectCompare => {
                if self.direct.alphas.is_empty() {
                    return Err(invalid("direct.alphas", "need at least one value"));
                }
                if self.direct.levels == 0 {
                    return Err(invalid("direct.levels", "need at least one level"));
                }
                match self.direct.manifold {
                    Manifold::Sphere => {
                        if !(self.direct.radius > 0.0) {
                            return Err(invalid("direct.radius", "must be positive"));
                        }
                        if self.direct.with_limit {
                            return Err(invalid("direct.with_limit", "limit operators exist for curves only"));
                        }
                        if self.potential.v.iter().skip(1).any(|c| *c != 0.0) {
                            return Err(invalid("potential.v", "sphere quantization needs a constant potential"));
                        }
                    }
                    Manifold::Curve => {
                        if self.direct.with_limit {
                            min_count("lambda", &self.lambda, 3)?;
                        }
                    }
                }
            }
            ExperimentKind::AdiabaticClassical => {
                let r = &self.ramp;
                if !(r.lambda_from > 0.0 && r.lambda_to > 0.0) {
                    return Err(invalid("ramp", "scales must be positive"));
                }
                if !(r.action > 0.0) {
                    return Err(invalid("ramp.action", "must be positive"));
                }
                if !(r.steps_per_period >= 50.0) {
                    return Err(invalid("ramp.steps_per_period", "need at least 50"));
                }
                min_count("ramp.periods", &r.periods, 1)?;
                positive_list("ramp.periods", &r.periods)?;
                if self.well.kind != Kind::Smooth {
                    return Err(invalid("well.kind", "ramps need a smooth well"));
                }
                check_well(&self.well)?;
            }
            ExperimentKind::WkbGap => {
                min_count("hbar", &self.hbar, 2)?;
                check_well(&self.well)?;
                if self.wkb.n_grid < 32 {
                    return Err(invalid("wkb.n_grid", "need at least 32 points"));
                }
            }
            ExperimentKind::Decoupling => {
                min_count("lambda", &self.lambda, 2)?;
            }
        }
        Ok(())
    }
}

fn build_family(spec: &FamilySpec, curve: &EmbeddingCurve, key: &str) -> Result<ConfinementFamily, ConfigError> {
    let l = curve.length();
    let series = |c: &[f64]| CosineSeries::new(c.to_vec(), l);
    let family = match spec.kind {
        Kind::Smooth => {
            if spec.omega0.is_empty() {
                return Err(invalid(&format!("{key}.omega0"), "need at least the mean frequency"));
            }
            ConfinementFamily::smooth(series(&spec.omega0), series(&spec.cubic), series(&spec.quartic))
        }
        Kind::Hardwall => {
            if spec.width.is_empty() {
                return Err(invalid(&format!("{key}.width"), "need at least the mean width"));
            }
            ConfinementFamily::hardwall(series(&spec.width))
        }
    }
    .map_err(|e| invalid(key, e.to_string()))?;
    if spec.tune {
        family.tune_harmonic().map_err(|e| invalid(key, e.to_string()))
    } else {
        Ok(family)
    }
}

fn check_well(w: &WellSpec) -> Result<(), ConfigError> {
    match w.kind {
        Kind::Smooth if !(w.omega0 > 0.0) => Err(invalid("well.omega0", "must be positive")),
        Kind::Smooth if w.quartic < 0.0 => Err(invalid("well.quartic", "must be non-negative")),
        Kind::Hardwall if !(w.width > 0.0) => Err(invalid("well.width", "must be positive")),
        _ if !(w.lambda > 0.0) => Err(invalid("well.lambda", "must be positive")),
        _ => Ok(()),
    }
}

fn positive_list(key: &str, values: &[f64]) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(invalid(key, "must not be empty"));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(invalid(key, "values must be positive and finite"));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(key, "values must be strictly ascending"));
    }
    Ok(())
}

fn min_count(key: &str, values: &[f64], n: usize) -> Result<(), ConfigError> {
    if values.len() < n {
        return Err(invalid(key, format!("need ≥ {n} values, got {}", values.len())));
    }
    Ok(())
}

fn two_decades(lambda: &[f64]) -> Result<(), ConfigError> {
    let (lo, hi) = (lambda[0], lambda[lambda.len() - 1]);
    if hi / lo < 99.999 {
        return Err(invalid("lambda", "spectral extraction needs scales spanning two decades"));
    }
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Scenario::parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "name = \"ring\"\nkind = \"veff-extract\"\nlambda = [1e3, 1e4, 1e5]\n";

    #[test]
    fn defaults_are_filled() {
        let s = Scenario::parse(MINIMAL).unwrap();
        assert_eq!(s.hbar, vec![1.0]);
        assert_eq!(s.grid.n_s, 128);
        assert_eq!(s.grid.n_r, 96);
        assert_eq!(s.curve.shape, Shape::Circle);
        let echoed = s.to_toml();
        assert!(echoed.contains("n_s = 128"));
        assert_eq!(Scenario::parse(&echoed).unwrap(), s);
    }

    #[test]
    fn short_lambda_list_is_rejected() {
        let text = "name = \"x\"\nkind = \"veff-extract\"\nlambda = [1e3, 1e4]\n";
        match Scenario::parse(text) {
            Err(ConfigError::Validation { key, reason }) => {
                assert_eq!(key, "lambda");
                assert!(reason.contains("need ≥ 3"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_suggests_a_fix() {
        let text = format!("{MINIMAL}[confinment]\nomega0 = [1.0]\n");
        match Scenario::parse(&text) {
            Err(ConfigError::Validation { key, reason }) => {
                assert_eq!(key, "confinment");
                assert!(reason.contains("did you mean `confinement`"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
        let dotted = format!("{MINIMAL}confinment.omega0 = [1.0]\n");
        assert!(matches!(Scenario::parse(&dotted), Err(ConfigError::Validation { .. })));
    }

    #[test]
    fn unsorted_lambda_is_rejected() {
        let text = "name = \"x\"\nkind = \"veff-extract\"\nlambda = [1e4, 1e3, 1e5]\n";
        assert!(matches!(
            Scenario::parse(text),
            Err(ConfigError::Validation { key, .. }) if key == "lambda"
        ));
    }

    #[test]
    fn parse_errors_carry_the_line() {
        let text = "name = \"x\"\nkind = \"veff-extract\"\nlambda = [1e3,\n";
        match Scenario::parse(text) {
            Err(ConfigError::Parse { line, .. }) => assert!(line >= 3, "{line}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn serialised_keys_are_documented() {
        fn walk(table: &toml::Table, prefix: &str, out: &mut Vec<String>) {
            for (k, v) in table {
                let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                if let toml::Value::Table(t) = v {
                    walk(t, &path, out);
                }
                out.push(path);
            }
        }
        let mut s = Scenario::parse(MINIMAL).unwrap();
        s.confinement_b = Some(FamilySpec::default());
        let table: toml::Table = s.to_toml().parse().unwrap();
        let mut keys = Vec::new();
        walk(&table, "", &mut keys);
        for k in keys {
            assert!(schema_has(&k), "{k} missing from the schema");
        }
    }
}
