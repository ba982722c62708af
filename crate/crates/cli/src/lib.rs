//! Scenario-driven runner for the `confine-core` experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod builtin;
pub mod experiments;
pub mod output;
pub mod pool;
pub mod scenario;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use experiments::{Check, Context, Outcome};
use pool::RayonPool;
use scenario::{ConfigError, ExperimentKind, Manifold, Scenario};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("scenario `{scenario}` ({kind}): {source}")]
    Module {
        scenario: String,
        kind: ExperimentKind,
        #[source]
        source: confine_core::Error,
    },

    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },

    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

impl RunError {
    /// 1 for numerical failures inside a pipeline, 2 for configuration and setup.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Module { .. } => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: Option<u64>,
    /// 0 picks the machine's parallelism.
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub kind: ExperimentKind,
    /// SHA-256 of the resolved scenario.
    pub hash: String,
    pub seed: u64,
    pub resolved: String,
    pub metrics: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub outputs: Vec<PathBuf>,
    pub report_path: PathBuf,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let _ = writeln!(s, "kind: {}", self.kind);
        let _ = writeln!(s, "hash: sha256:{}", self.hash);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "\n[resolved scenario]\n{}", self.resolved.trim_end());
        let _ = writeln!(s, "\n[metrics]");
        for (k, v) in &self.metrics {
            let _ = writeln!(s, "{k} = {v:e}");
        }
        let _ = writeln!(s, "\n[checks]");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{} {} = {:e} ({})",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.value,
                c.bound
            );
        }
        let _ = writeln!(s, "\n[outputs]");
        for p in &self.outputs {
            let _ = writeln!(s, "{}", p.display());
        }
        let _ = writeln!(s, "\nresult: {}", if self.passed() { "PASS" } else { "FAIL" });
        s
    }
}

fn io_error(path: &Path, e: std::io::Error) -> RunError {
    RunError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(";")
}

/// Runs a validated scenario, writing CSVs and `report.txt` into `opts.out`.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunReport, RunError> {
    let mut scenario = scenario.clone();
    if let Some(seed) = opts.seed {
        scenario.seed = seed;
    }
    let sc = &scenario;
    let resolved = sc.to_toml();
    let hash = hex::encode(Sha256::digest(resolved.as_bytes()));
    let pool = RayonPool::new(opts.threads).map_err(|e| RunError::Pool(e.to_string()))?;

    let needs_curve = !matches!(sc.kind, ExperimentKind::AdiabaticClassical | ExperimentKind::WkbGap)
        && !(sc.kind == ExperimentKind::DirectCompare && sc.direct.manifold == Manifold::Sphere);
    let curve = needs_curve.then(|| sc.curve()).transpose()?;
    let family = curve.as_ref().map(|c| sc.family(c)).transpose()?;
    let family_b = match (&curve, sc.kind) {
        (Some(c), ExperimentKind::Ambiguity) => Some(sc.family_b(c)?),
        _ => None,
    };
    let period = curve.as_ref().map(|c| c.length()).unwrap_or(1.0);
    let v_slow = confine_core::series::CosineSeries::new(sc.potential.v.clone(), period);
    let ctx = Context {
        scenario: sc,
        curve,
        family,
        family_b,
        v_slow,
        seed: sc.seed,
        pool: &pool,
    };

    let module = |source| RunError::Module {
        scenario: sc.name.clone(),
        kind: sc.kind,
        source,
    };
    let mut outcome = Outcome::default();
    match sc.kind {
        ExperimentKind::AdiabaticClassical => outcome = experiments::adiabatic_classical(&ctx).map_err(module)?,
        ExperimentKind::WkbGap => outcome = experiments::wkb_gap(&ctx).map_err(module)?,
        kind => {
            for &hbar in &sc.hbar {
                let one = match kind {
                    ExperimentKind::LimitSpectrum => experiments::limit_spectrum(&ctx, hbar),
                    ExperimentKind::VeffExtract => experiments::veff_extract(&ctx, hbar),
                    ExperimentKind::Ambiguity => experiments::ambiguity(&ctx, hbar),
                    ExperimentKind::DirectCompare => experiments::direct_compare(&ctx, hbar),
                    ExperimentKind::Decoupling => experiments::decoupling(&ctx, hbar),
                    _ => unreachable!("classical kinds handled above"),
                }
                .map_err(module)?;
                let tag = format!("hbar={hbar}");
                outcome.absorb(one, (sc.hbar.len() > 1).then_some(tag.as_str()));
            }
        }
    }

    std::fs::create_dir_all(&opts.out).map_err(|e| io_error(&opts.out, e))?;
    let meta = vec![
        ("scenario".to_string(), sc.name.clone()),
        ("kind".to_string(), sc.kind.to_string()),
        ("hash".to_string(), format!("sha256:{hash}")),
        ("seed".to_string(), sc.seed.to_string()),
        ("hbar".to_string(), fmt_list(&sc.hbar)),
        ("lambda".to_string(), fmt_list(&sc.lambda)),
        (
            "conventions".to_string(),
            "V_eff in energy units with the flat harmonic fast energy subtracted; s is arc length from the curve parameter origin".to_string(),
        ),
        (
            "version".to_string(),
            format!("confine {}", env!("CARGO_PKG_VERSION")),
        ),
    ];
    let mut outputs = Vec::with_capacity(outcome.tables.len());
    for table in &outcome.tables {
        outputs.push(table.write(&opts.out, &meta).map_err(|e| io_error(&opts.out, e))?);
    }
    let report = RunReport {
        scenario: sc.name.clone(),
        kind: sc.kind,
        hash,
        seed: sc.seed,
        resolved,
        metrics: outcome.metrics,
        checks: outcome.checks,
        outputs,
        report_path: opts.out.join("report.txt"),
    };
    std::fs::write(&report.report_path, report.render()).map_err(|e| io_error(&report.report_path, e))?;
    Ok(report)
}
