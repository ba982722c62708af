//! One function per experiment kind. Each returns metrics, pass/fail checks
//! and the CSV tables it produced.

use confine_core::classical::{
    adiabatic_invariance_experiment, gap_to_exact, limit_deviation, RampExperiment, TubeRun,
};
use confine_core::geometry::EmbeddingCurve;
use confine_core::numeric::{extrapolate_in_lambda, power_law_exponent};
use confine_core::potentials::{ConfinementFamily, ConfinementKind, LocalProfile};
use confine_core::qsolve::{build_direct_hamiltonian, DirectManifold};
use confine_core::reduction::{
    adiabatic_decoupling_check, ambiguity_experiment, assemble_v_eff, compare_direct_quantizations,
    extract_v_eff_spectral, slow_band, AmbiguityOptions, EffectivePotentialEstimate, GeometricFit, SpectralOptions,
};
use confine_core::series::CosineSeries;
use confine_core::{Result, Sequential, WorkPool};

use crate::output::{Cell, Table};
use crate::row;
use crate::scenario::{Manifold, Scenario, VeffMethod};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("< {limit:e}"),
            pass: value < limit,
        }
    }

    fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!(">= {limit:e}"),
            pass: value >= limit,
        }
    }

    fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound: format!("in [{lo}, {hi}]"),
            pass: value >= lo && value <= hi,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub metrics: Vec<(String, f64)>,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl Outcome {
    fn metric(&mut self, name: impl Into<String>, value: f64) {
        self.metrics.push((name.into(), value));
    }

    /// Folds another outcome in, labelling its entries with `tag`.
    pub fn absorb(&mut self, other: Outcome, tag: Option<&str>) {
        let label = |s: String| match tag {
            Some(t) => format!("{s} [{t}]"),
            None => s,
        };
        self.metrics.extend(other.metrics.into_iter().map(|(k, v)| (label(k), v)));
        self.checks.extend(other.checks.into_iter().map(|mut c| {
            c.name = label(c.name);
            c
        }));
        for table in other.tables {
            match self.tables.iter_mut().find(|t| t.name == table.name) {
                Some(t) => t.extend(table),
                None => self.tables.push(table),
            }
        }
    }
}

/// Objects built from a validated scenario.
pub struct Context<'a, P> {
    pub scenario: &'a Scenario,
    pub curve: Option<EmbeddingCurve>,
    pub family: Option<ConfinementFamily>,
    pub family_b: Option<ConfinementFamily>,
    pub v_slow: CosineSeries,
    pub seed: u64,
    pub pool: &'a P,
}

impl<P: WorkPool> Context<'_, P> {
    fn curve(&self) -> &EmbeddingCurve {
        self.curve.as_ref().expect("curve built for this experiment")
    }

    fn family(&self) -> &ConfinementFamily {
        self.family.as_ref().expect("family built for this experiment")
    }
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn limit_spectrum<P: WorkPool>(ctx: &Context<'_, P>, hbar: f64) -> Result<Outcome> {
    let sc = ctx.scenario;
    let (curve, family) = (ctx.curve(), ctx.family());
    let (n_s, n_r) = (sc.grid.n_s, sc.grid.n_r);
    let k = sc.solver.levels.unwrap_or(5);
    let lambdas = &sc.lambda;
    let direct = build_direct_hamiltonian(DirectManifold::Curve { curve, n_s }, &ctx.v_slow, 0.0, hbar)?
        .eigenvalues(k, sc.solver.tol, ctx.seed)?;
    let samples = ctx
        .pool
        .map(lambdas.len(), |i| {
            slow_band(
                curve,
                family,
                &ctx.v_slow,
                lambdas[i],
                hbar,
                n_s,
                n_r,
                k,
                sc.solver.tol,
                ctx.seed,
                &Sequential,
            )
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(
        "spectra",
        &["hbar", "lambda", "level", "energy", "energy_fine", "even", "spacing", "direct_energy", "direct_spacing"],
    );
    let mut spacings = Vec::with_capacity(samples.len());
    let mut errors = Vec::with_capacity(samples.len());
    for sample in &samples {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|a, b| sample.levels[*a].total_cmp(&sample.levels[*b]));
        let levels: Vec<f64> = order.iter().map(|i| sample.levels[*i]).collect();
        let sp: Vec<f64> = levels.iter().map(|e| e - levels[0]).collect();
        for (j, &i) in order.iter().enumerate() {
            table.push(row![
                hbar,
                sample.lambda,
                j,
                levels[j],
                sample.levels_fine[i],
                sample.even[i],
                sp[j],
                direct[j],
                direct[j] - direct[0]
            ]);
        }
        errors.push(max_abs((1..k).map(|j| sp[j] - (direct[j] - direct[0]))));
        spacings.push(sp);
    }

    let mut out = Outcome::default();
    let mut ext_error: f64 = 0.0;
    let mut ext_uncertainty: f64 = 0.0;
    for j in 1..k {
        let column: Vec<f64> = spacings.iter().map(|sp| sp[j]).collect();
        let ex = extrapolate_in_lambda(lambdas, &column)?;
        let d = direct[j] - direct[0];
        ext_error = ext_error.max((ex.limit - d).abs());
        ext_uncertainty = ext_uncertainty.max(ex.uncertainty);
        table.push(vec![
            hbar.into(),
            f64::INFINITY.into(),
            j.into(),
            Cell::Text(String::new()),
            Cell::Text(String::new()),
            Cell::Text(String::new()),
            ex.limit.into(),
            direct[j].into(),
            d.into(),
        ]);
    }
    for (lambda, e) in lambdas.iter().zip(&errors) {
        out.metric(format!("spacing error at lambda={lambda:e}"), *e);
    }
    out.metric("extrapolation uncertainty", ext_uncertainty);
    let h2 = hbar * hbar;
    let tol = &sc.tolerance;
    out.checks.push(Check::below(
        "extrapolated spacing error / hbar^2",
        ext_error / h2,
        tol.spacing_error.unwrap_or(1e-3),
    ));
    let slope = if errors.iter().all(|e| *e > 0.0) {
        power_law_exponent(lambdas, &errors)?.slope
    } else {
        f64::NAN
    };
    out.checks.push(Check::within(
        "spacing convergence exponent",
        slope,
        tol.exponent_min.unwrap_or(-0.6),
        tol.exponent_max.unwrap_or(-0.4),
    ));
    out.tables.push(table);
    Ok(out)
}

fn veff_rows(table: &mut Table, curve: &EmbeddingCurve, est: &EffectivePotentialEstimate) {
    let h2 = est.hbar * est.hbar;
    for ((s, v), u) in est.s.iter().zip(&est.values).zip(&est.uncertainty) {
        table.push(row![est.hbar, est.method.label(), *s, curve.curvature(*s), *v, *u, v / h2]);
    }
}

fn has_constant_curvature(curve: &EmbeddingCurve, s: &[f64]) -> bool {
    let k: Vec<f64> = s.iter().map(|x| curve.curvature(*x)).collect();
    let hi = k.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = k.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo <= 1e-9 * hi.abs().max(1.0)
}

fn geometric_checks(out: &mut Outcome, sc: &Scenario, curve: &EmbeddingCurve, est: &EffectivePotentialEstimate) -> Result<()> {
    let label = est.method.label();
    let fit = GeometricFit::fit(curve, &est.s, &est.values, false)?;
    let h2 = est.hbar * est.hbar;
    let c = fit.coefficient / h2;
    out.metric(format!("coefficient ({label})"), c);
    out.metric(format!("max uncertainty ({label})"), est.max_uncertainty());
    out.metric(format!("range ({label})"), est.range());
    let scale = if has_constant_curvature(curve, &est.s) {
        max_abs(est.values.iter().copied())
    } else {
        est.range()
    };
    let tol = &sc.tolerance;
    out.checks.push(Check::below(
        format!("geometric fit residual ({label})"),
        if scale > 0.0 { fit.residual_rms / scale } else { f64::INFINITY },
        tol.fit_residual.unwrap_or(0.1),
    ));
    if let Some(expected) = tol.coefficient {
        let rel = tol.coefficient_rel.unwrap_or(0.1);
        out.checks.push(Check::below(
            format!("coefficient deviation from {expected} ({label})"),
            ((c - expected) / expected).abs(),
            rel,
        ));
    }
    Ok(())
}

pub fn veff_extract<P: WorkPool>(ctx: &Context<'_, P>, hbar: f64) -> Result<Outcome> {
    let sc = ctx.scenario;
    let (curve, family) = (ctx.curve(), ctx.family());
    let method = sc.veff.method;
    let assembly = match method {
        VeffMethod::Spectral => None,
        _ => Some(assemble_v_eff(curve, family, &sc.lambda, hbar, sc.grid.n_s, sc.grid.n_r, ctx.pool)?),
    };
    let spectral = match method {
        VeffMethod::Assembly => None,
        _ => {
            let opts = SpectralOptions {
                n_s: sc.grid.n_s,
                n_r: sc.grid.n_r,
                terms: sc.solver.terms,
                levels: sc.solver.levels,
                tol: sc.solver.tol,
                seed: ctx.seed,
            };
            Some(extract_v_eff_spectral(curve, family, &ctx.v_slow, &sc.lambda, hbar, &opts, ctx.pool)?.0)
        }
    };

    let mut out = Outcome::default();
    let mut table = Table::new(
        "veff",
        &["hbar", "method", "s", "kappa", "v_eff", "uncertainty", "v_eff_over_hbar2"],
    );
    for est in assembly.iter().chain(spectral.iter()) {
        veff_rows(&mut table, curve, est);
        geometric_checks(&mut out, sc, curve, est)?;
    }
    if let (Some(a), Some(b)) = (&assembly, &spectral) {
        let ratio = a
            .s
            .iter()
            .zip(a.values.iter().zip(&a.uncertainty))
            .zip(b.values.iter().zip(&b.uncertainty))
            .map(|((_, (va, ua)), (vb, ub))| (va - vb).abs() / (ua * ua + ub * ub).sqrt())
            .fold(0.0, f64::max);
        out.metric(
            "max |assembly - spectral|",
            max_abs(a.values.iter().zip(&b.values).map(|(x, y)| x - y)),
        );
        out.checks.push(Check {
            name: "method disagreement / combined uncertainty".into(),
            value: ratio,
            bound: format!("<= {}", sc.tolerance.agreement.unwrap_or(2.0)),
            pass: ratio <= sc.tolerance.agreement.unwrap_or(2.0),
        });
    }
    out.tables.push(table);
    Ok(out)
}

fn tube_run(sc: &Scenario, curve: &EmbeddingCurve) -> TubeRun {
    let c = &sc.classical;
    TubeRun {
        s0: c.s0,
        speed: c.speed,
        t_final: c.laps * curve.length() / c.speed.abs(),
        steps_per_period: c.steps_per_period,
        record_every: c.record_every,
    }
}

pub fn ambiguity<P: WorkPool>(ctx: &Context<'_, P>, hbar: f64) -> Result<Outcome> {
    let sc = ctx.scenario;
    let curve = ctx.curve();
    let a = ctx.family();
    let b = ctx.family_b.as_ref().expect("second family built");
    let run = tube_run(sc, curve);
    let opts = AmbiguityOptions {
        n_s: sc.grid.n_s,
        n_r: sc.grid.n_r,
        classical_lambdas: sc.classical.lambda.clone(),
        run,
    };
    let report = ambiguity_experiment(curve, a, b, &ctx.v_slow, &sc.lambda, hbar, &opts, ctx.pool)?;
    let limits = ctx
        .pool
        .map(sc.classical.lambda.len(), |i| {
            limit_deviation(curve, a, &ctx.v_slow, sc.classical.lambda[i], &run)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut table = Table::new(
        "ambiguity",
        &["hbar", "s", "kappa", "v_eff_a", "v_eff_b", "difference", "predicted", "uncertainty"],
    );
    let mut significance: f64 = 0.0;
    for i in 0..report.s.len() {
        let unc = report.a.uncertainty[i].hypot(report.b.uncertainty[i]);
        significance = significance.max(report.difference[i].abs() / unc);
        table.push(row![
            hbar,
            report.s[i],
            curve.curvature(report.s[i]),
            report.a.values[i],
            report.b.values[i],
            report.difference[i],
            report.predicted[i],
            unc
        ]);
    }
    let mut orbits = Table::new("orbits", &["hbar", "lambda", "family_deviation", "limit_deviation"]);
    for ((lambda, dev), lim) in report.classical.iter().zip(&limits) {
        orbits.push(row![hbar, *lambda, *dev, *lim]);
    }

    let mut out = Outcome::default();
    let diff_range = report.difference.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - report.difference.iter().copied().fold(f64::INFINITY, f64::min);
    out.metric("V_eff difference range", diff_range);
    out.metric("max |difference|", max_abs(report.difference.iter().copied()));
    for (lambda, dev) in &report.classical {
        out.metric(format!("orbit deviation at lambda={lambda:e}"), *dev);
    }
    out.checks.push(Check::at_least(
        "difference / combined uncertainty (largest)",
        significance,
        2.0,
    ));
    out.checks.push(Check::below(
        "difference vs perturbative prediction (relative)",
        report.relative_error,
        sc.tolerance.relative_error.unwrap_or(0.15),
    ));
    out.checks.push(Check::at_least(
        "orbit deviation ratio first/last scale",
        report.classical_improvement(),
        sc.tolerance.classical_improvement.unwrap_or(5.0),
    ));
    out.tables.push(table);
    out.tables.push(orbits);
    Ok(out)
}

pub fn direct_compare<P: WorkPool>(ctx: &Context<'_, P>, hbar: f64) -> Result<Outcome> {
    let sc = ctx.scenario;
    let d = &sc.direct;
    let manifold = match d.manifold {
        Manifold::Curve => DirectManifold::Curve {
            curve: ctx.curve(),
            n_s: sc.grid.n_s,
        },
        Manifold::Sphere => DirectManifold::Sphere { radius: d.radius },
    };
    let limit = if d.with_limit {
        Some(assemble_v_eff(ctx.curve(), ctx.family(), &sc.lambda, hbar, sc.grid.n_s, sc.grid.n_r, ctx.pool)?)
    } else {
        None
    };
    let cmp = compare_direct_quantizations(manifold, &ctx.v_slow, &d.alphas, hbar, limit.as_ref(), d.levels)?;

    let mut table = Table::new("spectra", &["hbar", "alpha", "level", "energy"]);
    for a in &cmp.alphas {
        for (k, e) in a.spectrum.iter().enumerate() {
            table.push(row![hbar, a.alpha, k, *e]);
        }
    }
    if let Some(limit) = &cmp.limit_spectrum {
        for (k, e) in limit.iter().enumerate() {
            table.push(row![hbar, "limit", k, *e]);
        }
    }

    let mut out = Outcome::default();
    let base = &cmp.alphas[0];
    let scale = max_abs(cmp.alphas.iter().flat_map(|a| a.spectrum.iter().copied())).max(hbar * hbar);
    let curvature = match d.manifold {
        Manifold::Sphere => 2.0 / (d.radius * d.radius),
        Manifold::Curve => 0.0,
    };
    let worst = cmp
        .alphas
        .iter()
        .flat_map(|a| {
            let expected = (a.alpha - base.alpha) * hbar * hbar * curvature;
            a.spectrum
                .iter()
                .zip(&base.spectrum)
                .map(move |(e, e0)| (e - e0 - expected).abs())
        })
        .fold(0.0, f64::max);
    let name = match d.manifold {
        Manifold::Sphere => "deviation from uniform shift alpha hbar^2 R (relative)",
        Manifold::Curve => "spread of curve spectra over alpha (relative)",
    };
    out.checks.push(Check {
        name: name.into(),
        value: worst / scale,
        bound: format!("<= {:e}", sc.tolerance.shift.unwrap_or(1e-12)),
        pass: worst / scale <= sc.tolerance.shift.unwrap_or(1e-12),
    });
    if limit.is_some() {
        for a in &cmp.alphas {
            out.metric(format!("limit - direct mean shift (alpha={})", a.alpha), a.shift);
            out.metric(format!("limit - direct spacing mismatch (alpha={})", a.alpha), a.spacing_mismatch);
        }
        out.metric("matching alpha", cmp.matching_alpha.unwrap_or(f64::NAN));
        out.metric("non-geometric V_eff", if cmp.non_geometric { 1.0 } else { 0.0 });
    }
    out.tables.push(table);
    Ok(out)
}

pub fn adiabatic_classical<P: WorkPool>(ctx: &Context<'_, P>) -> Result<Outcome> {
    let sc = ctx.scenario;
    let profile = sc.well.profile();
    let r = &sc.ramp;
    let experiment = RampExperiment {
        lambda_from: r.lambda_from,
        lambda_to: r.lambda_to,
        action: r.action,
        steps_per_period: r.steps_per_period,
    };
    let rows = ctx
        .pool
        .map(r.periods.len(), |i| adiabatic_invariance_experiment(&profile, &experiment, &r.periods[i..=i]))
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect::<Vec<_>>();

    let mut table = Table::new(
        "action_drift",
        &["periods", "duration", "initial_action", "final_action", "drift", "energy_ratio"],
    );
    for row in &rows {
        table.push(row![row.periods, row.duration, row.initial_action, row.final_action, row.drift, row.energy_ratio]);
    }

    let mut out = Outcome::default();
    let tol = &sc.tolerance;
    let min_periods = tol.min_periods.unwrap_or(200.0);
    let slow: Vec<_> = rows.iter().filter(|x| x.periods >= min_periods).collect();
    let harmonic = matches!(profile, LocalProfile::Smooth { cubic, quartic, .. } if cubic == 0.0 && quartic == 0.0);
    if harmonic {
        let expected = (r.lambda_to / r.lambda_from).sqrt();
        out.metric("expected energy ratio", expected);
        let dev = if slow.is_empty() {
            f64::NAN
        } else {
            slow.iter().map(|x| (x.energy_ratio - expected).abs()).fold(0.0, f64::max)
        };
        out.checks.push(Check::below(
            format!("energy ratio deviation (ramps >= {min_periods} periods)"),
            dev,
            tol.energy_ratio.unwrap_or(0.01),
        ));
    }
    let drift = if slow.is_empty() {
        f64::NAN
    } else {
        slow.iter().map(|x| x.drift).fold(0.0, f64::max)
    };
    out.checks.push(Check::below(
        format!("action drift (ramps >= {min_periods} periods)"),
        drift,
        tol.drift.unwrap_or(1e-3),
    ));
    if rows.len() >= 2 {
        let increases = rows.windows(2).filter(|w| !(w[1].drift < w[0].drift)).count();
        out.checks.push(Check {
            name: "drift increases as ramp time grows".into(),
            value: increases as f64,
            bound: "= 0".into(),
            pass: increases == 0,
        });
    }
    for row in &rows {
        out.metric(format!("drift at {} periods", row.periods), row.drift);
    }
    out.tables.push(table);
    Ok(out)
}

pub fn wkb_gap<P: WorkPool>(ctx: &Context<'_, P>) -> Result<Outcome> {
    let sc = ctx.scenario;
    let profile = sc.well.profile();
    let hbars = &sc.hbar;
    let gaps = ctx
        .pool
        .map(hbars.len(), |i| gap_to_exact(&profile, sc.wkb.n, hbars[i], sc.well.lambda, sc.wkb.n_grid))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        "wkb_gap",
        &["hbar", "n", "exact", "wkb", "gap", "wkb_hard_wall", "gap_hard_wall"],
    );
    let opt = |x: Option<f64>| x.map(Cell::from).unwrap_or(Cell::Text(String::new()));
    for g in &gaps {
        table.push(vec![
            g.hbar.into(),
            g.n.into(),
            g.exact.into(),
            g.wkb.into(),
            g.gap.into(),
            opt(g.wkb_hard_wall),
            opt(g.gap_hard_wall),
        ]);
    }
    let mut out = Outcome::default();
    let values: Vec<f64> = gaps.iter().map(|g| g.gap).collect();
    let slope = if values.iter().all(|g| *g > 0.0) {
        power_law_exponent(hbars, &values)?.slope
    } else {
        f64::NAN
    };
    out.checks.push(Check::within(
        "log-log slope of |E_exact - E_WKB| against hbar",
        slope,
        sc.tolerance.slope_min.unwrap_or(1.7),
        sc.tolerance.slope_max.unwrap_or(2.3),
    ));
    if let Some(hard) = gaps.iter().map(|g| g.gap_hard_wall).collect::<Option<Vec<f64>>>() {
        out.metric("largest gap with hard-wall Maslov index", max_abs(hard));
    }
    out.tables.push(table);
    Ok(out)
}

pub fn decoupling<P: WorkPool>(ctx: &Context<'_, P>, hbar: f64) -> Result<Outcome> {
    let sc = ctx.scenario;
    let family = ctx.family();
    let rep = adiabatic_decoupling_check(
        ctx.curve(),
        family,
        &sc.lambda,
        hbar,
        sc.grid.n_s,
        sc.grid.n_r,
        sc.decoupling.speed,
        ctx.pool,
    )?;
    let mut table = Table::new("decoupling", &["hbar", "lambda", "s", "ratio"]);
    for (lambda, row) in rep.lambdas.iter().zip(&rep.ratio) {
        for (s, r) in rep.s.iter().zip(row) {
            table.push(row![hbar, *lambda, *s, *r]);
        }
    }
    let mut out = Outcome::default();
    for (lambda, m) in rep.lambdas.iter().zip(&rep.max_ratio) {
        out.metric(format!("max ratio at lambda={lambda:e}"), *m);
    }
    let (expected, spread) = match family.kind() {
        ConfinementKind::Smooth => (-0.5, 0.1),
        ConfinementKind::Hardwall => (-2.0, 0.2),
    };
    let expected = sc.tolerance.exponent.unwrap_or(expected);
    let spread = sc.tolerance.exponent_tol.unwrap_or(spread);
    let slope = rep.exponent.map(|f| f.slope).unwrap_or(f64::NAN);
    out.checks.push(Check::within(
        "decoupling exponent",
        slope,
        expected - spread,
        expected + spread,
    ));
    out.tables.push(table);
    Ok(out)
}
