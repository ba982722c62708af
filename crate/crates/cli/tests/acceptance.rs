//! Acceptance suite: one PASS/FAIL line per criterion A1-A9.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use confine::builtin::resolve;
use confine::{run, RunReport, RunOptions};
use confine_core::potentials::LocalProfile;
use confine_core::qsolve::{
    build_laplace_beltrami_1d, lowest_eigenpairs, richardson_levels, Axis, FlatMetric, Grid1D,
};

struct Line {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn scenario(name: &str, dir: &std::path::Path) -> RunReport {
    let sc = resolve(name).unwrap_or_else(|e| panic!("{name}: {e}"));
    run(
        &sc,
        &RunOptions {
            out: dir.join(name),
            seed: None,
            threads: 0,
        },
    )
    .unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn checks_summary(report: &RunReport) -> String {
    report
        .checks
        .iter()
        .map(|c| format!("{}={:.3e}", c.name, c.value))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Levels on `grid` and its coarsening, combined to remove the `h^2` error.
fn extrapolated_levels(grid: &Grid1D, axis: Axis, k: usize, v: impl Fn(f64) -> f64 + Copy) -> Vec<f64> {
    let solve = |g: &Grid1D| {
        let op = build_laplace_beltrami_1d(g, axis, &FlatMetric, 1.0)
            .unwrap()
            .with_potential(|s, r| v(if matches!(axis, Axis::S { .. }) { s } else { r }))
            .unwrap();
        lowest_eigenpairs(&op, k, 1e-13, 0).unwrap().eigenvalues
    };
    let coarse = grid.coarsened().unwrap();
    richardson_levels(&solve(grid), grid.spacing(), &solve(&coarse), coarse.spacing())
}

fn a1() -> Line {
    let ring = Grid1D::periodic(512, 2.0 * PI).unwrap();
    let ring_levels = extrapolated_levels(&ring, Axis::S { r: 0.0 }, 5, |_| 0.0);
    let ring_err = ring_levels
        .iter()
        .zip([0.0, 0.5, 0.5, 2.0, 2.0])
        .fold(0.0f64, |m, (e, x)| m.max((e - x).abs()));

    let profile = LocalProfile::Smooth {
        omega0: 1.0,
        cubic: 0.0,
        quartic: 0.0,
    };
    let line = Grid1D::dirichlet(801, -10.0, 10.0).unwrap();
    let ho = extrapolated_levels(&line, Axis::R { s: 0.0 }, 3, |r| profile.eval(1.0, r));
    let ho_err = ho
        .iter()
        .zip([0.5, 1.5, 2.5])
        .fold(0.0f64, |m, (e, x)| m.max((e - x).abs()));
    Line {
        id: "A1",
        pass: ring_err < 1e-4 && ho_err < 1e-6,
        detail: format!("ring max error {ring_err:.2e} (< 1e-4), oscillator max error {ho_err:.2e} (< 1e-6)"),
    }
}

fn from_report(id: &'static str, reports: &[&RunReport], extra: Option<(bool, String)>) -> Line {
    let mut pass = reports.iter().all(|r| r.passed());
    let mut detail: Vec<String> = reports
        .iter()
        .map(|r| format!("{}: {}", r.scenario, checks_summary(r)))
        .collect();
    if let Some((ok, text)) = extra {
        pass &= ok;
        detail.push(text);
    }
    Line {
        id,
        pass,
        detail: detail.join(" | "),
    }
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let mut lines = vec![a1()];

    let limit = scenario("circle-limit", dir.path());
    lines.push(from_report("A2", &[&limit], None));

    let circle = scenario("circle-veff", dir.path());
    let ellipse = scenario("ellipse-veff", dir.path());
    let geometric: Vec<_> = ellipse
        .checks
        .iter()
        .filter(|c| c.name.starts_with("geometric fit residual") || c.name.starts_with("coefficient deviation"))
        .collect();
    let mut c_detail = Vec::new();
    let mut c_ok = true;
    for label in ["coupling-assembly", "spectral-extrapolation"] {
        let key = format!("coefficient ({label})");
        let (cc, ce) = (circle.metric(&key).unwrap(), ellipse.metric(&key).unwrap());
        let rel = ((cc - ce) / cc).abs();
        c_ok &= rel < 0.1;
        c_detail.push(format!("{label}: c_circle={cc:.5} c_ellipse={ce:.5} rel={rel:.1e}"));
    }
    lines.push(Line {
        id: "A3",
        pass: geometric.iter().all(|c| c.pass) && c_ok,
        detail: format!(
            "{}; {} (circle vs ellipse < 10%)",
            geometric
                .iter()
                .map(|c| format!("{}={:.3e}", c.name, c.value))
                .collect::<Vec<_>>()
                .join("; "),
            c_detail.join("; ")
        ),
    });

    let ambiguity = scenario("ellipse-ambiguity", dir.path());
    lines.push(from_report("A4", &[&ambiguity], None));

    let wkb = scenario("quartic-wkb", dir.path());
    lines.push(from_report("A5", &[&wkb], None));

    let ramp = scenario("harmonic-ramp", dir.path());
    let sc = resolve("harmonic-ramp").unwrap();
    let doublings = sc.ramp.periods.windows(2).filter(|w| (w[1] / w[0] - 2.0).abs() < 1e-12).count();
    let long = sc.ramp.periods.iter().any(|p| *p >= 200.0);
    lines.push(from_report(
        "A6",
        &[&ramp],
        Some((doublings >= 4 && long, format!("{doublings} doublings of the ramp time"))),
    ));

    let sphere = scenario("sphere-direct", dir.path());
    let curve = scenario("ellipse-direct", dir.path());
    lines.push(from_report("A7", &[&sphere, &curve], None));

    let agreement = |r: &RunReport| {
        r.check("method disagreement / combined uncertainty")
            .map(|c| (c.pass, format!("{}: {:.3e} (<= 2)", r.scenario, c.value)))
            .unwrap_or((false, format!("{}: no comparison", r.scenario)))
    };
    let (ok_c, text_c) = agreement(&circle);
    let (ok_e, text_e) = agreement(&ellipse);
    lines.push(Line {
        id: "A8",
        pass: ok_c && ok_e,
        detail: format!("{text_c}; {text_e}"),
    });

    let smooth = scenario("decoupling-smooth", dir.path());
    let hard = scenario("decoupling-hardwall", dir.path());
    lines.push(from_report("A9", &[&smooth, &hard], None));

    println!();
    for line in &lines {
        println!("{} {} {}", line.id, if line.pass { "PASS" } else { "FAIL" }, line.detail);
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    println!(
        "acceptance: {} of {} criteria passed in {:.1}s",
        lines.len() - failed,
        lines.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
