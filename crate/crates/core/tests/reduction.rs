use confine_core::geometry::{CurveShape, EmbeddingCurve};
use confine_core::potentials::{ground_energy_flatness, ConfinementFamily};
use confine_core::reduction::{coupling_terms, GeometricFit};
use confine_core::series::CosineSeries;

#[test]
fn varying_harmonic_width_on_a_line_matches_gaussian_overlap() {
    // psi ~ exp(-r^2 / 2 sigma^2) with sigma^2 = hbar / (omega sqrt(lambda)):
    // int (d_s psi)^2 = (sigma'/sigma)^2 / 2 = omega'^2 / (8 omega^2)
    let length = 10.0;
    let curve = EmbeddingCurve::new(CurveShape::Line { length }).unwrap();
    let omega = CosineSeries::new(vec![1.0, 0.2], length);
    let family = ConfinementFamily::smooth(omega.clone(), CosineSeries::zero(length), CosineSeries::zero(length)).unwrap();
    let (lambda, hbar) = (1e4, 1.0);
    let scale = 0.2f64.powi(2) / 16.0;
    let f_error = |terms: &confine_core::reduction::CouplingTerms| {
        terms
            .s
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let (w, dw) = (omega.eval(*s), omega.derivative(*s));
                (terms.f[i] - dw * dw / (16.0 * w * w)).abs()
            })
            .fold(0.0, f64::max)
    };
    let coarse = coupling_terms(&curve, &family, lambda, hbar, 64, 96).unwrap();
    let terms = coupling_terms(&curve, &family, lambda, hbar, 64, 192).unwrap();
    let (e96, e192) = (f_error(&coarse), f_error(&terms));
    assert!(e192 < 5e-4 * scale, "f error {e192:.3e}");
    // second order in the normal spacing
    assert!((e96 / e192 - 4.0).abs() < 0.5, "{e96:.3e} -> {e192:.3e}");
    for (i, s) in terms.s.iter().enumerate() {
        let w = omega.eval(*s);
        assert!(terms.h[i].abs() < 1e-4 * scale, "s={s}: h={}", terms.h[i]);
        let residual = 0.5 * hbar * lambda.sqrt() * (w - omega.mean());
        let tol = 1e-5 * hbar * lambda.sqrt() * w;
        assert!((terms.fast_residual[i] - residual).abs() < tol, "s={s}: {} vs {residual}", terms.fast_residual[i]);
    }
}

#[test]
fn joint_rescaling_of_hbar_and_lambda_collapses_v_eff() {
    // H(lambda, hbar) with lambda -> 4 lambda, hbar -> 2 hbar is exactly 4 H
    let curve = EmbeddingCurve::new(CurveShape::Ellipse { a: 1.2, b: 0.8 }).unwrap();
    let family = ConfinementFamily::harmonic(1.0, curve.length()).unwrap();
    let a = coupling_terms(&curve, &family, 1e4, 0.5, 128, 64).unwrap();
    let b = coupling_terms(&curve, &family, 4e4, 1.0, 128, 64).unwrap();
    let (va, vb) = (a.v_eff(), b.v_eff());
    let range = vb.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - vb.iter().cloned().fold(f64::INFINITY, f64::min);
    for i in 0..va.len() {
        assert!((va[i] / 0.25 - vb[i]).abs() < 1e-8 * range, "{} vs {}", va[i] / 0.25, vb[i]);
    }
}

/// Least-squares slope of `v` against the analytic `kappa^2` of `(a cos t, b sin t)`.
fn curvature_slope(curve: &EmbeddingCurve, s: &[f64], v: &[f64]) -> f64 {
    let (a, b) = (1.2f64, 0.8f64);
    let kappa_sq: Vec<f64> = s
        .iter()
        .map(|s| {
            let t = curve.param_at(*s);
            let den = (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).powf(1.5);
            (a * b / den).powi(2)
        })
        .collect();
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    let (mv, mk) = (mean(v), mean(&kappa_sq));
    let cov: f64 = v.iter().zip(&kappa_sq).map(|(x, y)| (x - mv) * (y - mk)).sum();
    let var: f64 = kappa_sq.iter().map(|y| (y - mk).powi(2)).sum();
    cov / var
}

#[test]
fn assembled_potential_on_an_ellipse_tends_to_minus_an_eighth_curvature_squared() {
    let curve = EmbeddingCurve::new(CurveShape::Ellipse { a: 1.2, b: 0.8 }).unwrap();
    let family = ConfinementFamily::harmonic(1.0, curve.length()).unwrap();
    let mut c = Vec::new();
    for lambda in [1e4, 1e5, 1e6] {
        let terms = coupling_terms(&curve, &family, lambda, 1.0, 128, 96).unwrap();
        let v = terms.v_eff();
        let slope = curvature_slope(&curve, &terms.s, &v);
        let fit = GeometricFit::fit(&curve, &terms.s, &v, true).unwrap();
        assert!((fit.coefficient - slope).abs() < 1e-6 * slope.abs(), "{} vs {slope}", fit.coefficient);
        c.push(slope);
    }
    // the finite-scale error falls by sqrt(10) per decade
    let ratio = (c[1] + 0.125) / (c[2] + 0.125);
    assert!((ratio - 10f64.sqrt()).abs() < 0.5, "c = {c:?}");
    let limit = c[2] - (c[1] - c[2]) / (10f64.sqrt() - 1.0);
    assert!((limit + 0.125).abs() < 5e-4, "limit {limit}, c = {c:?}");
}

#[test]
fn tuned_harmonic_family_has_scale_independent_spread() {
    // the spread of the fast ground energy along the curve is hbar^2 (max k^2 - min k^2) / 8 + O(lambda^-1/2)
    let curve = EmbeddingCurve::new(CurveShape::Ellipse { a: 1.2, b: 0.8 }).unwrap();
    let omega = CosineSeries::new(vec![1.0, 0.0, 0.3], curve.length());
    let family = ConfinementFamily::smooth(omega, CosineSeries::zero(curve.length()), CosineSeries::zero(curve.length()))
        .unwrap()
        .tune_harmonic()
        .unwrap();
    assert!(family.is_tuned());
    let report = ground_energy_flatness(&family, &[1e4, 1e5, 1e6], &curve, 1.0, 64, 96).unwrap();
    let (a, b) = (1.2f64, 0.8f64);
    let expected = ((a / (b * b)).powi(2) - (b / (a * a)).powi(2)) / 8.0;
    let last = *report.max_egr_deviation.last().unwrap();
    assert!((last - expected).abs() < 0.02 * expected, "{last} vs {expected}");
    assert!(report.deviation_variation() < 0.05, "{:?}", report.max_egr_deviation);
}
