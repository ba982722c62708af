use std::f64::consts::PI;

use confine_core::geometry::{tubular_metric, CurveShape, EmbeddingCurve, RigidMotion};
use proptest::prelude::*;

/// Ellipse perimeter by the trapezoid rule on the periodic speed.
fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let n = 4096;
    (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            (a * a * t.sin().powi(2) + b * b * t.cos().powi(2)).sqrt()
        })
        .sum::<f64>()
        * 2.0
        * PI
        / n as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ellipse_length_and_vertex_curvature(a in 0.5f64..2.0, ratio in 0.4f64..1.0) {
        let b = a * ratio;
        let curve = EmbeddingCurve::new(CurveShape::Ellipse { a, b }).unwrap();
        let l = curve.length();
        prop_assert!((l - ellipse_perimeter(a, b)).abs() < 1e-10 * l);
        // vertices at t = 0 and t = pi/2
        prop_assert!((curve.curvature(0.0) - a / (b * b)).abs() < 1e-8);
        prop_assert!((curve.curvature(0.25 * l) - b / (a * a)).abs() < 1e-8);
        prop_assert!((curve.total_curvature(512) - 2.0 * PI).abs() < 1e-8);
    }

    #[test]
    fn rigid_motions_preserve_intrinsic_data(
        angle in -PI..PI,
        dx in -3.0f64..3.0,
        dy in -3.0f64..3.0,
        s in 0.0f64..1.0,
    ) {
        let base = EmbeddingCurve::new(CurveShape::Ellipse { a: 1.3, b: 0.7 }).unwrap();
        let moved = EmbeddingCurve::new(RigidMotion {
            inner: CurveShape::Ellipse { a: 1.3, b: 0.7 },
            angle,
            offset: [dx, dy],
        })
        .unwrap();
        let l = base.length();
        prop_assert!((moved.length() - l).abs() < 1e-12 * l);
        let s = s * l;
        prop_assert!((moved.curvature(s) - base.curvature(s)).abs() < 1e-9);
        let p = base.embed(s, 0.05);
        let q = moved.embed(s, 0.05);
        let (c, sn) = (angle.cos(), angle.sin());
        let expect = [c * p[0] - sn * p[1] + dx, sn * p[0] + c * p[1] + dy];
        prop_assert!((q[0] - expect[0]).hypot(q[1] - expect[1]) < 1e-9);
    }

    #[test]
    fn frame_is_orthonormal(s in 0.0f64..1.0) {
        let curve = EmbeddingCurve::new(CurveShape::Fourier {
            x_cos: vec![0.0, 1.0, 0.0, 0.1],
            x_sin: vec![],
            y_cos: vec![],
            y_sin: vec![0.0, 0.9, 0.05],
        })
        .unwrap();
        let f = curve.frame(s * curve.length());
        let dot = f.tangent[0] * f.normal[0] + f.tangent[1] * f.normal[1];
        prop_assert!(dot.abs() < 1e-12);
        prop_assert!((f.tangent[0].hypot(f.tangent[1]) - 1.0).abs() < 1e-12);
        prop_assert!((f.normal[0].hypot(f.normal[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn metric_matches_offset_scaling(kappa in -2.0f64..2.0, r in -0.4f64..0.4) {
        let g = tubular_metric(kappa, 0.0, r).unwrap();
        let j = 1.0 - kappa * r;
        prop_assert!((g.sqrt_g - j).abs() < 1e-14);
        prop_assert!((g.g_ss - j * j).abs() < 1e-14);
        prop_assert_eq!(g.g_rr, 1.0);
    }
}

#[test]
fn offset_curve_length_scales_with_metric() {
    // a parallel curve at distance r has length L - r * (total curvature)
    let curve = EmbeddingCurve::new(CurveShape::Ellipse { a: 1.2, b: 0.8 }).unwrap();
    let l = curve.length();
    let r = 0.1;
    let n = 4000;
    let mut length = 0.0;
    let mut prev = curve.embed(0.0, r);
    for k in 1..=n {
        let p = curve.embed(l * k as f64 / n as f64, r);
        length += (p[0] - prev[0]).hypot(p[1] - prev[1]);
        prev = p;
    }
    assert!((length - (l - 2.0 * PI * r)).abs() < 1e-5, "{length}");
}

/// `|x' y'' - y' x''| / |x'|^3` from central differences of the raw ellipse.
fn frenet_curvature(a: f64, b: f64, t: f64) -> f64 {
    let x = |t: f64| [a * t.cos(), b * t.sin()];
    let h = 1e-3;
    let (p, c, m) = (x(t + h), x(t), x(t - h));
    let d1 = [(p[0] - m[0]) / (2.0 * h), (p[1] - m[1]) / (2.0 * h)];
    let d2 = [(p[0] - 2.0 * c[0] + m[0]) / (h * h), (p[1] - 2.0 * c[1] + m[1]) / (h * h)];
    (d1[0] * d2[1] - d1[1] * d2[0]).abs() / d1[0].hypot(d1[1]).powi(3)
}

#[test]
fn ellipse_curvature_matches_finite_difference_frenet() {
    let curve = EmbeddingCurve::new(CurveShape::Ellipse { a: 2.0, b: 1.0 }).unwrap();
    let k0 = frenet_curvature(2.0, 1.0, 0.0);
    let k1 = frenet_curvature(2.0, 1.0, 0.5 * PI);
    assert!((k0 - 2.0).abs() < 1e-5 && (k1 - 0.25).abs() < 1e-5, "{k0} {k1}");
    assert!((curve.frame_at_param(0.0).curvature - k0).abs() < 1e-5);
    assert!((curve.frame_at_param(0.5 * PI).curvature - k1).abs() < 1e-5);
    let g = curve.metric_at(0.0, 0.05).unwrap();
    assert!((g.g_ss - 0.81).abs() < 1e-12);
    for i in 0..16 {
        let t = 0.1 + 2.0 * PI * i as f64 / 16.0;
        let s = curve.arc_length_at_param(t);
        assert!((curve.curvature(s) - frenet_curvature(2.0, 1.0, t)).abs() < 1e-5, "t={t}");
    }
}

#[test]
fn curvature_in_arc_length_is_independent_of_parametrization() {
    let (a, b, phi) = (1.2f64, 0.8f64, 0.9f64);
    let base = EmbeddingCurve::new(CurveShape::Ellipse { a, b }).unwrap();
    // the same ellipse with its parameter origin moved to t = phi
    let shifted = EmbeddingCurve::new(CurveShape::Fourier {
        x_cos: vec![0.0, a * phi.cos()],
        x_sin: vec![0.0, -a * phi.sin()],
        y_cos: vec![0.0, b * phi.sin()],
        y_sin: vec![0.0, b * phi.cos()],
    })
    .unwrap();
    let l = base.length();
    assert!((shifted.length() - l).abs() < 1e-10 * l);
    let origin = base.arc_length_at_param(phi);
    for i in 0..64 {
        let s = l * i as f64 / 64.0;
        let (k1, k2) = (shifted.curvature(s), base.curvature(base.wrap(s + origin)));
        assert!((k1 - k2).abs() < 1e-8, "s={s}: {k1} vs {k2}");
    }
}
