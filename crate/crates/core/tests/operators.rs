use confine_core::geometry::{CurveShape, EmbeddingCurve, RigidMotion};
use confine_core::potentials::ConfinementFamily;
use confine_core::qsolve::{build_full_hamiltonian, Grid2D};
use confine_core::reduction::slow_band;
use confine_core::series::CosineSeries;
use confine_core::Sequential;
use proptest::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

fn ellipse() -> EmbeddingCurve {
    EmbeddingCurve::new(CurveShape::Ellipse { a: 1.2, b: 0.8 }).unwrap()
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn tube_hamiltonian_is_self_adjoint_in_weighted_product(seed in any::<u64>(), v1 in -1.0f64..1.0) {
        let curve = ellipse();
        let l = curve.length();
        let family = ConfinementFamily::harmonic(1.0, l).unwrap();
        let v = CosineSeries::new(vec![0.0, v1], l);
        let grid = Grid2D::for_confinement(&curve, &family, 1e4, 1.0, 32, 24).unwrap();
        let op = build_full_hamiltonian(&grid, &curve, &family, 1e4, &v, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_vector(&mut rng, op.dim());
        let y = random_vector(&mut rng, op.dim());
        let (hx, hy) = (op.apply(&x), op.apply(&y));
        let lhs = op.inner(&x, &hy);
        let rhs = op.inner(&hx, &y);
        let scale = op.inner(&x, &hx).abs().max(op.inner(&y, &hy).abs());
        prop_assert!((lhs - rhs).abs() < 1e-12 * scale, "{lhs} vs {rhs}");
    }
}

#[test]
fn spectrum_is_invariant_under_rigid_motion() {
    let base = ellipse();
    let moved = EmbeddingCurve::new(RigidMotion {
        inner: CurveShape::Ellipse { a: 1.2, b: 0.8 },
        angle: 0.7,
        offset: [3.0, -1.5],
    })
    .unwrap();
    let l = base.length();
    let family = ConfinementFamily::harmonic(1.0, l).unwrap();
    let v = CosineSeries::new(vec![0.0, 0.5], l);
    let levels = |curve: &EmbeddingCurve| {
        slow_band(curve, &family, &v, 1e4, 1.0, 48, 32, 4, 1e-10, 0, &Sequential)
            .unwrap()
            .levels
    };
    for (a, b) in levels(&base).iter().zip(levels(&moved)) {
        assert!((a - b).abs() < 1e-8 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn constant_potential_shifts_every_level() {
    let curve = ellipse();
    let l = curve.length();
    let family = ConfinementFamily::harmonic(1.0, l).unwrap();
    let band = |c: f64| {
        slow_band(
            &curve,
            &family,
            &CosineSeries::constant(c, l),
            1e4,
            1.0,
            48,
            32,
            5,
            1e-10,
            0,
            &Sequential,
        )
        .unwrap()
        .levels
    };
    let (zero, shifted) = (band(0.0), band(0.75));
    for (a, b) in zero.iter().zip(&shifted) {
        assert!((b - a - 0.75).abs() < 1e-8, "{a} -> {b}");
    }
}
