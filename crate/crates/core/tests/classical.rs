use std::f64::consts::PI;

use confine_core::classical::{
    action_of_energy, adiabatic_invariance_experiment, energy_at_action, integrate, step, IntegrateOptions,
    RampExperiment, Schedule, Well1D,
};
use confine_core::numeric::power_law_exponent;
use confine_core::potentials::LocalProfile;
use proptest::prelude::*;

const ANHARMONIC: LocalProfile = LocalProfile::Smooth {
    omega0: 1.0,
    cubic: 0.1,
    quartic: 0.2,
};

fn advance(well: &Well1D, schedule: &Schedule, q: f64, p: f64, t0: f64, dt: f64) -> (f64, f64) {
    let (mut q, mut p, mut t) = ([q], [p], t0);
    let mut grad = [0.0];
    step(well, schedule, &mut q, &mut p, &mut t, dt, &mut grad);
    (q[0], p[0])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn one_step_has_unit_jacobian(q in -0.8f64..0.8, p in -0.8f64..0.8, t0 in 0.0f64..5.0, dt in 0.01f64..0.2) {
        let well = Well1D::new(ANHARMONIC).unwrap();
        let schedule = Schedule::Ramp { from: 1.0, to: 3.0, duration: 5.0 };
        let eps = 1e-5;
        let dq = |dq: f64, dp: f64| advance(&well, &schedule, q + dq, p + dp, t0, dt);
        let (a, b) = (dq(eps, 0.0), dq(-eps, 0.0));
        let (c, d) = (dq(0.0, eps), dq(0.0, -eps));
        let j11 = (a.0 - b.0) / (2.0 * eps);
        let j21 = (a.1 - b.1) / (2.0 * eps);
        let j12 = (c.0 - d.0) / (2.0 * eps);
        let j22 = (c.1 - d.1) / (2.0 * eps);
        let det = j11 * j22 - j12 * j21;
        prop_assert!((det - 1.0).abs() < 1e-8, "det = {det}");
    }

    #[test]
    fn action_round_trips_through_energy(e in 0.05f64..2.0, lambda in 0.5f64..20.0) {
        let action = action_of_energy(&ANHARMONIC, e, lambda).unwrap().action;
        let back = energy_at_action(&ANHARMONIC, action, lambda).unwrap();
        prop_assert!((back - e).abs() < 1e-10 * e);
    }
}

#[test]
fn action_derivative_is_period_over_two_pi() {
    let (e, lambda) = (0.8, 1.0);
    let sample = action_of_energy(&ANHARMONIC, e, lambda).unwrap();
    let de = 1e-4;
    let slope = (action_of_energy(&ANHARMONIC, e + de, lambda).unwrap().action
        - action_of_energy(&ANHARMONIC, e - de, lambda).unwrap().action)
        / (2.0 * de);

    // period from upward zero crossings of the momentum of a simulated orbit
    let well = Well1D::new(ANHARMONIC).unwrap();
    let (lo, _) = sample.turning_points;
    let orbit = integrate(
        &well,
        Schedule::Constant(lambda),
        &[lo],
        &[0.0],
        &IntegrateOptions {
            t_final: 60.0,
            dt: 1e-3,
            record_every: 1,
        },
    )
    .unwrap();
    let mut crossings = Vec::new();
    for i in 1..orbit.times.len() {
        let (p0, p1) = (orbit.momenta[i - 1][0], orbit.momenta[i][0]);
        if p0 < 0.0 && p1 >= 0.0 {
            let (t0, t1) = (orbit.times[i - 1], orbit.times[i]);
            crossings.push(t0 + (t1 - t0) * p0 / (p0 - p1));
        }
    }
    assert!(crossings.len() >= 5);
    let period = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
    assert!((slope - period / (2.0 * PI)).abs() < 1e-5 * slope, "{slope} vs {}", period / (2.0 * PI));
}

#[test]
fn slow_ramps_scale_oscillator_energy_as_square_root_of_lambda() {
    let profile = LocalProfile::Smooth {
        omega0: 1.0,
        cubic: 0.0,
        quartic: 0.0,
    };
    let targets = [2.0, 4.0, 8.0, 16.0];
    let ratios: Vec<f64> = targets
        .iter()
        .map(|&to| {
            adiabatic_invariance_experiment(
                &profile,
                &RampExperiment {
                    lambda_from: 1.0,
                    lambda_to: to,
                    action: 0.5,
                    steps_per_period: 400.0,
                },
                &[200.0],
            )
            .unwrap()[0]
                .energy_ratio
        })
        .collect();
    let fit = power_law_exponent(&targets, &ratios).unwrap();
    assert!((fit.slope - 0.5).abs() < 0.01, "exponent {}", fit.slope);
}

#[test]
fn oversized_step_is_rejected() {
    let well = Well1D::new(ANHARMONIC).unwrap();
    let err = integrate(
        &well,
        Schedule::Constant(100.0),
        &[0.1],
        &[0.0],
        &IntegrateOptions {
            t_final: 1.0,
            dt: 0.05,
            record_every: 1,
        },
    )
    .unwrap_err();
    assert!(matches!(err, confine_core::Error::StepTooLarge { .. }));
}
