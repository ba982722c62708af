//! Classical side: symplectic integration in Cartesian coordinates with a
//! time-dependent confinement scale, action integrals of one-dimensional
//! wells, WKB levels and trajectory comparisons near the constrained limit.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::EmbeddingCurve;
use crate::numeric::{find_root, find_root_above, gauss_legendre, richardson_h2};
use crate::potentials::{ConfinementFamily, ConfinementKind, LocalProfile};
use crate::qsolve::{build_laplace_beltrami_1d, lowest_eigenpairs, Axis, FlatMetric, Grid1D};
use crate::series::CosineSeries;
#[allow(unused_imports)]
use num_traits::Float;

/// Sixth-order composition weights (outer to inner, the last one is central).
const YOSHIDA6: [f64; 4] = [
    -1.177_679_984_178_871,
    0.235_573_213_359_358_13,
    0.784_513_610_477_557_3,
    1.315_186_320_683_911_2,
];

const ACTION_NODES: usize = 96;

/// Confinement scale as a function of time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Constant(f64),
    /// `from -> to` over `duration` with zero first and second derivatives at both ends.
    Ramp { from: f64, to: f64, duration: f64 },
}

impl Schedule {
    pub fn lambda(&self, t: f64) -> f64 {
        match *self {
            Schedule::Constant(l) => l,
            Schedule::Ramp { from, to, duration } => {
                let x = (t / duration).clamp(0.0, 1.0);
                let w = x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
                from + (to - from) * w
            }
        }
    }

    pub fn max_lambda(&self) -> f64 {
        match *self {
            Schedule::Constant(l) => l,
            Schedule::Ramp { from, to, .. } => from.max(to),
        }
    }
}

/// Separable Hamiltonian `p^2/2 + U(q; lambda)` in flat coordinates.
pub trait Dynamics {
    fn dim(&self) -> usize;
    fn potential(&self, q: &[f64], lambda: f64) -> f64;
    fn gradient(&self, q: &[f64], lambda: f64, out: &mut [f64]);
    /// Upper bound on the fastest oscillation frequency of orbits started at `(q, p)`.
    fn max_frequency(&self, q: &[f64], p: &[f64], schedule: &Schedule) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub t_final: f64,
    pub dt: f64,
    /// Record every `record_every`-th step (the final state is always recorded).
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitRecord {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub momenta: Vec<Vec<f64>>,
    /// Energy against the Hamiltonian at the recorded time.
    pub energies: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub schedule: Schedule,
}

impl OrbitRecord {
    pub fn max_relative_energy_drift(&self) -> f64 {
        let e0 = self.energies[0];
        self.energies
            .iter()
            .map(|e| (e - e0).abs() / e0.abs().max(1e-300))
            .fold(0.0, f64::max)
    }

    pub fn final_energy(&self) -> f64 {
        *self.energies.last().expect("non-empty orbit")
    }
}

fn energy<D: Dynamics + ?Sized>(sys: &D, q: &[f64], p: &[f64], lambda: f64) -> f64 {
    0.5 * p.iter().map(|x| x * x).sum::<f64>() + sys.potential(q, lambda)
}

/// One step of the sixth-order composition of kick-drift-kick leapfrog;
/// time is advanced with the drifts so that `lambda(t)` is sampled symmetrically.
pub fn step<D: Dynamics + ?Sized>(
    sys: &D,
    schedule: &Schedule,
    q: &mut [f64],
    p: &mut [f64],
    t: &mut f64,
    dt: f64,
    grad: &mut [f64],
) {
    let order = [0, 1, 2, 3, 2, 1, 0];
    for &i in &order {
        let h = YOSHIDA6[i] * dt;
        sys.gradient(q, schedule.lambda(*t), grad);
        for (pi, g) in p.iter_mut().zip(grad.iter()) {
            *pi -= 0.5 * h * g;
        }
        for (qi, pi) in q.iter_mut().zip(p.iter()) {
            *qi += h * pi;
        }
        *t += h;
        sys.gradient(q, schedule.lambda(*t), grad);
        for (pi, g) in p.iter_mut().zip(grad.iter()) {
            *pi -= 0.5 * h * g;
        }
    }
}

pub fn integrate<D: Dynamics + ?Sized>(
    sys: &D,
    schedule: Schedule,
    q0: &[f64],
    p0: &[f64],
    opts: &IntegrateOptions,
) -> Result<OrbitRecord> {
    let n = sys.dim();
    if q0.len() != n || p0.len() != n {
        return Err(Error::InvalidArgument(format!("initial state must have dimension {n}")));
    }
    if !(opts.dt > 0.0) || !(opts.t_final >= 0.0) || opts.record_every == 0 {
        return Err(Error::InvalidArgument("need dt > 0, t_final >= 0 and record_every >= 1".into()));
    }
    let omega = sys.max_frequency(q0, p0, &schedule);
    let limit = 2.0 * PI / omega / 50.0;
    if opts.dt > limit {
        return Err(Error::StepTooLarge { dt: opts.dt, limit });
    }
    let steps = (opts.t_final / opts.dt).ceil() as usize;
    let dt = if steps == 0 { 0.0 } else { opts.t_final / steps as f64 };
    let mut q = q0.to_vec();
    let mut p = p0.to_vec();
    let mut t = 0.0;
    let mut grad = vec![0.0; n];
    let mut rec = OrbitRecord {
        times: Vec::new(),
        positions: Vec::new(),
        momenta: Vec::new(),
        energies: Vec::new(),
        lambdas: Vec::new(),
        schedule,
    };
    let push = |rec: &mut OrbitRecord, t: f64, q: &[f64], p: &[f64]| {
        let lambda = schedule.lambda(t);
        rec.times.push(t);
        rec.positions.push(q.to_vec());
        rec.momenta.push(p.to_vec());
        rec.energies.push(energy(sys, q, p, lambda));
        rec.lambdas.push(lambda);
    };
    push(&mut rec, t, &q, &p);
    for k in 1..=steps {
        step(sys, &schedule, &mut q, &mut p, &mut t, dt, &mut grad);
        t = k as f64 * dt;
        if k % opts.record_every == 0 || k == steps {
            push(&mut rec, t, &q, &p);
        }
    }
    Ok(rec)
}

fn smooth_coefficients(profile: &LocalProfile) -> Result<(f64, f64, f64)> {
    match *profile {
        LocalProfile::Smooth { omega0, cubic, quartic } => Ok((omega0, cubic, quartic)),
        LocalProfile::Hardwall { .. } => Err(Error::UnsupportedConfinement(
            "hard walls have no force law; use the analytic action".into(),
        )),
    }
}

/// One fast degree of freedom in `lambda v(q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Well1D {
    omega0: f64,
    cubic: f64,
    quartic: f64,
}

impl Well1D {
    pub fn new(profile: LocalProfile) -> Result<Self> {
        let (omega0, cubic, quartic) = smooth_coefficients(&profile)?;
        Ok(Self { omega0, cubic, quartic })
    }

    fn curvature_bound(&self, radius: f64) -> f64 {
        let v2 = |r: f64| self.omega0 * self.omega0 + 6.0 * self.cubic * r + 12.0 * self.quartic * r * r;
        v2(radius).max(v2(-radius)).max(v2(0.0)).max(0.0)
    }
}

impl Dynamics for Well1D {
    fn dim(&self) -> usize {
        1
    }

    fn potential(&self, q: &[f64], lambda: f64) -> f64 {
        LocalProfile::Smooth {
            omega0: self.omega0,
            cubic: self.cubic,
            quartic: self.quartic,
        }
        .eval(lambda, q[0])
    }

    fn gradient(&self, q: &[f64], lambda: f64, out: &mut [f64]) {
        let r = q[0];
        out[0] = lambda * (self.omega0 * self.omega0 * r + 3.0 * self.cubic * r * r + 4.0 * self.quartic * r * r * r);
    }

    fn max_frequency(&self, q: &[f64], p: &[f64], schedule: &Schedule) -> f64 {
        let lambda0 = schedule.lambda(0.0);
        let e = energy(self, q, p, lambda0);
        let profile = LocalProfile::Smooth {
            omega0: self.omega0,
            cubic: self.cubic,
            quartic: self.quartic,
        };
        let radius = turning_points(&profile, e, lambda0)
            .map(|(a, b)| a.abs().max(b.abs()))
            .unwrap_or(q[0].abs());
        (schedule.max_lambda() * self.curvature_bound(radius)).sqrt().max(1e-300)
    }
}

/// Point particle in the plane confined near a curve by `V(s) + lambda v(r; s)`.
pub struct TubeSystem<'a> {
    curve: &'a EmbeddingCurve,
    family: &'a ConfinementFamily,
    v_slow: &'a CosineSeries,
    guess: Cell<f64>,
}

impl<'a> TubeSystem<'a> {
    pub fn new(curve: &'a EmbeddingCurve, family: &'a ConfinementFamily, v_slow: &'a CosineSeries) -> Result<Self> {
        if family.kind() == ConfinementKind::Hardwall {
            return Err(Error::UnsupportedConfinement(
                "classical tube dynamics need a smooth confinement".into(),
            ));
        }
        family.check_curve(curve)?;
        Ok(Self {
            curve,
            family,
            v_slow,
            guess: Cell::new(0.0),
        })
    }

    /// `(s, r)` of a point near the curve.
    pub fn coordinates(&self, q: &[f64]) -> (f64, f64) {
        let (t, s, r) = self.curve.project([q[0], q[1]], self.guess.get());
        self.guess.set(t);
        (s, r)
    }

    /// Phase point on the curve at `s` moving tangentially with speed `v`.
    pub fn tangential_start(&self, s: f64, v: f64) -> ([f64; 2], [f64; 2]) {
        let f = self.curve.frame(s);
        self.guess.set(f.t);
        (f.point, [v * f.tangent[0], v * f.tangent[1]])
    }
}

impl Dynamics for TubeSystem<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn potential(&self, q: &[f64], lambda: f64) -> f64 {
        let (s, r) = self.coordinates(q);
        self.v_slow.eval(s) + self.family.evaluate(lambda, s, r)
    }

    fn gradient(&self, q: &[f64], lambda: f64, out: &mut [f64]) {
        let (t, s, r) = self.curve.project([q[0], q[1]], self.guess.get());
        self.guess.set(t);
        let f = self.curve.frame_at_param(t);
        let series = self.family.series();
        let (w, b, c) = (series[0].eval(s), series[1].eval(s), series[2].eval(s));
        let (dw, db, dc) = (series[0].derivative(s), series[1].derivative(s), series[2].derivative(s));
        let r2 = r * r;
        let d_r = lambda * (w * w * r + 3.0 * b * r2 + 4.0 * c * r2 * r);
        let d_s = self.v_slow.derivative(s) + lambda * (w * dw * r2 + db * r2 * r + dc * r2 * r2);
        let js = 1.0 / (1.0 - f.curvature * r);
        for (k, o) in out.iter_mut().enumerate().take(2) {
            *o = d_s * js * f.tangent[k] + d_r * f.normal[k];
        }
    }

    fn max_frequency(&self, _q: &[f64], _p: &[f64], schedule: &Schedule) -> f64 {
        self.family.max_strength() * schedule.max_lambda().sqrt()
    }
}

/// Arc-length history of a tube orbit, unwrapped to be continuous. Projection
/// starts from the last point the system saw, so reset it to the orbit start first.
pub fn unwrapped_arc_length(sys: &TubeSystem<'_>, orbit: &OrbitRecord) -> Vec<f64> {
    let l = sys.curve.length();
    let mut out: Vec<f64> = Vec::with_capacity(orbit.positions.len());
    for q in &orbit.positions {
        let (s, _) = sys.coordinates(q);
        match out.last() {
            Some(prev) => {
                let d = s - (prev % l + l) % l;
                let d = d - l * (d / l).round();
                out.push(prev + d);
            }
            None => out.push(s),
        }
    }
    out
}

/// Slow motion on the curve in the constrained limit with no fast action,
/// `s'' = -V'(s)`.
struct CurveMotion<'a> {
    v_slow: &'a CosineSeries,
}

impl Dynamics for CurveMotion<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn potential(&self, q: &[f64], _lambda: f64) -> f64 {
        self.v_slow.eval(q[0])
    }

    fn gradient(&self, q: &[f64], _lambda: f64, out: &mut [f64]) {
        out[0] = self.v_slow.derivative(q[0]);
    }

    fn max_frequency(&self, _q: &[f64], _p: &[f64], _schedule: &Schedule) -> f64 {
        let w = 2.0 * PI / self.v_slow.period();
        let c2: f64 = self
            .v_slow
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, c)| c.abs() * (w * k as f64).powi(2))
            .sum();
        c2.sqrt().max(1e-300)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeRun {
    pub s0: f64,
    pub speed: f64,
    pub t_final: f64,
    /// Steps per fast period at the largest scale.
    pub steps_per_period: f64,
    pub record_every: usize,
}

fn run_tube(
    curve: &EmbeddingCurve,
    family: &ConfinementFamily,
    v_slow: &CosineSeries,
    lambda: f64,
    run: &TubeRun,
) -> Result<(OrbitRecord, Vec<f64>)> {
    let sys = TubeSystem::new(curve, family, v_slow)?;
    let (q0, p0) = sys.tangential_start(run.s0, run.speed);
    let omega = family.max_strength() * lambda.sqrt();
    let opts = IntegrateOptions {
        t_final: run.t_final,
        dt: 2.0 * PI / omega / run.steps_per_period,
        record_every: run.record_every,
    };
    let orbit = integrate(&sys, Schedule::Constant(lambda), &q0, &p0, &opts)?;
    sys.tangential_start(run.s0, run.speed);
    let s = unwrapped_arc_length(&sys, &orbit);
    Ok((orbit, s))
}

/// Largest distance between orbits started on the curve with the same
/// tangential velocity under two confinement families at one scale.
pub fn family_deviation(
    curve: &EmbeddingCurve,
    a: &ConfinementFamily,
    b: &ConfinementFamily,
    v_slow: &CosineSeries,
    lambda: f64,
    run: &TubeRun,
) -> Result<f64> {
    let (oa, _) = run_tube(curve, a, v_slow, lambda, run)?;
    let (ob, _) = run_tube(curve, b, v_slow, lambda, run)?;
    Ok(oa
        .positions
        .iter()
        .zip(&ob.positions)
        .map(|(x, y)| ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt())
        .fold(0.0, f64::max))
}

/// Largest arc-length distance between the full orbit and the constrained
/// motion `s'' = -V'(s)` with the same start.
pub fn limit_deviation(
    curve: &EmbeddingCurve,
    family: &ConfinementFamily,
    v_slow: &CosineSeries,
    lambda: f64,
    run: &TubeRun,
) -> Result<f64> {
    let (orbit, s_full) = run_tube(curve, family, v_slow, lambda, run)?;
    let motion = CurveMotion { v_slow };
    let slow = motion.max_frequency(&[0.0], &[0.0], &Schedule::Constant(1.0));
    let opts = IntegrateOptions {
        t_final: run.t_final,
        dt: (2.0 * PI / slow / 50.0).min(run.t_final / 1000.0),
        record_every: 1,
    };
    let limit = integrate(&motion, Schedule::Constant(1.0), &[run.s0], &[run.speed], &opts)?;
    let lim_t = &limit.times;
    let lim_s: Vec<f64> = limit.positions.iter().map(|q| q[0]).collect();
    let mut worst: f64 = 0.0;
    let mut j = 0;
    for (t, s) in orbit.times.iter().zip(&s_full) {
        while j + 1 < lim_t.len() && lim_t[j + 1] <= *t {
            j += 1;
        }
        let value = if j + 1 < lim_t.len() {
            let u = (t - lim_t[j]) / (lim_t[j + 1] - lim_t[j]);
            lim_s[j] + u * (lim_s[j + 1] - lim_s[j])
        } else {
            lim_s[j]
        };
        worst = worst.max((s - value).abs());
    }
    Ok(worst)
}

/// Action at one energy of a one-dimensional well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    pub energy: f64,
    pub lambda: f64,
    pub action: f64,
    pub turning_points: (f64, f64),
}

fn turning_points(profile: &LocalProfile, e: f64, lambda: f64) -> Result<(f64, f64)> {
    match *profile {
        LocalProfile::Hardwall { width } => {
            if e > 0.0 {
                let half = 0.5 * width / lambda;
                Ok((-half, half))
            } else {
                Err(Error::NoTurningPoints { energy: e })
            }
        }
        LocalProfile::Smooth { .. } => {
            if !(e > 0.0) {
                return Err(Error::NoTurningPoints { energy: e });
            }
            let f = |r: f64| profile.eval(lambda, r) - e;
            let step = (e / lambda).sqrt().max(1e-12);
            let hi = find_root_above(f, 0.0, step, 1e-15 * step).map_err(|_| Error::NoTurningPoints { energy: e })?;
            let lo = -find_root_above(|r| f(-r), 0.0, step, 1e-15 * step)
                .map_err(|_| Error::NoTurningPoints { energy: e })?;
            Ok((lo, hi))
        }
    }
}

/// `I = (1/pi) int sqrt(2 (E - lambda v)) dr` between the turning points.
pub fn action_of_energy(profile: &LocalProfile, e: f64, lambda: f64) -> Result<ActionSample> {
    let (lo, hi) = turning_points(profile, e, lambda)?;
    let action = match *profile {
        LocalProfile::Hardwall { width } => (width / lambda) * (2.0 * e).sqrt() / PI,
        LocalProfile::Smooth { .. } => {
            // r = mid - half cos(theta) removes the square-root endpoints
            let (mid, half) = (0.5 * (hi + lo), 0.5 * (hi - lo));
            let (x, w) = gauss_legendre(ACTION_NODES);
            let sum: f64 = x
                .iter()
                .zip(&w)
                .map(|(xi, wi)| {
                    let theta = 0.5 * PI * (xi + 1.0);
                    let r = mid - half * theta.cos();
                    let k = (2.0 * (e - profile.eval(lambda, r))).max(0.0);
                    wi * k.sqrt() * half * theta.sin()
                })
                .sum();
            0.5 * sum
        }
    };
    Ok(ActionSample {
        energy: e,
        lambda,
        action,
        turning_points: (lo, hi),
    })
}

/// Energy whose action is `action`.
pub fn energy_at_action(profile: &LocalProfile, action: f64, lambda: f64) -> Result<f64> {
    if !(action > 0.0) {
        return Err(Error::InvalidArgument(format!("action must be positive, got {action}")));
    }
    if let LocalProfile::Hardwall { width } = *profile {
        let a = width / lambda;
        return Ok(0.5 * (PI * action / a).powi(2));
    }
    let guess = match *profile {
        LocalProfile::Smooth { omega0, .. } if omega0 > 0.0 => action * omega0 * lambda.sqrt(),
        _ => action,
    };
    let f = |e: f64| action_of_energy(profile, e, lambda).map(|s| s.action).unwrap_or(0.0) - action;
    find_root_above(f, 0.0, 0.5 * guess, 1e-15 * guess)
}

/// Turning-point phase in `I(E) = hbar (n + mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Maslov {
    /// `mu = 1/2`
    Smooth,
    /// `mu = 1`
    HardWall,
}

impl Maslov {
    pub fn index(&self) -> f64 {
        match self {
            Maslov::Smooth => 0.5,
            Maslov::HardWall => 1.0,
        }
    }
}

pub fn wkb_energy(profile: &LocalProfile, n: usize, hbar: f64, lambda: f64, maslov: Maslov) -> Result<f64> {
    energy_at_action(profile, hbar * (n as f64 + maslov.index()), lambda)
}

/// Exact (discretised) and semiclassical level `n` of a well.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WkbGap {
    pub hbar: f64,
    pub n: usize,
    pub exact: f64,
    pub wkb: f64,
    pub gap: f64,
    /// Hard-wall convention, reported when the well has walls.
    pub wkb_hard_wall: Option<f64>,
    pub gap_hard_wall: Option<f64>,
}

/// Level `n` of `-hbar^2/2 d^2 + lambda v` on `n_grid` points, extrapolated in the spacing.
pub fn exact_level(profile: &LocalProfile, n: usize, hbar: f64, lambda: f64, n_grid: usize) -> Result<f64> {
    let grid = match *profile {
        LocalProfile::Hardwall { width } => {
            let half = 0.5 * width / lambda;
            Grid1D::dirichlet(n_grid, -half, half)?
        }
        LocalProfile::Smooth { .. } => {
            let e = wkb_energy(profile, n + 2, hbar, lambda, Maslov::Smooth)?;
            let (lo, hi) = turning_points(profile, e, lambda)?;
            let half = 4.0 * lo.abs().max(hi.abs());
            Grid1D::dirichlet(n_grid, -half, half)?
        }
    };
    let level = |g: &Grid1D| -> Result<f64> {
        let op = build_laplace_beltrami_1d(g, Axis::R { s: 0.0 }, &FlatMetric, hbar)?.with_potential(|_, r| {
            match *profile {
                LocalProfile::Hardwall { .. } => 0.0,
                smooth => smooth.eval(lambda, r),
            }
        })?;
        Ok(lowest_eigenpairs(&op, n + 1, 1e-13, 0)?.eigenvalues[n])
    };
    let coarse = grid.coarsened()?;
    Ok(richardson_h2(level(&grid)?, grid.spacing(), level(&coarse)?, coarse.spacing()))
}

pub fn gap_to_exact(profile: &LocalProfile, n: usize, hbar: f64, lambda: f64, n_grid: usize) -> Result<WkbGap> {
    let exact = exact_level(profile, n, hbar, lambda, n_grid)?;
    let wkb = wkb_energy(profile, n, hbar, lambda, Maslov::Smooth)?;
    let hard = match profile {
        LocalProfile::Hardwall { .. } => Some(wkb_energy(profile, n, hbar, lambda, Maslov::HardWall)?),
        LocalProfile::Smooth { .. } => None,
    };
    Ok(WkbGap {
        hbar,
        n,
        exact,
        wkb,
        gap: (exact - wkb).abs(),
        wkb_hard_wall: hard,
        gap_hard_wall: hard.map(|h| (exact - h).abs()),
    })
}

/// Action change through one ramp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftRow {
    /// Ramp duration.
    pub duration: f64,
    /// Same in fast periods at the initial scale.
    pub periods: f64,
    pub initial_action: f64,
    pub final_action: f64,
    pub drift: f64,
    pub energy_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RampExperiment {
    pub lambda_from: f64,
    pub lambda_to: f64,
    /// Initial action.
    pub action: f64,
    pub steps_per_period: f64,
}

/// Integrates a particle of action `action` in the well through a smooth ramp
/// of each duration (given in fast periods at the initial scale).
pub fn adiabatic_invariance_experiment(
    profile: &LocalProfile,
    experiment: &RampExperiment,
    periods: &[f64],
) -> Result<Vec<DriftRow>> {
    let well = Well1D::new(*profile)?;
    let (l0, l1) = (experiment.lambda_from, experiment.lambda_to);
    let e0 = energy_at_action(profile, experiment.action, l0)?;
    let (_, hi) = turning_points(profile, e0, l0)?;
    let omega0 = (l0 * well.curvature_bound(0.0)).sqrt();
    let period0 = 2.0 * PI / omega0;
    let mut rows = Vec::with_capacity(periods.len());
    for &m in periods {
        let duration = m * period0;
        let schedule = Schedule::Ramp {
            from: l0,
            to: l1,
            duration,
        };
        let fastest = well.max_frequency(&[hi], &[0.0], &schedule);
        let dt = 2.0 * PI / fastest / experiment.steps_per_period;
        let orbit = integrate(
            &well,
            schedule,
            &[hi],
            &[0.0],
            &IntegrateOptions {
                t_final: duration,
                dt,
                record_every: usize::MAX,
            },
        )?;
        let e1 = orbit.final_energy();
        let i1 = action_of_energy(profile, e1, l1)?.action;
        rows.push(DriftRow {
            duration,
            periods: m,
            initial_action: experiment.action,
            final_action: i1,
            drift: (i1 - experiment.action).abs() / experiment.action,
            energy_ratio: e1 / e0,
        });
    }
    Ok(rows)
}

/// Outcome of matching two wells at one action.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionMatch {
    pub adjusted: LocalProfile,
    pub energy: f64,
    /// `(I, E_A(I), E_B(I))` at the matched action and at `2 I0`.
    pub comparison: Vec<(f64, f64, f64)>,
}

fn scaled_profile(profile: &LocalProfile, factor: f64) -> LocalProfile {
    match *profile {
        LocalProfile::Smooth { omega0, cubic, quartic } => LocalProfile::Smooth {
            omega0: omega0 * factor.sqrt(),
            cubic: cubic * factor,
            quartic: quartic * factor,
        },
        LocalProfile::Hardwall { width } => LocalProfile::Hardwall { width: width / factor },
    }
}

/// Rescales the strength of `b` so that both wells have the same energy at
/// action `action` (unit scale).
pub fn match_energy_at_action(a: &LocalProfile, b: &LocalProfile, action: f64) -> Result<ActionMatch> {
    let target = energy_at_action(a, action, 1.0)?;
    let adjusted = if a == b {
        *b
    } else {
        match *b {
            LocalProfile::Hardwall { .. } => LocalProfile::Hardwall {
                width: PI * action / (2.0 * target).sqrt(),
            },
            LocalProfile::Smooth { .. } => {
                let f = |log_mu: f64| {
                    energy_at_action(&scaled_profile(b, log_mu.exp()), action, 1.0)
                        .map(|e| (e / target).ln())
                        .unwrap_or(f64::NAN)
                };
                let (mut lo, mut hi) = (-1.0, 1.0);
                let mut tries = 0;
                while f(lo) > 0.0 || f(hi) < 0.0 {
                    lo *= 2.0;
                    hi *= 2.0;
                    tries += 1;
                    if tries > 10 {
                        return Err(Error::RootFind("could not bracket the strength factor".into()));
                    }
                }
                scaled_profile(b, find_root(f, lo, hi, 1e-15)?.exp())
            }
        }
    };
    let comparison = [action, 2.0 * action]
        .iter()
        .map(|i| Ok((*i, energy_at_action(a, *i, 1.0)?, energy_at_action(&adjusted, *i, 1.0)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ActionMatch {
        adjusted,
        energy: target,
        comparison,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(omega: f64) -> LocalProfile {
        LocalProfile::Smooth {
            omega0: omega,
            cubic: 0.0,
            quartic: 0.0,
        }
    }

    #[test]
    fn harmonic_action_is_e_over_omega() {
        let a = action_of_energy(&harmonic(2.0), 1.0, 1.0).unwrap();
        assert!((a.action - 0.5).abs() < 1e-13, "{}", a.action);
    }

    #[test]
    fn hardwall_action() {
        let a = action_of_energy(&LocalProfile::Hardwall { width: 1.0 }, 2.0, 1.0).unwrap();
        assert!((a.action - 2.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn no_turning_points_below_minimum() {
        assert!(matches!(
            action_of_energy(&harmonic(1.0), -1.0, 1.0),
            Err(Error::NoTurningPoints { .. })
        ));
    }

    #[test]
    fn harmonic_period_returns() {
        let well = Well1D::new(harmonic(1.0)).unwrap();
        let opts = IntegrateOptions {
            t_final: 2.0 * PI,
            dt: 2.0 * PI / 200.0,
            record_every: 1000,
        };
        let orbit = integrate(&well, Schedule::Constant(1.0), &[1.0], &[0.3], &opts).unwrap();
        let q = orbit.positions.last().unwrap();
        let p = orbit.momenta.last().unwrap();
        assert!((q[0] - 1.0).abs() < 1e-8 && (p[0] - 0.3).abs() < 1e-8);
    }

    #[test]
    fn coarse_step_is_rejected() {
        let well = Well1D::new(harmonic(1.0)).unwrap();
        let opts = IntegrateOptions {
            t_final: 1.0,
            dt: 0.5,
            record_every: 1,
        };
        assert!(matches!(
            integrate(&well, Schedule::Constant(1.0), &[1.0], &[0.0], &opts),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn harmonic_wkb_is_exact() {
        let g = gap_to_exact(&harmonic(1.0), 1, 1.0, 1.0, 1200).unwrap();
        assert!((g.wkb - 1.5).abs() < 1e-12);
        assert!(g.gap < 1e-7, "{}", g.gap);
    }

    #[test]
    fn hardwall_conventions() {
        let g = gap_to_exact(&LocalProfile::Hardwall { width: PI }, 0, 1.0, 1.0, 800).unwrap();
        assert!((g.wkb - 0.125).abs() < 1e-12);
        assert!((g.exact - 0.5).abs() < 1e-8);
        assert!(g.gap_hard_wall.unwrap() < 1e-8);
    }

    #[test]
    fn harmonic_matches_wall() {
        let m = match_energy_at_action(&harmonic(1.0), &LocalProfile::Hardwall { width: 1.0 }, 0.5).unwrap();
        match m.adjusted {
            LocalProfile::Hardwall { width } => assert!((width - PI / 2.0).abs() < 1e-12),
            _ => unreachable!(),
        }
        let (_, ea, eb) = m.comparison[1];
        assert!((ea - eb).abs() > 0.1);
    }
}
