//! Planar constraint curves in arc-length parametrization, their signed
//! curvature, and the tubular `(s, r)` coordinates around them.
//!
//! A point near the curve is written `x(s, r) = c(s) + r n(s)` where `n` is the
//! unit normal to the left of the tangent. With that convention a
//! counterclockwise circle has `kappa = 1/a > 0`, the normal points inwards and
//! the flat metric of the plane reads
//!
//! ```text
//! ds^2 (1 - kappa(s) r)^2 + dr^2,     sqrt(g) = 1 - kappa(s) r.
//! ```

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::gauss_legendre;
#[allow(unused_imports)]
use num_traits::Float;

/// A `C^2` map from a periodic parameter interval into the plane.
pub trait PlanarCurve: Send + Sync {
    fn point(&self, t: f64) -> [f64; 2];
    fn velocity(&self, t: f64) -> [f64; 2];
    fn acceleration(&self, t: f64) -> [f64; 2];

    fn param_period(&self) -> f64 {
        2.0 * PI
    }

    /// Whether the image is a closed loop (a straight segment is treated as a
    /// periodic box but is not closed).
    fn closed(&self) -> bool {
        true
    }
}

/// The curve families available from scenario files.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveShape {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    /// Straight segment of the given length, periodic in arc length.
    Line { length: f64 },
    /// `x(t) = sum_k x_cos[k] cos kt + x_sin[k] sin kt`, likewise for `y`.
    Fourier {
        x_cos: Vec<f64>,
        x_sin: Vec<f64>,
        y_cos: Vec<f64>,
        y_sin: Vec<f64>,
    },
}

fn fourier_eval(cos: &[f64], sin: &[f64], t: f64, derivative: u32) -> f64 {
    let mut acc = 0.0;
    for (k, c) in cos.iter().enumerate() {
        let kf = k as f64;
        acc += c * match derivative {
            0 => (kf * t).cos(),
            1 => -kf * (kf * t).sin(),
            _ => -kf * kf * (kf * t).cos(),
        };
    }
    for (k, s) in sin.iter().enumerate() {
        let kf = k as f64;
        acc += s * match derivative {
            0 => (kf * t).sin(),
            1 => kf * (kf * t).cos(),
            _ => -kf * kf * (kf * t).sin(),
        };
    }
    acc
}

impl PlanarCurve for CurveShape {
    fn point(&self, t: f64) -> [f64; 2] {
        match self {
            CurveShape::Circle { radius } => [radius * t.cos(), radius * t.sin()],
            CurveShape::Ellipse { a, b } => [a * t.cos(), b * t.sin()],
            CurveShape::Line { length } => [length * t / (2.0 * PI), 0.0],
            CurveShape::Fourier {
                x_cos,
                x_sin,
                y_cos,
                y_sin,
            } => [fourier_eval(x_cos, x_sin, t, 0), fourier_eval(y_cos, y_sin, t, 0)],
        }
    }

    fn velocity(&self, t: f64) -> [f64; 2] {
        match self {
            CurveShape::Circle { radius } => [-radius * t.sin(), radius * t.cos()],
            CurveShape::Ellipse { a, b } => [-a * t.sin(), b * t.cos()],
            CurveShape::Line { length } => [length / (2.0 * PI), 0.0],
            CurveShape::Fourier {
                x_cos,
                x_sin,
                y_cos,
                y_sin,
            } => [fourier_eval(x_cos, x_sin, t, 1), fourier_eval(y_cos, y_sin, t, 1)],
        }
    }

    fn acceleration(&self, t: f64) -> [f64; 2] {
        match self {
            CurveShape::Circle { radius } => [-radius * t.cos(), -radius * t.sin()],
            CurveShape::Ellipse { a, b } => [-a * t.cos(), -b * t.sin()],
            CurveShape::Line { .. } => [0.0, 0.0],
            CurveShape::Fourier {
                x_cos,
                x_sin,
                y_cos,
                y_sin,
            } => [fourier_eval(x_cos, x_sin, t, 2), fourier_eval(y_cos, y_sin, t, 2)],
        }
    }

    fn closed(&self) -> bool {
        !matches!(self, CurveShape::Line { .. })
    }
}

/// Rigid motion of another curve (rotation about the origin, then translation).
pub struct RigidMotion<C> {
    pub inner: C,
    pub angle: f64,
    pub offset: [f64; 2],
}

impl<C: PlanarCurve> RigidMotion<C> {
    fn rotate(&self, v: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.angle.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }
}

impl<C: PlanarCurve> PlanarCurve for RigidMotion<C> {
    fn point(&self, t: f64) -> [f64; 2] {
        let p = self.rotate(self.inner.point(t));
        [p[0] + self.offset[0], p[1] + self.offset[1]]
    }
    fn velocity(&self, t: f64) -> [f64; 2] {
        self.rotate(self.inner.velocity(t))
    }
    fn acceleration(&self, t: f64) -> [f64; 2] {
        self.rotate(self.inner.acceleration(t))
    }
    fn param_period(&self) -> f64 {
        self.inner.param_period()
    }
    fn closed(&self) -> bool {
        self.inner.closed()
    }
}

/// Metric of the tubular coordinates at one point. `g_sr = 0` always.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubularMetric {
    pub g_ss: f64,
    pub g_rr: f64,
    pub sqrt_g: f64,
}

impl TubularMetric {
    pub const FLAT: TubularMetric = TubularMetric {
        g_ss: 1.0,
        g_rr: 1.0,
        sqrt_g: 1.0,
    };

    pub fn g_ss_inv(&self) -> f64 {
        1.0 / self.g_ss
    }

    pub fn g_rr_inv(&self) -> f64 {
        1.0 / self.g_rr
    }
}

/// Local Frenet data at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub point: [f64; 2],
    pub tangent: [f64; 2],
    pub normal: [f64; 2],
    pub curvature: f64,
}

const PANELS: usize = 512;
const PANEL_ORDER: usize = 16;

/// A regular planar curve resampled by arc length.
pub struct EmbeddingCurve {
    shape: Box<dyn PlanarCurve>,
    param_period: f64,
    closed: bool,
    /// `s(t_k)` at the panel boundaries `t_k = k T / PANELS`, `PANELS + 1` entries.
    arc_table: Vec<f64>,
    gl_nodes: Vec<f64>,
    gl_weights: Vec<f64>,
    max_abs_curvature: f64,
}

impl core::fmt::Debug for EmbeddingCurve {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("EmbeddingCurve")
            .field("length", &self.length())
            .field("closed", &self.closed)
            .finish()
    }
}

fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

impl EmbeddingCurve {
    pub fn new<C: PlanarCurve + 'static>(shape: C) -> Result<Self> {
        let param_period = shape.param_period();
        if !(param_period > 0.0) {
            return Err(Error::InvalidCurve("parameter period must be positive".into()));
        }
        let (gl_nodes, gl_weights) = gauss_legendre(PANEL_ORDER);

        let checks = 4096;
        let mut scale = 0.0f64;
        for i in 0..checks {
            let t = param_period * i as f64 / checks as f64;
            scale = scale.max(norm(shape.velocity(t)));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidCurve("curve has vanishing or non-finite velocity".into()));
        }
        let mut max_abs_curvature = 0.0f64;
        for i in 0..checks {
            let t = param_period * i as f64 / checks as f64;
            let speed = norm(shape.velocity(t));
            if speed <= 1e-10 * scale {
                return Err(Error::IrregularCurve { t, speed });
            }
            max_abs_curvature = max_abs_curvature.max(curvature_of(&shape, t).abs());
        }
        if shape.closed() {
            let p0 = shape.point(0.0);
            let p1 = shape.point(param_period);
            if norm([p1[0] - p0[0], p1[1] - p0[1]]) > 1e-9 * scale * param_period {
                return Err(Error::InvalidCurve("closed curve does not close".into()));
            }
        }

        let mut curve = EmbeddingCurve {
            shape: Box::new(shape),
            param_period,
            closed: false,
            arc_table: Vec::with_capacity(PANELS + 1),
            gl_nodes,
            gl_weights,
            max_abs_curvature,
        };
        curve.closed = curve.shape.closed();
        let dt = param_period / PANELS as f64;
        let mut s = 0.0;
        curve.arc_table.push(0.0);
        for k in 0..PANELS {
            s += curve.panel_integral(k as f64 * dt, (k + 1) as f64 * dt);
            curve.arc_table.push(s);
        }
        Ok(curve)
    }

    fn panel_integral(&self, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.gl_nodes
            .iter()
            .zip(&self.gl_weights)
            .map(|(x, w)| w * norm(self.shape.velocity(mid + half * x)))
            .sum::<f64>()
            * half
    }

    /// Total arc length `L` (the period of `s`).
    pub fn length(&self) -> f64 {
        self.arc_table[PANELS]
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn shape(&self) -> &dyn PlanarCurve {
        self.shape.as_ref()
    }

    /// Arc length from `t = 0` to `t`, for `t` in `[0, T]`.
    pub fn arc_length_at_param(&self, t: f64) -> f64 {
        let dt = self.param_period / PANELS as f64;
        let k = ((t / dt).floor() as isize).clamp(0, PANELS as isize - 1) as usize;
        let t0 = k as f64 * dt;
        self.arc_table[k] + self.panel_integral(t0, t)
    }

    /// Arc-length samples at the panel boundaries (monotone table).
    pub fn arc_length_table(&self) -> &[f64] {
        &self.arc_table
    }

    /// Reduces `s` into `[0, L)`.
    pub fn wrap(&self, s: f64) -> f64 {
        let l = self.length();
        let w = s - l * (s / l).floor();
        if w >= l {
            0.0
        } else {
            w
        }
    }

    /// Parameter value `t` with `s(t) = s` (after periodic reduction).
    pub fn param_at(&self, s: f64) -> f64 {
        let s = self.wrap(s);
        let k = match self
            .arc_table
            .binary_search_by(|v| v.total_cmp(&s))
        {
            Ok(k) => k.min(PANELS - 1),
            Err(k) => k.saturating_sub(1).min(PANELS - 1),
        };
        let dt = self.param_period / PANELS as f64;
        let (s0, s1) = (self.arc_table[k], self.arc_table[k + 1]);
        let mut t = dt * (k as f64 + (s - s0) / (s1 - s0));
        for _ in 0..20 {
            let f = self.arc_length_at_param(t) - s;
            let step = f / norm(self.shape.velocity(t));
            t -= step;
            if step.abs() < 1e-15 * self.param_period {
                break;
            }
        }
        t
    }

    /// Frenet data at parameter `t`.
    pub fn frame_at_param(&self, t: f64) -> Frame {
        let v = self.shape.velocity(t);
        let speed = norm(v);
        let tangent = [v[0] / speed, v[1] / speed];
        Frame {
            t,
            point: self.shape.point(t),
            tangent,
            normal: [-tangent[1], tangent[0]],
            curvature: curvature_of(self.shape.as_ref(), t),
        }
    }

    pub fn frame(&self, s: f64) -> Frame {
        self.frame_at_param(self.param_at(s))
    }

    /// Signed curvature at arc length `s`; positive for counterclockwise convex loops.
    pub fn curvature(&self, s: f64) -> f64 {
        curvature_of(self.shape.as_ref(), self.param_at(s))
    }

    /// Largest `|r|` for which the tubular chart stays non-degenerate at `s`.
    pub fn validity_bound(&self, s: f64) -> f64 {
        let k = self.curvature(s).abs();
        if k == 0.0 {
            f64::INFINITY
        } else {
            1.0 / k
        }
    }

    /// `1 / max |kappa|` over the whole curve.
    pub fn min_validity_bound(&self) -> f64 {
        if self.max_abs_curvature == 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.max_abs_curvature
        }
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.max_abs_curvature
    }

    /// Tubular metric at `(s, r)`.
    pub fn metric_at(&self, s: f64, r: f64) -> Result<TubularMetric> {
        let kappa = self.curvature(s);
        tubular_metric(kappa, s, r)
    }

    /// Embedding map `x(s, r) = c(s) + r n(s)`.
    pub fn embed(&self, s: f64, r: f64) -> [f64; 2] {
        let f = self.frame(s);
        [f.point[0] + r * f.normal[0], f.point[1] + r * f.normal[1]]
    }

    /// Closest-point projection of `x`, starting Newton from parameter `t_guess`.
    /// Returns `(t, s, r)`.
    pub fn project(&self, x: [f64; 2], t_guess: f64) -> (f64, f64, f64) {
        let mut t = t_guess;
        for _ in 0..50 {
            let c = self.shape.point(t);
            let v = self.shape.velocity(t);
            let a = self.shape.acceleration(t);
            let d = [x[0] - c[0], x[1] - c[1]];
            let g = d[0] * v[0] + d[1] * v[1];
            let dg = -(v[0] * v[0] + v[1] * v[1]) + d[0] * a[0] + d[1] * a[1];
            let step = g / dg;
            t -= step;
            if step.abs() < 1e-15 * self.param_period {
                break;
            }
        }
        let t = t - self.param_period * (t / self.param_period).floor();
        let frame = self.frame_at_param(t);
        let d = [x[0] - frame.point[0], x[1] - frame.point[1]];
        let r = d[0] * frame.normal[0] + d[1] * frame.normal[1];
        (t, self.arc_length_at_param(t), r)
    }

    /// `oint kappa ds` by the periodic trapezoid rule on `n` arc-length nodes.
    pub fn total_curvature(&self, n: usize) -> f64 {
        let h = self.length() / n as f64;
        (0..n).map(|i| self.curvature(i as f64 * h)).sum::<f64>() * h
    }
}

fn curvature_of(shape: &dyn PlanarCurve, t: f64) -> f64 {
    let v = shape.velocity(t);
    let a = shape.acceleration(t);
    let speed = norm(v);
    (v[0] * a[1] - v[1] * a[0]) / (speed * speed * speed)
}

/// Tubular metric for a given local curvature.
pub fn tubular_metric(kappa: f64, s: f64, r: f64) -> Result<TubularMetric> {
    let bound = if kappa == 0.0 { f64::INFINITY } else { 1.0 / kappa.abs() };
    if r.abs() >= bound {
        return Err(Error::OutOfTube { s, r, bound });
    }
    let j = 1.0 - kappa * r;
    Ok(TubularMetric {
        g_ss: j * j,
        g_rr: 1.0,
        sqrt_g: j,
    })
}

/// Scalar curvature of a round 2-sphere, `R = 2 / a^2`.
pub fn sphere_scalar_curvature(radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("sphere radius must be positive, got {radius}")));
    }
    Ok(2.0 / (radius * radius))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_circle_metric() {
        let c = EmbeddingCurve::new(CurveShape::Circle { radius: 1.0 }).unwrap();
        let m = c.metric_at(0.3, 0.1).unwrap();
        assert!((m.g_ss - 0.81).abs() < 1e-12);
        assert_eq!(m.g_rr, 1.0);
        assert!((c.length() - 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn on_curve_identity() {
        let c = EmbeddingCurve::new(CurveShape::Ellipse { a: 1.3, b: 0.6 }).unwrap();
        for s in [0.0, 0.7, 2.2] {
            let m = c.metric_at(s, 0.0).unwrap();
            assert_eq!(m.g_ss, 1.0);
            assert_eq!(m.sqrt_g, 1.0);
        }
    }

    #[test]
    fn out_of_tube() {
        let c = EmbeddingCurve::new(CurveShape::Circle { radius: 1.0 }).unwrap();
        assert!(matches!(c.metric_at(0.0, 1.0), Err(Error::OutOfTube { .. })));
        assert!(matches!(c.metric_at(0.0, -1.5), Err(Error::OutOfTube { .. })));
        let line = EmbeddingCurve::new(CurveShape::Line { length: 5.0 }).unwrap();
        assert!(line.metric_at(1.0, 100.0).is_ok());
    }

    #[test]
    fn circle_and_line_curvature() {
        let c = EmbeddingCurve::new(CurveShape::Circle { radius: 2.0 }).unwrap();
        for s in [0.0, 1.0, 5.0, 11.0] {
            assert!((c.curvature(s) - 0.5).abs() < 1e-14);
        }
        let line = EmbeddingCurve::new(CurveShape::Line { length: 3.0 }).unwrap();
        assert_eq!(line.curvature(1.2), 0.0);
        assert!(!line.closed());
        assert!((line.length() - 3.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_curvature_convention() {
        assert_eq!(sphere_scalar_curvature(1.0).unwrap(), 2.0);
        assert_eq!(sphere_scalar_curvature(2.0).unwrap(), 0.5);
        assert!(sphere_scalar_curvature(1e9).unwrap() < 1e-17);
        assert!(sphere_scalar_curvature(0.0).is_err());
    }

    #[test]
    fn degenerate_curve_rejected() {
        let bad = CurveShape::Fourier {
            x_cos: alloc::vec![0.0],
            x_sin: alloc::vec![],
            y_cos: alloc::vec![0.0],
            y_sin: alloc::vec![],
        };
        assert!(EmbeddingCurve::new(bad).is_err());
    }

    #[test]
    fn projection_inverts_embedding() {
        let c = EmbeddingCurve::new(CurveShape::Ellipse { a: 1.2, b: 0.8 }).unwrap();
        let s = 1.7;
        let x = c.embed(s, 0.05);
        let (_, s2, r2) = c.project(x, c.param_at(s) + 0.05);
        assert!((s2 - s).abs() < 1e-12);
        assert!((r2 - 0.05).abs() < 1e-12);
    }
}
