//! Reduced mean curvature flow on the orbit space.
//!
//! In chamber coordinates the flow is the ODE `dθ/dt = h(θ)` with
//! `h = −∂ log V`. Forward it runs into a wall in finite time; backward it is
//! attracted to the unique minimal leaf.

use std::fmt;

use thiserror::Error;

use crate::catalog::{factor_volume, CatalogError, FoliationModel, ModelKind, Side};
use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McfError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error("integration step underflowed at t = {time}")]
    StepUnderflow { time: f64 },
    #[error("mean curvature has no root inside the chamber of {model}")]
    NoInteriorRoot { model: String },
    #[error("trajectory does not reach a wall")]
    NoSingularity,
    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("{0}")]
    NotSphereModel(String),
}

impl McfError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Catalog(e) => e.code(),
            Self::StepUnderflow { .. } => "StepUnderflow",
            Self::NoInteriorRoot { .. } => "NoInteriorRoot",
            Self::NoSingularity => "NoSingularity",
            Self::InvalidHorizon(_) => "InvalidHorizon",
            Self::NotSphereModel(_) => "NotSphereModel",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Forward => "forward",
            Self::Backward => "backward",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" => Ok(Self::Forward),
            "backward" => Ok(Self::Backward),
            other => Err(format!("unknown direction `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WallId {
    pub coordinate: usize,
    pub side: Side,
    pub multiplicity: usize,
}

impl fmt::Display for WallId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:m{}", self.coordinate, self.side, self.multiplicity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState<T> {
    /// Flow time; backward runs record `t = −s`.
    pub time: T,
    pub point: Vec<T>,
    pub volume: T,
    pub h: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination<T> {
    ReachedEnd,
    Blowup { time: T, wall: WallId },
    Converged { point: Vec<T> },
}

impl<T> Termination<T> {
    pub fn label(&self) -> &'static str {
        match self {
            Self::ReachedEnd => "reached_t_end",
            Self::Blowup { .. } => "blowup",
            Self::Converged { .. } => "converged",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrajectory<T> {
    pub model_id: String,
    pub direction: Direction,
    pub samples: Vec<FlowState<T>>,
    pub termination: Termination<T>,
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions<T> {
    pub step: T,
    /// Forward runs stop once this close to a wall.
    pub wall_distance: T,
    /// Backward runs stop once `|h|` drops below this.
    pub convergence: T,
    /// Starts with `|h|` below this are stationary.
    pub stationary: T,
    /// Keep every `record_every`-th step (the first and last are always kept).
    pub record_every: usize,
    pub max_steps: usize,
}

impl<T: Scalar> Default for FlowOptions<T> {
    fn default() -> Self {
        Self {
            step: T::lit(1e-4),
            wall_distance: T::tol(1e-10),
            convergence: T::tol(1e-12),
            stationary: T::tol(1e-14),
            record_every: 1,
            max_steps: 50_000_000,
        }
    }
}

/// `h = −(log V)'` for a single factor.
fn factor_h<T: Scalar>(factor: &FoliationModel, x: T) -> T {
    match *factor.kind() {
        ModelKind::Sphere { g, m1, m2 } => -sphere_terms(g, m1, m2, x, |phi| phi.cos() / phi.sin()),
        ModelKind::EuclideanSpheres { n } => -T::from_usize_lossy(n) / x,
        _ => T::zero(),
    }
}

/// `h'` for a single factor.
fn factor_dh<T: Scalar>(factor: &FoliationModel, x: T) -> T {
    match *factor.kind() {
        ModelKind::Sphere { g, m1, m2 } => sphere_terms(g, m1, m2, x, |phi| {
            let s = phi.sin();
            T::one() / (s * s)
        }),
        ModelKind::EuclideanSpheres { n } => T::from_usize_lossy(n) / (x * x),
        _ => T::zero(),
    }
}

fn sphere_terms<T: Scalar>(g: usize, m1: usize, m2: usize, x: T, f: impl Fn(T) -> T) -> T {
    let step = T::pi() / T::from_usize_lossy(g);
    (0..g).fold(T::zero(), |acc, k| {
        let m = if k % 2 == 0 { m1 } else { m2 };
        acc + T::from_usize_lossy(m) * f(x + step * T::from_usize_lossy(k))
    })
}

/// Chamber components of the mean curvature vector, `h = −∂ log V`.
pub fn mean_curvature_component<T: Scalar>(model: &FoliationModel, point: &[T]) -> Result<Vec<T>, McfError> {
    model.check_point(point)?;
    Ok(model.factors().iter().zip(point).map(|(f, &x)| factor_h(f, x)).collect())
}

/// `∂h_i/∂θ_i`; the Hessian of `−log V` is diagonal in chamber coordinates.
pub fn mean_curvature_derivative<T: Scalar>(model: &FoliationModel, point: &[T]) -> Result<Vec<T>, McfError> {
    model.check_point(point)?;
    Ok(model.factors().iter().zip(point).map(|(f, &x)| factor_dh(f, x)).collect())
}

fn sup_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// Compensated running time, so steps far below `eps·t` still accumulate.
#[derive(Debug, Clone, Copy)]
struct Clock<T> {
    hi: T,
    lo: T,
}

impl<T: Scalar> Clock<T> {
    fn add(&mut self, dt: T) {
        let y = dt + self.lo;
        let s = self.hi + y;
        self.lo = y - (s - self.hi);
        self.hi = s;
    }

    fn value(&self) -> T {
        self.hi + self.lo
    }
}

struct Integrator<'a, T: Scalar> {
    factors: Vec<&'a FoliationModel>,
    chamber: Vec<(T, T)>,
    sign: T,
}

impl<T: Scalar> Integrator<'_, T> {
    fn h(&self, x: &[T]) -> Vec<T> {
        self.factors.iter().zip(x).map(|(f, &xi)| factor_h(f, xi)).collect()
    }

    fn rhs(&self, x: &[T]) -> Vec<T> {
        self.h(x).into_iter().map(|v| self.sign * v).collect()
    }

    fn inside(&self, x: &[T]) -> bool {
        x.iter().zip(&self.chamber).all(|(&xi, &(lo, hi))| xi > lo && xi < hi && xi.is_finite())
    }

    fn rk4(&self, x: &[T], dt: T) -> Vec<T> {
        let half = T::lit(0.5) * dt;
        let shift = |a: &[T], k: &[T], s: T| -> Vec<T> { a.iter().zip(k).map(|(&a, &k)| a + s * k).collect() };
        let k1 = self.rhs(x);
        let k2 = self.rhs(&shift(x, &k1, half));
        let k3 = self.rhs(&shift(x, &k2, half));
        let k4 = self.rhs(&shift(x, &k3, dt));
        let sixth = dt / T::lit(6.0);
        (0..x.len())
            .map(|i| x[i] + sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]))
            .collect()
    }

    /// Nearest wall and its distance.
    fn nearest_wall(&self, x: &[T]) -> Option<(T, usize, Side)> {
        let mut best: Option<(T, usize, Side)> = None;
        for (i, (&xi, &(lo, hi))) in x.iter().zip(&self.chamber).enumerate() {
            for (d, side) in [(xi - lo, Side::Lower), (hi - xi, Side::Upper)] {
                if d.is_finite() && best.is_none_or(|(b, _, _)| d < b) {
                    best = Some((d, i, side));
                }
            }
        }
        best
    }

    /// Base step halved per doubling of `|h|`, further capped so no
    /// coordinate moves more than a sixteenth of its distance to the wall.
    fn step_size(&self, x: &[T], v: &[T], base: T, h_ref: T) -> T {
        let mut dt = base;
        let speed = sup_norm(v);
        let mut scale = h_ref;
        while speed > T::lit(2.0) * scale {
            dt *= T::lit(0.5);
            scale *= T::lit(2.0);
        }
        for ((&xi, &vi), &(lo, hi)) in x.iter().zip(v).zip(&self.chamber) {
            let d = if vi < T::zero() { xi - lo } else { hi - xi };
            if d.is_finite() && vi != T::zero() {
                dt = dt.min(d / (T::lit(16.0) * vi.abs()));
            }
        }
        dt
    }
}

fn state<T: Scalar>(integ: &Integrator<'_, T>, time: T, point: Vec<T>) -> FlowState<T> {
    let volume = integ.factors.iter().zip(&point).fold(T::one(), |acc, (f, &x)| acc * factor_volume(f, x));
    let h = integ.h(&point);
    FlowState { time, point, volume, h }
}

/// Integrates the reduced flow from `start` for flow time `t_end`.
pub fn flow<T: Scalar>(
    model: &FoliationModel,
    start: &[T],
    direction: Direction,
    t_end: T,
    options: FlowOptions<T>,
) -> Result<FlowTrajectory<T>, McfError> {
    if !(t_end > T::zero()) || !t_end.is_finite() {
        return Err(McfError::InvalidHorizon(t_end.to_f64_lossy()));
    }
    model.check_point(start)?;
    let sign = match direction {
        Direction::Forward => T::one(),
        Direction::Backward => -T::one(),
    };
    let integ = Integrator { factors: model.factors(), chamber: model.chamber(), sign };
    let time_of = |s: T| sign * s;
    let mut x = start.to_vec();
    let first = state(&integ, T::zero(), x.clone());
    let h_ref = sup_norm(&first.h).max(T::one());

    let mut trajectory = FlowTrajectory {
        model_id: model.id(),
        direction,
        samples: vec![first.clone()],
        termination: Termination::ReachedEnd,
    };
    if sup_norm(&first.h) < options.stationary {
        let mut last = first;
        last.time = time_of(t_end);
        trajectory.samples.push(last);
        trajectory.termination = Termination::Converged { point: x };
        return Ok(trajectory);
    }

    let converged = |x: &[T], h: &[T]| {
        sup_norm(h) < options.convergence
            && integ
                .factors
                .iter()
                .zip(x)
                .all(|(f, &xi)| matches!(f.kind(), ModelKind::EuclideanHyperplanes) || factor_dh(f, xi) > T::zero())
    };

    let mut clock = Clock { hi: T::zero(), lo: T::zero() };
    let mut steps = 0usize;
    loop {
        let s = clock.value();
        if s >= t_end {
            break;
        }
        if steps >= options.max_steps {
            return Err(McfError::StepUnderflow { time: time_of(s).to_f64_lossy() });
        }
        let v = integ.rhs(&x);
        let mut dt = integ.step_size(&x, &v, options.step, h_ref).min(t_end - s);
        let next = loop {
            let candidate = integ.rk4(&x, dt);
            if integ.inside(&candidate) {
                break candidate;
            }
            dt *= T::lit(0.5);
            if !(dt > T::zero()) {
                return Err(McfError::StepUnderflow { time: time_of(s).to_f64_lossy() });
            }
        };
        clock.add(dt);
        x = next;
        steps += 1;
        let now = clock.value();
        let sample = state(&integ, time_of(now), x.clone());

        if direction == Direction::Forward {
            if let Some((d, coordinate, side)) = integ.nearest_wall(&x) {
                if d < options.wall_distance {
                    let multiplicity = model.wall_multiplicity(coordinate, side).unwrap_or(1);
                    let extra = d * d / (T::lit(2.0) * T::from_usize_lossy(multiplicity));
                    let blowup = clock.hi + (clock.lo + extra);
                    trajectory.samples.push(sample);
                    trajectory.termination = Termination::Blowup {
                        time: blowup,
                        wall: WallId { coordinate, side, multiplicity },
                    };
                    return Ok(trajectory);
                }
            }
        } else if converged(&x, &sample.h) {
            trajectory.samples.push(sample);
            trajectory.termination = Termination::Converged { point: x };
            return Ok(trajectory);
        }
        if steps % options.record_every.max(1) == 0 || now >= t_end {
            trajectory.samples.push(sample);
        }
    }
    Ok(trajectory)
}

/// The unique interior zero of `h`, coordinate by coordinate, by bisection.
pub fn minimal_leaf<T: Scalar>(model: &FoliationModel) -> Result<Vec<T>, McfError> {
    let tol = T::tol(1e-12);
    model
        .factors()
        .into_iter()
        .map(|f| {
            let ModelKind::Sphere { g, .. } = *f.kind() else {
                return Err(McfError::NoInteriorRoot { model: model.id() });
            };
            let (mut lo, mut hi) = (T::zero(), T::pi() / T::from_usize_lossy(g));
            while hi - lo > tol {
                let mid = T::lit(0.5) * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if factor_h(f, mid) < T::zero() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(T::lit(0.5) * (lo + hi))
        })
        .collect()
}

/// `max (W'' + W)` over a uniform interior grid, where `W = V^{1/n}`.
///
/// Uses `W''/W = 1 − h'/n + h²/n²`, exact in terms of the analytic `h`, `h'`.
pub fn concavity_check<T: Scalar>(model: &FoliationModel, grid: usize) -> Result<T, McfError> {
    let ModelKind::Sphere { g, .. } = *model.kind() else {
        return Err(McfError::NotSphereModel(format!("{model} is not a sphere model")));
    };
    let n = T::from_usize_lossy(model.leaf_dimension());
    let width = T::pi() / T::from_usize_lossy(g);
    let cells = T::from_usize_lossy(grid + 1);
    let mut worst = -T::max_value().unwrap_or(T::one());
    for i in 1..=grid {
        let x = width * T::from_usize_lossy(i) / cells;
        let w = factor_volume(model, x).powf(T::one() / n);
        let (h, dh) = (factor_h(model, x), factor_dh(model, x));
        let value = w * (T::one() - dh / n + h * h / (n * n));
        worst = worst.max(value);
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct Type1Report<T> {
    pub blowup_time: T,
    pub wall: WallId,
    /// `(T − t, (T − t)·|h|²)` at each probe.
    pub probes: Vec<(T, T)>,
    pub expected: T,
    pub passed: bool,
}

pub const TYPE1_PROBES: [f64; 3] = [1e-3, 1e-4, 1e-5];
pub const TYPE1_TOLERANCE: f64 = 1e-2;

/// Runs the forward flow into its singularity and evaluates `(T − t)·|h|²`
/// at the probe times, which should approach `m_w/2`.
pub fn type1_check<T: Scalar>(model: &FoliationModel, start: &[T]) -> Result<Type1Report<T>, McfError> {
    let horizon = T::lit(1e6);
    let traj = flow(model, start, Direction::Forward, horizon, FlowOptions::default())?;
    let Termination::Blowup { time: blowup, wall } = traj.termination else {
        return Err(McfError::NoSingularity);
    };
    let integ = Integrator { factors: model.factors(), chamber: model.chamber(), sign: T::one() };
    let mut probes = Vec::new();
    for tau in TYPE1_PROBES.map(T::lit) {
        let target = blowup - tau;
        let Some(base) = traj.samples.iter().rev().find(|s| s.time <= target) else {
            continue;
        };
        let span = target - base.time;
        let substeps = 256;
        let dt = span / T::from_usize_lossy(substeps);
        let mut x = base.point.clone();
        for _ in 0..substeps {
            x = integ.rk4(&x, dt);
        }
        let h = integ.h(&x);
        let h2 = h.iter().fold(T::zero(), |acc, &v| acc + v * v);
        probes.push((tau, tau * h2));
    }
    let expected = T::from_usize_lossy(wall.multiplicity) * T::lit(0.5);
    let passed = probes
        .last()
        .is_some_and(|&(tau, value)| tau == T::lit(1e-5) && (value - expected).abs() <= T::lit(TYPE1_TOLERANCE));
    Ok(Type1Report { blowup_time: blowup, wall, probes, expected, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, LN_2};

    fn model(id: &str) -> FoliationModel {
        id.parse().unwrap()
    }

    #[test]
    fn mean_curvature_examples() {
        assert!(mean_curvature_component(&model("clifford:1,1"), &[FRAC_PI_4]).unwrap()[0].abs() < 1e-15);
        assert!((mean_curvature_component(&model("spheres:2"), &[FRAC_PI_4]).unwrap()[0] + 2.0).abs() < 1e-14);
        assert!((mean_curvature_component(&model("clifford:1,2"), &[FRAC_PI_4]).unwrap()[0] - 1.0).abs() < 1e-14);
        let p = mean_curvature_component(&model("product(spheres:1,euclid-spheres:3,hyperplanes)"), &[1.0, 2.0, 5.0])
            .unwrap();
        assert!((p[0] + 1.0f64.cos() / 1.0f64.sin()).abs() < 1e-15);
        assert_eq!(p[1], -1.5);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn h_is_gradient_of_minus_log_volume() {
        for m in crate::catalog::sphere_catalog() {
            let hi = m.chamber::<f64>()[0].1;
            for i in 1..20 {
                let x = hi * i as f64 / 20.0;
                let e = 1e-6;
                let fd = -(factor_volume(&m, x + e).ln() - factor_volume(&m, x - e).ln()) / (2.0 * e);
                assert!((factor_h(&m, x) - fd).abs() < 1e-6 * (1.0 + fd.abs()), "{m} {x}");
                let fd2 = (factor_h(&m, x + e) - factor_h(&m, x - e)) / (2.0 * e);
                assert!((factor_dh(&m, x) - fd2).abs() < 1e-5 * (1.0 + fd2.abs()), "{m} {x}");
            }
        }
    }

    #[test]
    fn stationary_start() {
        for dir in [Direction::Forward, Direction::Backward] {
            let t = flow(&model("clifford:1,1"), &[FRAC_PI_4], dir, 1.0, FlowOptions::default()).unwrap();
            assert!(matches!(t.termination, Termination::Converged { .. }));
            assert!(t.samples.iter().all(|s| s.point[0] == FRAC_PI_4));
        }
    }

    #[test]
    fn distance_sphere_blowup() {
        let t = flow(&model("spheres:2"), &[FRAC_PI_3], Direction::Forward, 10.0, FlowOptions::default()).unwrap();
        let Termination::Blowup { time, wall } = t.termination else { panic!("{:?}", t.termination) };
        assert!((time - 0.5 * LN_2).abs() < 1e-8, "{time}");
        assert_eq!(wall, WallId { coordinate: 0, side: Side::Lower, multiplicity: 2 });
        // closed form cos θ(t) = cos θ0 · e^{2t}
        for s in &t.samples {
            let exact = 0.5 * (2.0 * s.time).exp();
            assert!((s.point[0].cos() - exact).abs() < 1e-10, "{} {}", s.time, s.point[0]);
        }
    }

    #[test]
    fn euclid_spheres_blowup() {
        // r² = r0² − 2nt
        let t = flow(&model("euclid-spheres:3"), &[2.0], Direction::Forward, 10.0, FlowOptions::default()).unwrap();
        let Termination::Blowup { time, .. } = t.termination else { panic!() };
        assert!((time - 4.0f64 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn backward_convergence() {
        let t = flow(&model("clifford:1,1"), &[FRAC_PI_3], Direction::Backward, 20.0, FlowOptions::default())
            .unwrap();
        let last = t.samples.last().unwrap();
        assert!((last.point[0] - FRAC_PI_4).abs() < 1e-6);
        assert!(t.samples.windows(2).all(|w| w[1].time < w[0].time));
        for w in t.samples.windows(2) {
            // log V changes by h²·dt, below one ulp once h ≲ 1e-6
            assert!(w[1].volume >= w[0].volume * (1.0 - 4.0 * f64::EPSILON), "{:?} {:?}", w[0], w[1]);
            if w[0].h[0].abs() > 1e-5 {
                assert!(w[1].volume > w[0].volume);
            }
        }
    }

    #[test]
    fn backward_euclid_never_converges() {
        let t = flow(&model("euclid-spheres:2"), &[1.0], Direction::Backward, 2.0, FlowOptions::default()).unwrap();
        assert_eq!(t.termination, Termination::ReachedEnd);
        assert!((t.samples.last().unwrap().time + 2.0f64).abs() < 1e-12);
        // r² = r0² + 2n s
        assert!((t.samples.last().unwrap().point[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn minimal_leaf_examples() {
        assert!((minimal_leaf::<f64>(&model("clifford:2,2")).unwrap()[0] - FRAC_PI_4).abs() < 1e-12);
        let x = minimal_leaf::<f64>(&model("clifford:1,2")).unwrap()[0];
        assert!((x - (1.0 / 2f64.sqrt()).atan()).abs() < 1e-12);
        assert!((minimal_leaf::<f64>(&model("spheres:2")).unwrap()[0] - FRAC_PI_2).abs() < 1e-12);
        assert!(matches!(
            minimal_leaf::<f64>(&model("euclid-spheres:2")),
            Err(McfError::NoInteriorRoot { .. })
        ));
    }

    #[test]
    fn minimal_leaf_maximizes_volume() {
        for m in crate::catalog::sphere_catalog() {
            let x = minimal_leaf::<f64>(&m).unwrap()[0];
            let v = factor_volume(&m, x);
            let hi = m.chamber::<f64>()[0].1;
            for i in 1..200 {
                assert!(factor_volume(&m, hi * i as f64 / 200.0) <= v + 1e-15, "{m}");
            }
        }
    }

    #[test]
    fn concavity_examples() {
        for n in 1..5 {
            let v = concavity_check::<f64>(&model(&format!("spheres:{n}")), 10_000).unwrap();
            assert!(v.abs() < 1e-9, "{n}: {v}");
        }
        for id in ["clifford:1,1", "cartan:3,1,1"] {
            assert!(concavity_check::<f64>(&model(id), 10_000).unwrap() < 0.0);
        }
        assert!(concavity_check::<f64>(&model("euclid-spheres:2"), 10).is_err());
    }

    #[test]
    fn concavity_matches_finite_differences() {
        // independent oracle: central second difference of W = V^{1/n}
        for id in ["clifford:1,1", "cartan:3,1,1", "clifford:1,2"] {
            let m = model(id);
            let n = m.leaf_dimension() as f64;
            let w = |x: f64| factor_volume(&m, x).powf(1.0 / n);
            let hi = m.chamber::<f64>()[0].1;
            for i in 1..50 {
                let x = hi * i as f64 / 50.0;
                let e = 1e-4;
                let fd = (w(x + e) - 2.0 * w(x) + w(x - e)) / (e * e) + w(x);
                let analytic = w(x) * (1.0 - factor_dh(&m, x) / n + factor_h(&m, x).powi(2) / (n * n));
                assert!((fd - analytic).abs() < 1e-5 * (1.0 + analytic.abs()), "{id} {x}: {fd} {analytic}");
            }
        }
    }

    #[test]
    fn type1_examples() {
        let r = type1_check(&model("spheres:2"), &[FRAC_PI_3]).unwrap();
        assert!(r.passed, "{:?}", r.probes);
        assert_eq!(r.expected, 1.0);
        let r = type1_check(&model("clifford:1,1"), &[FRAC_PI_3]).unwrap();
        assert!(r.passed, "{:?}", r.probes);
        assert_eq!(r.expected, 0.5);
        assert_eq!(r.wall.side, Side::Upper);
        assert_eq!(type1_check(&model("clifford:1,1"), &[FRAC_PI_4]).unwrap_err(), McfError::NoSingularity);
    }

    #[test]
    fn single_precision_flow() {
        let t = flow(&model("spheres:2"), &[FRAC_PI_3 as f32], Direction::Forward, 1.0, FlowOptions::default())
            .unwrap();
        let Termination::Blowup { time, .. } = t.termination else { panic!() };
        assert!((time - 0.5 * LN_2 as f32).abs() < 1e-4, "{time}");
    }
}
