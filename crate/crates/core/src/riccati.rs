//! Matrix Riccati equation `S' + S² + R = 0` with constant diagonal `R`, and
//! the scalar comparison model `a' + a² + δ = 0`.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::geodesic_jacobi::{
    holonomy_basis, CurvatureSpectrum, FocalOptions, Interval, JacobiError, RiccatiOperator,
    SpectrumEntry,
};
use crate::num::Scalar;

/// `‖S‖` above which the trajectory is declared to blow up.
pub const BLOWUP_THRESHOLD: f64 = 1e8;
/// Width to which the threshold-crossing time is bisected.
pub const BLOWUP_RESOLUTION: f64 = 1e-6;
pub const DEFAULT_STEP: f64 = 1e-3;
pub const MAX_STEP: f64 = 1e-2;
/// Allowed excess of `a(t)` over `ā(t)`, measured in phase units
/// `arctan(a/√δ)/√δ` (see [`ComparisonModel::phase`]).
pub const COMPARISON_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiccatiError {
    #[error("dimension mismatch: curvature has {expected} entries, operator is {found}x{found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("curvature entries must be finite and non-negative")]
    NegativeCurvature,
    #[error("step {0} outside (0, 1e-2]")]
    InvalidStep(f64),
    #[error("integration horizon must be positive, got {0}")]
    InvalidHorizon(f64),
    #[error("symmetry drift {drift:.3e} at t = {time}: step too large")]
    StepTooLarge { drift: f64, time: f64 },
    #[error("precondition violated: tr R = {trace} < n·δ = {required}")]
    PreconditionViolated { trace: f64, required: f64 },
    #[error(transparent)]
    Jacobi(#[from] JacobiError),
}

impl RiccatiError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::DimensionMismatch { .. } => "DimensionMismatch",
            Self::NegativeCurvature => "NegativeCurvature",
            Self::InvalidStep(_) => "InvalidStep",
            Self::InvalidHorizon(_) => "InvalidHorizon",
            Self::StepTooLarge { .. } => "StepTooLarge",
            Self::PreconditionViolated { .. } => "PreconditionViolated",
            Self::Jacobi(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RiccatiProblem<T: Scalar> {
    r_diag: Vec<T>,
    s0: RiccatiOperator<T>,
    step: T,
}

impl<T: Scalar> RiccatiProblem<T> {
    pub fn new(r_diag: Vec<T>, s0: RiccatiOperator<T>, step: T) -> Result<Self, RiccatiError> {
        if r_diag.len() != s0.dim() {
            return Err(RiccatiError::DimensionMismatch {
                expected: r_diag.len(),
                found: s0.dim(),
            });
        }
        if r_diag.iter().any(|r| !r.is_finite() || *r < T::zero()) {
            return Err(RiccatiError::NegativeCurvature);
        }
        if !(step > T::zero() && step <= T::lit(MAX_STEP)) {
            return Err(RiccatiError::InvalidStep(step.to_f64_lossy()));
        }
        Ok(Self { r_diag, s0, step })
    }

    pub fn with_default_step(r_diag: Vec<T>, s0: RiccatiOperator<T>) -> Result<Self, RiccatiError> {
        Self::new(r_diag, s0, T::lit(DEFAULT_STEP))
    }

    pub fn r_diag(&self) -> &[T] {
        &self.r_diag
    }

    pub fn s0(&self) -> &RiccatiOperator<T> {
        &self.s0
    }

    pub fn step(&self) -> T {
        self.step
    }

    pub fn dim(&self) -> usize {
        self.r_diag.len()
    }

    pub fn curvature_trace(&self) -> T {
        self.r_diag.iter().fold(T::zero(), |a, &r| a + r)
    }

    /// The same problem along the reversed geodesic: `S_0 → −S_0`.
    pub fn reversed(&self) -> Self {
        let s0 = RiccatiOperator::new(-self.s0.matrix().clone()).expect("negation keeps symmetry");
        Self { r_diag: self.r_diag.clone(), s0, step: self.step }
    }

    fn rhs(&self, s: &DMatrix<T>) -> DMatrix<T> {
        let mut out = -(s * s);
        for (j, &r) in self.r_diag.iter().enumerate() {
            out[(j, j)] -= r;
        }
        out
    }

    fn rk4_step(&self, s: &DMatrix<T>, h: T) -> DMatrix<T> {
        let half = h * T::lit(0.5);
        let k1 = self.rhs(s);
        let k2 = self.rhs(&(s + &k1 * half));
        let k3 = self.rhs(&(s + &k2 * half));
        let k4 = self.rhs(&(s + &k3 * h));
        s + (k1 + (k2 + k3) * T::lit(2.0) + k4) * (h / T::lit(6.0))
    }
}

/// Spectral norm of a symmetric matrix.
fn sym_norm<T: Scalar>(s: &DMatrix<T>) -> T {
    SymmetricEigen::new(s.clone()).eigenvalues.amax()
}

#[derive(Debug, Clone)]
pub struct RiccatiSample<T: Scalar> {
    pub t: T,
    pub s: DMatrix<T>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blowup<T> {
    /// Estimated pole of `S`.
    pub time: T,
    /// Last time at which `‖S‖ ≤ 1e8`.
    pub last_safe_time: T,
}

#[derive(Debug, Clone)]
pub struct RiccatiTrajectory<T: Scalar> {
    pub samples: Vec<RiccatiSample<T>>,
    pub blowup: Option<Blowup<T>>,
}

impl<T: Scalar> RiccatiTrajectory<T> {
    /// `(t, tr S(t) / n)` for every sample.
    pub fn average_trace(&self) -> Vec<(T, T)> {
        self.samples
            .iter()
            .map(|smp| (smp.t, smp.s.trace() / T::from_usize_lossy(smp.s.nrows())))
            .collect()
    }
}

/// Fixed-step RK4 for `S' = −S² − R`, halving the step whenever `‖S‖` doubles.
///
/// Stops at `t_end` or at the first crossing of `‖S‖ = 1e8`. The crossing is
/// bracketed to `1e-6` by bisection on the last step, and the pole is placed
/// at `t_c + 1/‖S(t_c)‖` from the local behaviour `S ≈ −1/(T − t)`.
pub fn integrate_riccati<T: Scalar>(
    problem: &RiccatiProblem<T>,
    t_end: T,
) -> Result<RiccatiTrajectory<T>, RiccatiError> {
    if !(t_end > T::zero() && t_end.is_finite()) {
        return Err(RiccatiError::InvalidHorizon(t_end.to_f64_lossy()));
    }
    let threshold = T::lit(BLOWUP_THRESHOLD);
    let mut t = T::zero();
    let mut s = problem.s0.matrix().clone();
    let mut h = problem.step;
    let mut reference = sym_norm(&s).max(T::one());
    let mut samples = vec![RiccatiSample { t, s: s.clone() }];
    let min_step = T::default_epsilon() * T::lit(16.0);

    while t < t_end {
        let step = h.min(t_end - t);
        let next = problem.rk4_step(&s, step);
        let norm = sym_norm(&next);
        let drift = (&next - next.transpose()).amax();
        if !drift.is_finite() || drift > T::tol(1e-6) * norm.max(T::one()) {
            return Err(RiccatiError::StepTooLarge {
                drift: drift.to_f64_lossy(),
                time: t.to_f64_lossy(),
            });
        }
        if !norm.is_finite() || norm > threshold {
            let (crossing, s_cross) = bisect_crossing(problem, &s, t, step, threshold);
            let pole = crossing + T::one() / sym_norm(&s_cross).max(T::one());
            return Ok(RiccatiTrajectory {
                samples,
                blowup: Some(Blowup { time: pole, last_safe_time: t }),
            });
        }
        t += step;
        s = (&next + next.transpose()) * T::lit(0.5);
        samples.push(RiccatiSample { t, s: s.clone() });
        if norm > reference * T::lit(2.0) {
            h *= T::lit(0.5);
            reference = norm;
            if h < min_step {
                return Err(RiccatiError::StepTooLarge {
                    drift: 0.0,
                    time: t.to_f64_lossy(),
                });
            }
        }
    }
    Ok(RiccatiTrajectory { samples, blowup: None })
}

/// Shrinks the sub-step from `s` at `t` until the threshold crossing is
/// bracketed within [`BLOWUP_RESOLUTION`]; returns the lower end of the
/// bracket and the state there.
fn bisect_crossing<T: Scalar>(
    problem: &RiccatiProblem<T>,
    s: &DMatrix<T>,
    t: T,
    step: T,
    threshold: T,
) -> (T, DMatrix<T>) {
    let (mut lo, mut hi) = (T::zero(), step);
    let mut s_lo = s.clone();
    let resolution = T::lit(BLOWUP_RESOLUTION);
    while hi - lo > resolution {
        let mid = (lo + hi) * T::lit(0.5);
        let trial = problem.rk4_step(s, mid);
        let norm = sym_norm(&trial);
        if norm.is_finite() && norm <= threshold {
            lo = mid;
            s_lo = trial;
        } else {
            hi = mid;
        }
    }
    (t + lo, s_lo)
}

/// Solution of `ā' + ā² + δ = 0`, `ā(0) = a0`:
/// `ā(t) = √δ tan(√δ (t0 − t))` with `t0 = arctan(a0/√δ)/√δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonModel<T> {
    pub delta: T,
    pub initial: T,
    pub t0: T,
}

impl<T: Scalar> ComparisonModel<T> {
    pub fn new(delta: T, initial: T) -> Self {
        let root = delta.sqrt();
        Self { delta, initial, t0: (initial / root).atan() / root }
    }

    pub fn value(&self, t: T) -> T {
        let root = self.delta.sqrt();
        root * (root * (self.t0 - t)).tan()
    }

    /// Order-preserving reparametrization `arctan(a/√δ)/√δ`. Along the model it
    /// equals `t0 − t`, so comparing phases stays well conditioned near the
    /// pole where `a` and `ā` are both huge.
    pub fn phase(&self, a: T) -> T {
        let root = self.delta.sqrt();
        (a / root).atan() / root
    }

    /// `ā → −∞` at `t0 + π/(2√δ)`.
    pub fn blowup_time(&self) -> T {
        self.t0 + T::frac_pi_2() / self.delta.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonSample<T> {
    pub t: T,
    pub average_trace: T,
    pub model: T,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport<T> {
    pub holds: bool,
    /// Largest `phase(a) − phase(ā)` over the compared samples.
    pub max_violation: T,
    pub model: ComparisonModel<T>,
    pub blowup: Option<Blowup<T>>,
    pub samples: Vec<ComparisonSample<T>>,
}

/// Checks `a(t) = tr S(t)/n ≤ ā(t)` up to the earlier of the two blow-ups.
pub fn average_trace_comparison<T: Scalar>(
    problem: &RiccatiProblem<T>,
    delta: T,
) -> Result<ComparisonReport<T>, RiccatiError> {
    let n = T::from_usize_lossy(problem.dim());
    let trace = problem.curvature_trace();
    let required = n * delta;
    if !(delta > T::zero()) || trace < required - T::tol(1e-12) * required.max(T::one()) {
        return Err(RiccatiError::PreconditionViolated {
            trace: trace.to_f64_lossy(),
            required: required.to_f64_lossy(),
        });
    }
    let a0 = problem.s0.matrix().trace() / n;
    let model = ComparisonModel::new(delta, a0);
    let horizon = model.blowup_time();
    let trajectory = integrate_riccati(problem, horizon)?;
    let cutoff = trajectory.blowup.map_or(horizon, |b| b.last_safe_time.min(horizon));

    let mut max_violation = T::min_value().expect("bounded type");
    let mut samples = Vec::with_capacity(trajectory.samples.len());
    for (t, a) in trajectory.average_trace() {
        if t > cutoff || t >= horizon {
            break;
        }
        let bar = model.value(t);
        let violation = model.phase(a) - (model.t0 - t);
        if violation > max_violation {
            max_violation = violation;
        }
        samples.push(ComparisonSample { t, average_trace: a, model: bar });
    }
    Ok(ComparisonReport {
        holds: max_violation <= T::tol(COMPARISON_TOLERANCE),
        max_violation,
        model,
        blowup: trajectory.blowup,
        samples,
    })
}

/// Upper bound `π/√δ` on the distance between consecutive singular times when
/// `tr R > nδ`.
pub fn first_blowup_bound<T: Scalar>(delta: T) -> T {
    T::pi() / delta.sqrt()
}

/// Gaps between `0` and consecutive singular times of the Lagrangian family
/// whose Riccati operator solves `problem`, over `(0, horizon]`.
///
/// The grid is refined automatically when two singular times share a cell.
pub fn measured_blowup_gaps<T: Scalar>(
    problem: &RiccatiProblem<T>,
    horizon: T,
) -> Result<Vec<T>, RiccatiError> {
    if !(horizon > T::zero() && horizon.is_finite()) {
        return Err(RiccatiError::InvalidHorizon(horizon.to_f64_lossy()));
    }
    // sort axes by λ and permute S_0 to match
    let n = problem.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| problem.r_diag[i].partial_cmp(&problem.r_diag[j]).expect("finite"));
    let permuted = DMatrix::from_fn(n, n, |i, j| problem.s0.matrix()[(order[i], order[j])]);
    let spectrum = CurvatureSpectrum::new(
        order
            .iter()
            .map(|&i| SpectrumEntry { lambda: problem.r_diag[i].sqrt(), multiplicity: 1 })
            .collect(),
    )?;
    let family = holonomy_basis(&spectrum, &RiccatiOperator::new(permuted)?)?;

    let mut options = FocalOptions::default();
    let focal = loop {
        match family.focal_data(Interval { include_start: false, ..Interval::closed(T::zero(), horizon) }, options) {
            Err(JacobiError::RootIsolationFailure { .. }) if options.samples_per_period < 1 << 20 => {
                options.samples_per_period *= 4;
            }
            other => break other?,
        }
    };
    let mut previous = T::zero();
    Ok(focal
        .iter()
        .map(|d| {
            let gap = d.time - previous;
            previous = d.time;
            gap
        })
        .collect())
}
