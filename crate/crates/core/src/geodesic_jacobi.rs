//! Jacobi fields along a horizontal geodesic in a parallel eigenframe.
//!
//! In a symmetric space the curvature operator `R_t = R(·, γ')γ'` is parallel,
//! so in the parallel eigenframe `E_1, …, E_n` it is a constant diagonal matrix
//! `diag(λ_1², …, λ_n²)`. Every Jacobi field then evolves componentwise in
//! closed form, and a Lagrangian family is described by an `n × n` matrix
//! `M(t)` whose column `i` holds the frame components `⟨J_i(t), E_j(t)⟩`.
//!
//! Sign convention: the initial Riccati operator `S_0` is the *negative* of the
//! leaf's shape operator, so `f'(0) = tr S_0 = −⟨H, X⟩` for `f(t) = det M(t)`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::num::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JacobiError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operator is not symmetric (max deviation {max_deviation:.3e})")]
    NonSymmetric { max_deviation: f64 },
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("invalid interval [{start}, {end}]")]
    InvalidInterval { start: f64, end: f64 },
    #[error("root isolation failed near t = {near}: refine the sampling grid")]
    RootIsolationFailure { near: f64 },
}

impl JacobiError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::DimensionMismatch { .. } => "DimensionMismatch",
            Self::NonSymmetric { .. } => "NonSymmetric",
            Self::InvalidSpectrum(_) => "InvalidSpectrum",
            Self::InvalidInterval { .. } => "InvalidInterval",
            Self::RootIsolationFailure { .. } => "RootIsolationFailure",
        }
    }
}

/// One eigenvalue block of the curvature operator: `R` acts as `lambda²` on a
/// `multiplicity`-dimensional subspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumEntry<T> {
    pub lambda: T,
    pub multiplicity: usize,
}

/// Square roots `λ ≥ 0` of the eigenvalues of the parallel curvature operator.
///
/// Entries are kept sorted ascending with distinct `λ`; frame axes are laid
/// out in that order, each `λ` repeated `multiplicity` times.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSpectrum<T> {
    entries: Vec<SpectrumEntry<T>>,
}

impl<T: Scalar> CurvatureSpectrum<T> {
    /// Builds a spectrum from blocks in any order. Blocks with equal `λ` are
    /// merged.
    pub fn new(mut entries: Vec<SpectrumEntry<T>>) -> Result<Self, JacobiError> {
        if entries.is_empty() {
            return Err(JacobiError::InvalidSpectrum("empty spectrum".into()));
        }
        for e in &entries {
            if !e.lambda.is_finite() || e.lambda < T::zero() {
                return Err(JacobiError::InvalidSpectrum(format!(
                    "lambda must be finite and non-negative, got {}",
                    e.lambda.to_f64_lossy()
                )));
            }
            if e.multiplicity == 0 {
                return Err(JacobiError::InvalidSpectrum(
                    "multiplicity must be positive".into(),
                ));
            }
        }
        entries.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).expect("finite"));
        let mut merged: Vec<SpectrumEntry<T>> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if (last.lambda - e.lambda).abs() <= T::tol(1e-12) => {
                    last.multiplicity += e.multiplicity;
                }
                _ => merged.push(e),
            }
        }
        Ok(Self { entries: merged })
    }

    /// Builds a spectrum from per-axis values, which must be non-decreasing so
    /// that the axis order matches the canonical layout.
    pub fn from_axes(lambdas: &[T]) -> Result<Self, JacobiError> {
        if lambdas.windows(2).any(|w| w[1] < w[0]) {
            return Err(JacobiError::InvalidSpectrum(
                "per-axis lambdas must be sorted ascending".into(),
            ));
        }
        Self::new(
            lambdas
                .iter()
                .map(|&lambda| SpectrumEntry { lambda, multiplicity: 1 })
                .collect(),
        )
    }

    /// All axes share the same `λ`.
    pub fn uniform(lambda: T, multiplicity: usize) -> Result<Self, JacobiError> {
        Self::new(vec![SpectrumEntry { lambda, multiplicity }])
    }

    pub fn entries(&self) -> &[SpectrumEntry<T>] {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    pub fn axis_lambdas(&self) -> Vec<T> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.lambda, e.multiplicity))
            .collect()
    }

    /// `Σ λ_i` counted with multiplicity.
    pub fn lambda_mass(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, e| acc + e.lambda * T::from_usize_lossy(e.multiplicity))
    }

    /// Trace of the curvature operator, `Σ λ_i²`.
    pub fn curvature_trace(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, e| {
            acc + e.lambda * e.lambda * T::from_usize_lossy(e.multiplicity)
        })
    }

    pub fn is_integral(&self) -> bool {
        self.entries
            .iter()
            .all(|e| (e.lambda - e.lambda.round()).abs() <= T::tol(1e-12))
    }
}

/// Symmetric initial Riccati operator `S_0` in the parallel eigenframe.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiOperator<T: Scalar> {
    matrix: DMatrix<T>,
}

impl<T: Scalar> RiccatiOperator<T> {
    /// Accepts a square matrix that is symmetric within `1e-12` (scaled by its
    /// largest entry when that exceeds one) and stores its symmetric part.
    pub fn new(matrix: DMatrix<T>) -> Result<Self, JacobiError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(JacobiError::DimensionMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let scale = matrix.amax().max(T::one());
        let deviation = (&matrix - matrix.transpose()).amax();
        if deviation > T::tol(1e-12) * scale {
            return Err(JacobiError::NonSymmetric {
                max_deviation: deviation.to_f64_lossy(),
            });
        }
        let matrix = (&matrix + matrix.transpose()) * T::lit(0.5);
        Ok(Self { matrix })
    }

    pub fn zeros(n: usize) -> Self {
        Self { matrix: DMatrix::zeros(n, n) }
    }

    pub fn diagonal(values: &[T]) -> Self {
        Self {
            matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values)),
        }
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Cosine-type fundamental solution of `u'' + λ²u = 0` and its derivative.
#[inline]
fn cos_mode<T: Scalar>(lambda: T, t: T) -> (T, T) {
    if lambda == T::zero() {
        (T::one(), T::zero())
    } else {
        let (s, c) = (lambda * t).sin_cos();
        (c, -lambda * s)
    }
}

/// Sine-type fundamental solution `sin(λt)/λ` (or `t` when `λ = 0`) and its
/// derivative.
#[inline]
fn sin_mode<T: Scalar>(lambda: T, t: T) -> (T, T) {
    if lambda == T::zero() {
        (t, T::one())
    } else {
        let (s, c) = (lambda * t).sin_cos();
        (s / lambda, c)
    }
}

/// Solution of `u'' + λ²u = 0` with `u(0) = u0`, `u'(0) = du0`.
///
/// `λ = 0` uses the exact linear solution rather than a small-`λ` limit.
pub fn evolve_component<T: Scalar>(lambda: T, u0: T, du0: T, t: T) -> T {
    let (c, _) = cos_mode(lambda, t);
    let (s, _) = sin_mode(lambda, t);
    u0 * c + du0 * s
}

/// Closed interval, half-open or open, for focal counting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub start: T,
    pub end: T,
    pub include_start: bool,
    pub include_end: bool,
}

impl<T: Scalar> Interval<T> {
    pub fn closed(start: T, end: T) -> Self {
        Self { start, end, include_start: true, include_end: true }
    }

    /// `[start, end)`
    pub fn half_open(start: T, end: T) -> Self {
        Self { start, end, include_start: true, include_end: false }
    }

    pub fn open(start: T, end: T) -> Self {
        Self { start, end, include_start: false, include_end: false }
    }

    fn validate(&self) -> Result<(), JacobiError> {
        if !(self.start.is_finite() && self.end.is_finite() && self.end > self.start) {
            return Err(JacobiError::InvalidInterval {
                start: self.start.to_f64_lossy(),
                end: self.end.to_f64_lossy(),
            });
        }
        Ok(())
    }
}

/// A focal (singular) time and its multiplicity `n − rank M(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalDatum<T> {
    pub time: T,
    pub multiplicity: usize,
}

/// Sampling and rank parameters for focal-time search.
#[derive(Debug, Clone, Copy)]
pub struct FocalOptions<T> {
    /// Grid samples per `2π` of arc length.
    pub samples_per_period: usize,
    /// Singular values below `rank_tolerance · σ_max` count as zero.
    pub rank_tolerance: T,
}

impl<T: Scalar> Default for FocalOptions<T> {
    fn default() -> Self {
        Self { samples_per_period: 2048, rank_tolerance: T::tol(1e-9) }
    }
}

/// A family of `n` Jacobi fields in the parallel eigenframe,
/// `M(t) = C(t)·M(0) + D(t)·M'(0)` with `C = diag(cos λ_j t)` and
/// `D = diag(sin(λ_j t)/λ_j)`.
#[derive(Debug, Clone)]
pub struct JacobiFamily<T: Scalar> {
    spectrum: CurvatureSpectrum<T>,
    lambdas: Vec<T>,
    initial: DMatrix<T>,
    velocity: DMatrix<T>,
}

/// Holonomy Jacobi fields: `J_i(0) = e_i`, `J_i'(0) = S_0 e_i`.
pub fn holonomy_basis<T: Scalar>(
    spectrum: &CurvatureSpectrum<T>,
    s0: &RiccatiOperator<T>,
) -> Result<JacobiFamily<T>, JacobiError> {
    let n = spectrum.dim();
    if s0.dim() != n {
        return Err(JacobiError::DimensionMismatch { expected: n, found: s0.dim() });
    }
    Ok(JacobiFamily {
        spectrum: spectrum.clone(),
        lambdas: spectrum.axis_lambdas(),
        initial: DMatrix::identity(n, n),
        velocity: s0.matrix().clone(),
    })
}

/// The family vanishing at `t = 0`: `J_i(0) = 0`, `J_i'(0) = e_i`, so
/// `J_i(t) = sin(λ_i t)/λ_i · E_i(t)`.
pub fn zero_initial_family<T: Scalar>(spectrum: &CurvatureSpectrum<T>) -> JacobiFamily<T> {
    let n = spectrum.dim();
    JacobiFamily {
        spectrum: spectrum.clone(),
        lambdas: spectrum.axis_lambdas(),
        initial: DMatrix::zeros(n, n),
        velocity: DMatrix::identity(n, n),
    }
}

/// True when `S_0` annihilates the kernel of `R` (the `λ = 0` axes).
pub fn kernel_inclusion_check<T: Scalar>(
    spectrum: &CurvatureSpectrum<T>,
    s0: &RiccatiOperator<T>,
) -> bool {
    let m = s0.matrix();
    if m.nrows() != spectrum.dim() {
        return false;
    }
    let tol = T::tol(1e-9) * m.amax().max(T::one());
    spectrum
        .axis_lambdas()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l <= T::tol(1e-12))
        .all(|(j, _)| m.column(j).amax() <= tol)
}

impl<T: Scalar> JacobiFamily<T> {
    pub fn spectrum(&self) -> &CurvatureSpectrum<T> {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    /// `M(t)`, column `i` = frame components of `J_i(t)`.
    pub fn matrix_at(&self, t: T) -> DMatrix<T> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (j, &lambda) in self.lambdas.iter().enumerate() {
            let (c, _) = cos_mode(lambda, t);
            let (s, _) = sin_mode(lambda, t);
            for i in 0..n {
                m[(j, i)] = c * self.initial[(j, i)] + s * self.velocity[(j, i)];
            }
        }
        m
    }

    /// `M'(t)`.
    pub fn derivative_at(&self, t: T) -> DMatrix<T> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (j, &lambda) in self.lambdas.iter().enumerate() {
            let (_, dc) = cos_mode(lambda, t);
            let (_, ds) = sin_mode(lambda, t);
            for i in 0..n {
                m[(j, i)] = dc * self.initial[(j, i)] + ds * self.velocity[(j, i)];
            }
        }
        m
    }

    /// Largest entry of `M'(t)ᵀM(t) − M(t)ᵀM'(t)`; zero for isotropic families.
    pub fn isotropy_defect(&self, t: T) -> T {
        let m = self.matrix_at(t);
        let dm = self.derivative_at(t);
        (dm.transpose() * &m - m.transpose() * dm).amax()
    }

    /// Volume density `f(t) = det M(t)`.
    pub fn volume_density(&self, t: T) -> T {
        self.matrix_at(t).determinant()
    }

    /// Riccati operator `S_t = M'(t) M(t)^{-1}` at a regular time.
    pub fn riccati_at(&self, t: T) -> Option<DMatrix<T>> {
        let m = self.matrix_at(t);
        let inv = m.try_inverse()?;
        Some(self.derivative_at(t) * inv)
    }

    fn smallest_singular_value(&self, t: T) -> T {
        self.matrix_at(t).singular_values().min()
    }

    /// Focal times on `interval`, sorted, each with its multiplicity.
    ///
    /// Candidates are local minima of `σ_min(M(t))` on a uniform grid; each is
    /// refined by golden-section search and accepted when `M` loses rank there.
    /// A sign pattern of `det M` at the bracket ends that disagrees with the
    /// multiplicity parity means two focal times share a grid cell.
    pub fn focal_data(
        &self,
        interval: Interval<T>,
        options: FocalOptions<T>,
    ) -> Result<Vec<FocalDatum<T>>, JacobiError> {
        interval.validate()?;
        let (a, b) = (interval.start, interval.end);
        let period = T::two_pi();
        let cells = ((b - a) / period * T::from_usize_lossy(options.samples_per_period.max(8)))
            .ceil()
            .to_usize()
            .unwrap_or(1)
            .max(8);
        let h = (b - a) / T::from_usize_lossy(cells);
        // one extra cell on either side so that focal times at the ends are bracketed
        let times: Vec<T> = (0..cells + 3)
            .map(|k| a + h * (T::from_usize_lossy(k) - T::one()))
            .collect();
        let sigma: Vec<T> = times.iter().map(|&t| self.smallest_singular_value(t)).collect();

        let snap = T::tol(1e-9) * a.abs().max(b.abs()).max(T::one());
        let mut found: Vec<FocalDatum<T>> = Vec::new();
        for k in 1..times.len() - 1 {
            let (prev, cur, next) = (sigma[k - 1], sigma[k], sigma[k + 1]);
            let is_min = cur <= prev && cur <= next && (cur < prev || cur < next);
            if !is_min {
                continue;
            }
            let (lo, hi) = (times[k - 1], times[k + 1]);
            let t_star = golden_section_min(|t| self.smallest_singular_value(t), lo, hi);
            let multiplicity = self.rank_deficiency(t_star, options.rank_tolerance);
            if multiplicity == 0 {
                continue;
            }
            let (f_lo, f_hi) = (self.volume_density(lo), self.volume_density(hi));
            if f_lo != T::zero() && f_hi != T::zero() {
                let sign_change = (f_lo > T::zero()) != (f_hi > T::zero());
                if sign_change != (multiplicity % 2 == 1) {
                    return Err(JacobiError::RootIsolationFailure { near: t_star.to_f64_lossy() });
                }
            }
            if found.iter().any(|d| (d.time - t_star).abs() <= snap) {
                continue;
            }
            let mut time = t_star;
            if (time - a).abs() <= snap {
                time = a;
            }
            if (time - b).abs() <= snap {
                time = b;
            }
            let inside = (time > a || (time == a && interval.include_start))
                && (time < b || (time == b && interval.include_end));
            if inside {
                found.push(FocalDatum { time, multiplicity });
            }
        }
        found.sort_by(|x, y| x.time.partial_cmp(&y.time).expect("finite"));
        Ok(found)
    }

    /// `ind_I = Σ_{t ∈ I} (n − rank M(t))`.
    pub fn index_over_interval(
        &self,
        interval: Interval<T>,
        options: FocalOptions<T>,
    ) -> Result<usize, JacobiError> {
        Ok(self
            .focal_data(interval, options)?
            .iter()
            .map(|d| d.multiplicity)
            .sum())
    }

    /// Number of singular values of `M(t)` below `tol · σ_max`, where `σ_max`
    /// is taken from the stacked frame `[M(t); M'(t)]`. That frame always has
    /// full rank, so the scale survives when every field vanishes at once.
    pub fn rank_deficiency(&self, t: T, tol: T) -> usize {
        let m = self.matrix_at(t);
        let n = self.dim();
        let mut frame = DMatrix::zeros(2 * n, n);
        frame.view_mut((0, 0), (n, n)).copy_from(&m);
        frame.view_mut((n, 0), (n, n)).copy_from(&self.derivative_at(t));
        let scale = frame.singular_values().max();
        m.singular_values().iter().filter(|&&s| s <= tol * scale).count()
    }
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_section_min<T: Scalar, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T) -> T {
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let tol = T::default_epsilon() * T::lit(4.0) * (lo.abs().max(hi.abs()).max(T::one()));
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    let mid = (lo + hi) * T::lit(0.5);
    // the minimizer may sit exactly on a bracket end
    [lo, mid, hi]
        .into_iter()
        .min_by(|x, y| f(*x).partial_cmp(&f(*y)).expect("finite"))
        .expect("non-empty")
}
