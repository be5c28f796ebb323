//! Reconstruction of the volume density `f(t) = det M(t)` from its focal data.
//!
//! With sections normalized to curvature one, `f` lies in the space `T`
//! spanned by `cos(st), sin(st)` for integers `s ≡ m/2 (mod 2)`, `0 ≤ s ≤ m/2`
//! (plus the constant when `m/2` is even), where `m/2 = ind_{[0,π)}`. The
//! vanishing conditions at the focal times in `(0, π)` cut out a line in `T`;
//! `f` is the element of that line with `f(0) = 1`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::num::{rem_euclid, Scalar};

/// Relative singular-value threshold for kernel extraction.
pub const KERNEL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReconstructError {
    #[error("constraint system has a {dimension}-dimensional kernel, expected 1")]
    KernelDimensionError { dimension: usize },
    #[error("kernel function vanishes at t = 0")]
    ZeroAtOrigin,
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("declared m_half = {declared} but constraint orders sum to {actual}")]
    OrderMismatch { declared: usize, actual: usize },
}

impl ReconstructError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::KernelDimensionError { .. } => "KernelDimensionError",
            Self::ZeroAtOrigin => "ZeroAtOrigin",
            Self::InvalidConstraint(_) => "InvalidConstraint",
            Self::OrderMismatch { .. } => "OrderMismatch",
        }
    }
}

/// A real trigonometric polynomial `Σ_k a_k cos(kt) + b_k sin(kt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly<T> {
    cos: Vec<T>,
    sin: Vec<T>,
}

impl<T: Scalar> TrigPoly<T> {
    pub fn constant(c: T) -> Self {
        Self { cos: vec![c], sin: vec![T::zero()] }
    }

    fn zeros(max_freq: usize) -> Self {
        Self { cos: vec![T::zero(); max_freq + 1], sin: vec![T::zero(); max_freq + 1] }
    }

    /// `sin(t − shift)`
    pub fn shifted_sin(shift: T) -> Self {
        let (s, c) = shift.sin_cos();
        Self { cos: vec![T::zero(), -s], sin: vec![T::zero(), c] }
    }

    /// `cos(t − shift)`
    pub fn shifted_cos(shift: T) -> Self {
        let (s, c) = shift.sin_cos();
        Self { cos: vec![T::zero(), c], sin: vec![T::zero(), s] }
    }

    pub fn max_frequency(&self) -> usize {
        self.cos.len() - 1
    }

    pub fn cos_coefficients(&self) -> &[T] {
        &self.cos
    }

    pub fn sin_coefficients(&self) -> &[T] {
        &self.sin
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (p, q) = (self.max_frequency(), other.max_frequency());
        let mut out = Self::zeros(p + q);
        let half = T::lit(0.5);
        for j in 0..=p {
            for k in 0..=q {
                let (aj, bj) = (self.cos[j], self.sin[j]);
                let (ak, bk) = (other.cos[k], other.sin[k]);
                let (sum, diff) = (j + k, j.abs_diff(k));
                // cos·cos and sin·sin
                out.cos[sum] += half * (aj * ak - bj * bk);
                out.cos[diff] += half * (aj * ak + bj * bk);
                // sin j·cos k and cos j·sin k
                out.sin[sum] += half * (bj * ak + aj * bk);
                let cross = half * (bj * ak - aj * bk);
                if j >= k {
                    out.sin[diff] += cross;
                } else {
                    out.sin[diff] -= cross;
                }
            }
        }
        out.sin[0] = T::zero();
        out
    }

    pub fn pow(&self, exponent: usize) -> Self {
        (0..exponent).fold(Self::constant(T::one()), |acc, _| acc.mul(self))
    }

    /// `d^order/dt^order` evaluated at `t`, computed analytically.
    pub fn derivative(&self, t: T, order: usize) -> T {
        let mut acc = if order == 0 { self.cos[0] } else { T::zero() };
        for k in 1..=self.max_frequency() {
            acc += self.cos[k] * trig_derivative(false, k, t, order)
                + self.sin[k] * trig_derivative(true, k, t, order);
        }
        acc
    }

    pub fn eval(&self, t: T) -> T {
        self.derivative(t, 0)
    }
}

/// `d^order/dt^order` of `cos(kt)` (or `sin(kt)`) at `t`.
fn trig_derivative<T: Scalar>(is_sin: bool, k: usize, t: T, order: usize) -> T {
    let freq = T::from_usize_lossy(k);
    let scale = freq.powi(order as i32);
    let phase = freq * t + T::frac_pi_2() * T::from_usize_lossy(order);
    if is_sin {
        scale * phase.sin()
    } else {
        scale * phase.cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFunction {
    Constant,
    Cos(usize),
    Sin(usize),
}

impl BasisFunction {
    pub fn frequency(self) -> usize {
        match self {
            Self::Constant => 0,
            Self::Cos(k) | Self::Sin(k) => k,
        }
    }

    fn derivative<T: Scalar>(self, t: T, order: usize) -> T {
        match self {
            Self::Constant if order == 0 => T::one(),
            Self::Constant => T::zero(),
            Self::Cos(k) => trig_derivative(false, k, t, order),
            Self::Sin(k) => trig_derivative(true, k, t, order),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

/// `span{1, cos 2t, sin 2t, …}` for even `m_half`, `span{cos t, sin t, cos 3t, …}`
/// for odd; dimension `m_half + 1` in both cases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrigSpace {
    m_half: usize,
    basis: Vec<BasisFunction>,
}

pub fn build_space(m_half: usize) -> TrigSpace {
    let mut basis = Vec::with_capacity(m_half + 1);
    let start = if m_half % 2 == 0 {
        basis.push(BasisFunction::Constant);
        2
    } else {
        1
    };
    for k in (start..=m_half).step_by(2) {
        basis.push(BasisFunction::Cos(k));
        basis.push(BasisFunction::Sin(k));
    }
    TrigSpace { m_half, basis }
}

impl TrigSpace {
    pub fn m_half(&self) -> usize {
        self.m_half
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn parity(&self) -> Parity {
        if self.m_half % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn basis(&self) -> &[BasisFunction] {
        &self.basis
    }

    /// Whether `poly` lies in this space up to `tol` on its coefficients.
    pub fn contains<T: Scalar>(&self, poly: &TrigPoly<T>, tol: T) -> bool {
        (0..=poly.max_frequency()).all(|k| {
            let allowed = k <= self.m_half && k % 2 == self.m_half % 2;
            allowed
                || (poly.cos_coefficients()[k].abs() <= tol
                    && poly.sin_coefficients()[k].abs() <= tol)
        })
    }
}

/// `f` and its first `order − 1` derivatives vanish at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanishingConstraint<T> {
    pub time: T,
    pub order: usize,
}

/// An element of a [`TrigSpace`] given by its coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigDensity<T> {
    space: TrigSpace,
    coefficients: Vec<T>,
}

impl<T: Scalar> TrigDensity<T> {
    pub fn space(&self) -> &TrigSpace {
        &self.space
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    pub fn derivative(&self, t: T, order: usize) -> T {
        self.space
            .basis
            .iter()
            .zip(&self.coefficients)
            .fold(T::zero(), |acc, (b, &c)| acc + c * b.derivative(t, order))
    }

    pub fn eval(&self, t: T) -> T {
        self.derivative(t, 0)
    }

    pub fn to_poly(&self) -> TrigPoly<T> {
        let mut poly = TrigPoly::zeros(self.space.m_half.max(1));
        for (b, &c) in self.space.basis.iter().zip(&self.coefficients) {
            match *b {
                BasisFunction::Constant => poly.cos[0] += c,
                BasisFunction::Cos(k) => poly.cos[k] += c,
                BasisFunction::Sin(k) => poly.sin[k] += c,
            }
        }
        poly
    }
}

/// Reduces times mod `π` and validates them.
pub fn normalize_constraints<T: Scalar>(
    constraints: &[VanishingConstraint<T>],
) -> Result<Vec<VanishingConstraint<T>>, ReconstructError> {
    let pi = T::pi();
    let tol = T::tol(1e-9);
    let mut out: Vec<VanishingConstraint<T>> = Vec::with_capacity(constraints.len());
    for c in constraints {
        if !c.time.is_finite() {
            return Err(ReconstructError::InvalidConstraint("non-finite time".into()));
        }
        if c.order == 0 {
            return Err(ReconstructError::InvalidConstraint("order must be positive".into()));
        }
        let time = rem_euclid(c.time, pi);
        if time <= tol || pi - time <= tol {
            return Err(ReconstructError::InvalidConstraint(format!(
                "time {} is a multiple of π; 0 cannot be a focal time",
                c.time.to_f64_lossy()
            )));
        }
        if out.iter().any(|o| (o.time - time).abs() <= tol) {
            return Err(ReconstructError::InvalidConstraint(format!(
                "duplicate time {} (mod π)",
                time.to_f64_lossy()
            )));
        }
        out.push(VanishingConstraint { time, order: c.order });
    }
    Ok(out)
}

/// The `m_half × (m_half + 1)` matrix of vanishing conditions on `space`, one
/// row per derivative order per constraint.
pub fn constraint_matrix<T: Scalar>(
    space: &TrigSpace,
    constraints: &[VanishingConstraint<T>],
) -> DMatrix<T> {
    let rows: usize = constraints.iter().map(|c| c.order).sum();
    let mut a = DMatrix::zeros(rows, space.dim());
    let mut r = 0;
    for c in constraints {
        for order in 0..c.order {
            for (col, b) in space.basis.iter().enumerate() {
                a[(r, col)] = b.derivative(c.time, order);
            }
            r += 1;
        }
    }
    a
}

/// The unique `f ∈ T` with the prescribed zeros and `f(0) = 1`.
pub fn reconstruct_density<T: Scalar>(
    constraints: &[VanishingConstraint<T>],
) -> Result<TrigDensity<T>, ReconstructError> {
    let constraints = normalize_constraints(constraints)?;
    let m_half: usize = constraints.iter().map(|c| c.order).sum();
    let space = build_space(m_half);
    let dim = space.dim();

    // Pad with a zero row so the SVD is square and yields a full right basis.
    let mut a = DMatrix::zeros(dim, dim);
    let raw = constraint_matrix(&space, &constraints);
    for (r, row) in raw.row_iter().enumerate() {
        let norm = row.norm();
        a.row_mut(r).copy_from(&(row / norm));
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let sigma_max = svd.singular_values.max().max(T::one());
    let null: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= T::tol(KERNEL_TOLERANCE) * sigma_max)
        .map(|(i, _)| i)
        .collect();
    if null.len() != 1 {
        return Err(ReconstructError::KernelDimensionError { dimension: null.len() });
    }
    let kernel: Vec<T> = v_t.row(null[0]).iter().copied().collect();
    let density = TrigDensity { space, coefficients: kernel };
    let at_origin = density.eval(T::zero());
    let scale = density.coefficients.iter().fold(T::zero(), |m, c| m.max(c.abs()));
    if at_origin.abs() <= T::tol(KERNEL_TOLERANCE) * scale {
        return Err(ReconstructError::ZeroAtOrigin);
    }
    let coefficients = density.coefficients.iter().map(|&c| c / at_origin).collect();
    Ok(TrigDensity { space: density.space, coefficients })
}

/// `−f'(0)`, the component `⟨H, X⟩` of the mean curvature along the geodesic
/// direction, for a density normalized to `f(0) = 1`.
pub fn mean_curvature_component<T: Scalar>(density: &TrigDensity<T>) -> T {
    -density.derivative(T::zero(), 1)
}

#[derive(Debug, Clone)]
pub struct TriangularCertificate<T: Scalar> {
    pub triangular: bool,
    /// First failing entry `(row, column, value)`, if any.
    pub offending: Option<(usize, usize, T)>,
    pub matrix: DMatrix<T>,
}

/// Evaluates the constraint map on the spanning set
/// `cos^l(t − t_j) / sin^l(t − t_j) · Π_i sin^{m_i}(t − t_i)`
/// (`j = 1..k`, `l = 1..m_j`) and checks the result is lower triangular with a
/// non-zero diagonal. Columns are ordered by `j`, then by `l` descending; rows
/// by `j`, then by derivative order ascending.
pub fn triangular_basis_check<T: Scalar>(
    constraints: &[VanishingConstraint<T>],
) -> Result<TriangularCertificate<T>, ReconstructError> {
    let constraints = normalize_constraints(constraints)?;
    let sines: Vec<TrigPoly<T>> = constraints
        .iter()
        .map(|c| TrigPoly::shifted_sin(c.time))
        .collect();
    let mut columns: Vec<TrigPoly<T>> = Vec::new();
    for (j, cj) in constraints.iter().enumerate() {
        let others = constraints
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .fold(TrigPoly::constant(T::one()), |acc, (i, ci)| acc.mul(&sines[i].pow(ci.order)));
        let cosine = TrigPoly::shifted_cos(cj.time);
        for l in (1..=cj.order).rev() {
            columns.push(others.mul(&cosine.pow(l)).mul(&sines[j].pow(cj.order - l)));
        }
    }
    let size = columns.len();
    let mut b = DMatrix::zeros(size, size);
    let mut row = 0;
    for c in &constraints {
        for order in 0..c.order {
            for (col, g) in columns.iter().enumerate() {
                b[(row, col)] = g.derivative(c.time, order);
            }
            row += 1;
        }
    }
    let tol = T::tol(KERNEL_TOLERANCE) * b.amax().max(T::one());
    let mut offending = None;
    'scan: for r in 0..size {
        if b[(r, r)].abs() <= tol {
            offending = Some((r, r, b[(r, r)]));
            break;
        }
        for c in r + 1..size {
            if b[(r, c)].abs() > tol {
                offending = Some((r, c, b[(r, c)]));
                break 'scan;
            }
        }
    }
    Ok(TriangularCertificate { triangular: offending.is_none(), offending, matrix: b })
}
