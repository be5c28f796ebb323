//! Concrete foliation models: isoparametric families in round spheres,
//! Euclidean distance spheres, parallel hyperplanes, and their products.
//!
//! Every model is described in chamber coordinates, one coordinate per
//! factor. Volume profiles are relative (normalizing constants dropped).

use std::fmt;

use nalgebra::DVector;
use thiserror::Error;

use crate::arrangement::{Ambient, ArrangementError, Offsets, WallArrangement, WallFamily};
use crate::geodesic_jacobi::{CurvatureSpectrum, JacobiError, RiccatiOperator};
use crate::num::{rem_euclid, Scalar};
use crate::trig_reconstruct::VanishingConstraint;

pub const ADMISSIBLE_G: [usize; 5] = [1, 2, 3, 4, 6];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("g = {0} is not one of 1, 2, 3, 4, 6")]
    InvalidG(usize),
    #[error("invalid multiplicity: {0}")]
    InvalidMultiplicity(String),
    #[error("coordinate {coordinate} = {value} is outside the open chamber")]
    OutOfChamber { coordinate: usize, value: f64 },
    #[error("point has {found} coordinates, chamber has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid model id `{0}`")]
    InvalidModelId(String),
    #[error("{0}")]
    Unsupported(String),
}

impl CatalogError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidG(_) => "InvalidG",
            Self::InvalidMultiplicity(_) => "InvalidMultiplicity",
            Self::OutOfChamber { .. } => "OutOfChamber",
            Self::DimensionMismatch { .. } => "DimensionMismatch",
            Self::InvalidModelId(_) => "InvalidModelId",
            Self::Unsupported(_) => "Unsupported",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelKind {
    /// `g` walls on the section circle with multiplicities alternating `m1, m2`.
    Sphere { g: usize, m1: usize, m2: usize },
    EuclideanSpheres { n: usize },
    EuclideanHyperplanes,
    Product(Vec<FoliationModel>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoliationModel {
    kind: ModelKind,
}

/// Lower or upper end of a chamber coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Lower => "lower",
            Self::Upper => "upper",
        })
    }
}

pub fn sphere_isoparametric(g: usize, m1: usize, m2: usize) -> Result<FoliationModel, CatalogError> {
    if !ADMISSIBLE_G.contains(&g) {
        return Err(CatalogError::InvalidG(g));
    }
    if m1 == 0 || m2 == 0 {
        return Err(CatalogError::InvalidMultiplicity("multiplicities must be positive".into()));
    }
    if g % 2 == 1 && m1 != m2 {
        return Err(CatalogError::InvalidMultiplicity(format!(
            "odd g = {g} forces equal multiplicities, got {m1} and {m2}"
        )));
    }
    Ok(FoliationModel { kind: ModelKind::Sphere { g, m1, m2 } })
}

/// Concentric spheres `S^n` in `R^{n+1}`, chamber coordinate the radius.
pub fn euclidean_spheres(n: usize) -> Result<FoliationModel, CatalogError> {
    if n == 0 {
        return Err(CatalogError::InvalidMultiplicity("leaf dimension must be positive".into()));
    }
    Ok(FoliationModel { kind: ModelKind::EuclideanSpheres { n } })
}

/// Parallel lines in the plane.
pub fn euclidean_hyperplanes() -> FoliationModel {
    FoliationModel { kind: ModelKind::EuclideanHyperplanes }
}

/// Products flatten: the factors of nested products are spliced in.
pub fn product_model(models: Vec<FoliationModel>) -> Result<FoliationModel, CatalogError> {
    if models.len() < 2 {
        return Err(CatalogError::InvalidModelId("a product needs at least two factors".into()));
    }
    let factors = models
        .into_iter()
        .flat_map(|m| match m.kind {
            ModelKind::Product(inner) => inner,
            _ => vec![m],
        })
        .collect();
    Ok(FoliationModel { kind: ModelKind::Product(factors) })
}

impl FoliationModel {
    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn id(&self) -> String {
        self.to_string()
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self.kind, ModelKind::Sphere { .. })
    }

    /// The one-dimensional factors, in chamber-coordinate order.
    pub fn factors(&self) -> Vec<&FoliationModel> {
        match &self.kind {
            ModelKind::Product(fs) => fs.iter().collect(),
            _ => vec![self],
        }
    }

    pub fn chamber_dim(&self) -> usize {
        self.factors().len()
    }

    pub fn leaf_dimension(&self) -> usize {
        match &self.kind {
            ModelKind::Sphere { g, m1, m2 } => (0..*g).map(|k| sphere_mult(k, *m1, *m2)).sum(),
            ModelKind::EuclideanSpheres { n } => *n,
            ModelKind::EuclideanHyperplanes => 1,
            ModelKind::Product(fs) => fs.iter().map(|f| f.leaf_dimension()).sum(),
        }
    }

    /// Open chamber bounds per coordinate (infinite where unbounded).
    pub fn chamber<T: Scalar>(&self) -> Vec<(T, T)> {
        self.factors()
            .into_iter()
            .map(|f| match f.kind {
                ModelKind::Sphere { g, .. } => (T::zero(), T::pi() / T::from_usize_lossy(g)),
                ModelKind::EuclideanSpheres { .. } => (T::zero(), infinity()),
                _ => (-infinity::<T>(), infinity()),
            })
            .collect()
    }

    /// Whether every coordinate has a bounded chamber.
    pub fn has_compact_chamber(&self) -> bool {
        self.factors().iter().all(|f| f.is_sphere())
    }

    /// Multiplicity of the wall bounding coordinate `coordinate` on `side`.
    pub fn wall_multiplicity(&self, coordinate: usize, side: Side) -> Option<usize> {
        let f = *self.factors().get(coordinate)?;
        match (&f.kind, side) {
            (ModelKind::Sphere { m1, .. }, Side::Lower) => Some(*m1),
            (ModelKind::Sphere { g, m1, m2 }, Side::Upper) => Some(sphere_mult(g - 1, *m1, *m2)),
            (ModelKind::EuclideanSpheres { n }, Side::Lower) => Some(*n),
            _ => None,
        }
    }

    pub fn check_point<T: Scalar>(&self, point: &[T]) -> Result<(), CatalogError> {
        let chamber = self.chamber::<T>();
        if point.len() != chamber.len() {
            return Err(CatalogError::DimensionMismatch { expected: chamber.len(), found: point.len() });
        }
        for (i, (&x, &(lo, hi))) in point.iter().zip(&chamber).enumerate() {
            if !(x > lo && x < hi) || !x.is_finite() {
                return Err(CatalogError::OutOfChamber { coordinate: i, value: x.to_f64_lossy() });
            }
        }
        Ok(())
    }
}

fn infinity<T: Scalar>() -> T {
    T::one() / T::zero()
}

fn sphere_mult(k: usize, m1: usize, m2: usize) -> usize {
    if k % 2 == 0 {
        m1
    } else {
        m2
    }
}

impl fmt::Display for FoliationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ModelKind::Sphere { g: 1, m1, .. } => write!(f, "spheres:{m1}"),
            ModelKind::Sphere { g: 2, m1, m2 } => write!(f, "clifford:{m1},{m2}"),
            ModelKind::Sphere { g, m1, m2 } => write!(f, "cartan:{g},{m1},{m2}"),
            ModelKind::EuclideanSpheres { n } => write!(f, "euclid-spheres:{n}"),
            ModelKind::EuclideanHyperplanes => write!(f, "hyperplanes"),
            ModelKind::Product(fs) => {
                let parts: Vec<String> = fs.iter().map(|m| m.to_string()).collect();
                write!(f, "product({})", parts.join(","))
            }
        }
    }
}

fn parse_usizes(id: &str, args: &str, count: usize) -> Result<Vec<usize>, CatalogError> {
    let parts: Vec<usize> = args
        .split(',')
        .map(|s| s.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| CatalogError::InvalidModelId(id.to_string()))?;
    if parts.len() != count {
        return Err(CatalogError::InvalidModelId(id.to_string()));
    }
    Ok(parts)
}

/// Splits product arguments at top-level commas that start a new model id
/// (parameter lists such as `clifford:1,2` contain commas too).
fn split_factors(inner: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0usize, 0usize);
    let bytes = inner.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth = depth.saturating_sub(1),
            b',' if depth == 0 => {
                let next = inner[i + 1..].trim_start();
                if next.starts_with(|c: char| c.is_ascii_alphabetic()) {
                    out.push(inner[start..i].trim());
                    start = i + 1;
                }
            }
            _ => {}
        }
    }
    out.push(inner[start..].trim());
    out
}

impl std::str::FromStr for FoliationModel {
    type Err = CatalogError;

    fn from_str(id: &str) -> Result<Self, Self::Err> {
        let id = id.trim();
        let bad = || CatalogError::InvalidModelId(id.to_string());
        if let Some(inner) = id.strip_prefix("product(").and_then(|s| s.strip_suffix(')')) {
            let factors = split_factors(inner)
                .into_iter()
                .map(str::parse)
                .collect::<Result<Vec<FoliationModel>, _>>()?;
            return product_model(factors);
        }
        if id == "hyperplanes" {
            return Ok(euclidean_hyperplanes());
        }
        let (name, args) = id.split_once(':').ok_or_else(bad)?;
        match name {
            "spheres" => {
                let n = parse_usizes(id, args, 1)?[0];
                sphere_isoparametric(1, n, n)
            }
            "clifford" => {
                let p = parse_usizes(id, args, 2)?;
                sphere_isoparametric(2, p[0], p[1])
            }
            "cartan" => {
                let p = parse_usizes(id, args, 3)?;
                sphere_isoparametric(p[0], p[1], p[2])
            }
            "euclid-spheres" => euclidean_spheres(parse_usizes(id, args, 1)?[0]),
            _ => Err(bad()),
        }
    }
}

/// Ids of the built-in registry.
pub const CATALOG_IDS: &[&str] = &[
    "spheres:1",
    "spheres:2",
    "spheres:3",
    "clifford:1,1",
    "clifford:1,2",
    "clifford:2,1",
    "clifford:2,2",
    "clifford:1,3",
    "clifford:3,3",
    "cartan:3,1,1",
    "cartan:3,2,2",
    "cartan:3,4,4",
    "cartan:4,1,2",
    "cartan:4,2,2",
    "cartan:6,1,1",
    "cartan:6,2,2",
    "euclid-spheres:1",
    "euclid-spheres:2",
    "hyperplanes",
    "product(clifford:1,1,euclid-spheres:2)",
    "product(clifford:1,1,clifford:1,1)",
    "product(hyperplanes,hyperplanes)",
];

pub fn catalog() -> Vec<FoliationModel> {
    CATALOG_IDS.iter().map(|id| id.parse().expect("registry ids parse")).collect()
}

/// The sphere-kind entries of the registry.
pub fn sphere_catalog() -> Vec<FoliationModel> {
    catalog().into_iter().filter(FoliationModel::is_sphere).collect()
}

fn sphere_params(model: &FoliationModel) -> Result<(usize, usize, usize), CatalogError> {
    match model.kind {
        ModelKind::Sphere { g, m1, m2 } => Ok((g, m1, m2)),
        _ => Err(CatalogError::Unsupported(format!("{model} is not a sphere model"))),
    }
}

/// `(phase θ + kπ/g, multiplicity m_k)` for `k = 0..g`.
fn sphere_phases<T: Scalar>(g: usize, m1: usize, m2: usize, theta: T) -> impl Iterator<Item = (T, usize)> {
    let step = T::pi() / T::from_usize_lossy(g);
    (0..g).map(move |k| (theta + step * T::from_usize_lossy(k), sphere_mult(k, m1, m2)))
}

/// Relative leaf volume at a chamber point.
pub fn leaf_volume_profile<T: Scalar>(model: &FoliationModel, point: &[T]) -> Result<T, CatalogError> {
    model.check_point(point)?;
    Ok(model
        .factors()
        .iter()
        .zip(point)
        .map(|(f, &x)| factor_volume(f, x))
        .fold(T::one(), |acc, v| acc * v))
}

/// Volume profile of a one-dimensional factor, without the chamber check.
pub(crate) fn factor_volume<T: Scalar>(factor: &FoliationModel, x: T) -> T {
    match factor.kind {
        ModelKind::Sphere { g, m1, m2 } => sphere_phases(g, m1, m2, x)
            .map(|(phi, m)| phi.sin().powi(m as i32))
            .fold(T::one(), |acc, v| acc * v),
        ModelKind::EuclideanSpheres { n } => x.powi(n as i32),
        _ => T::one(),
    }
}

/// Focal times of the horizontal geodesic leaving `theta` along `+∂θ`,
/// reduced to `(0, π)`.
pub fn focal_data_of_model<T: Scalar>(
    model: &FoliationModel,
    theta: T,
) -> Result<Vec<VanishingConstraint<T>>, CatalogError> {
    let (g, m1, m2) = sphere_params(model)?;
    model.check_point(&[theta])?;
    let mut out: Vec<VanishingConstraint<T>> = sphere_phases(g, m1, m2, theta)
        .map(|(phi, order)| VanishingConstraint { time: rem_euclid(-phi, T::pi()), order })
        .collect();
    out.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("finite times"));
    Ok(out)
}

/// The curvature spectrum of the section's normal directions: `λ = 1` for
/// sphere factors, `λ = 0` for Euclidean ones.
pub fn curvature_spectrum<T: Scalar>(model: &FoliationModel) -> Result<CurvatureSpectrum<T>, JacobiError> {
    let (curved, flat): (Vec<_>, Vec<_>) = model.factors().into_iter().partition(|f| f.is_sphere());
    let dims = |fs: Vec<&FoliationModel>| fs.iter().map(|f| f.leaf_dimension()).sum::<usize>();
    let mut axes = vec![T::zero(); dims(flat)];
    axes.extend(std::iter::repeat_n(T::one(), dims(curved)));
    CurvatureSpectrum::from_axes(&axes)
}

/// Diagonal entries of `S` along the chamber direction of coordinate
/// `coordinate`, in the axis order of [`curvature_spectrum`].
pub fn shape_operator<T: Scalar>(
    model: &FoliationModel,
    point: &[T],
    coordinate: usize,
) -> Result<RiccatiOperator<T>, CatalogError> {
    model.check_point(point)?;
    let factors = model.factors();
    if coordinate >= factors.len() {
        return Err(CatalogError::DimensionMismatch { expected: factors.len(), found: coordinate + 1 });
    }
    let mut flat = Vec::new();
    let mut curved = Vec::new();
    for (i, (f, &x)) in factors.iter().zip(point).enumerate() {
        let on = i == coordinate;
        match f.kind {
            ModelKind::Sphere { g, m1, m2 } => {
                for (phi, m) in sphere_phases(g, m1, m2, x) {
                    let v = if on { phi.cos() / phi.sin() } else { T::zero() };
                    curved.extend(std::iter::repeat_n(v, m));
                }
            }
            ModelKind::EuclideanSpheres { n } => {
                let v = if on { T::one() / x } else { T::zero() };
                flat.extend(std::iter::repeat_n(v, n));
            }
            _ => flat.push(T::zero()),
        }
    }
    flat.extend(curved);
    Ok(RiccatiOperator::diagonal(&flat))
}

/// Walls in chamber coordinates: one flat coordinate per factor. A sphere
/// factor's walls sit at `θ ≡ −kπ/g (mod π)`; distance spheres have the
/// single wall `r = 0`; hyperplanes have none.
pub fn wall_arrangement<T: Scalar>(model: &FoliationModel) -> Result<WallArrangement<T>, ArrangementError> {
    let factors = model.factors();
    let k = factors.len();
    let mut families = Vec::new();
    for (i, f) in factors.iter().enumerate() {
        let mut e = DVector::zeros(k);
        e[i] = T::one();
        match f.kind {
            ModelKind::Sphere { g, m1, m2 } => {
                let step = T::pi() / T::from_usize_lossy(g);
                if g % 2 == 1 || m1 == m2 {
                    families.push(WallFamily::new(e, Offsets::Arith { base: T::zero(), gap: step }, m1));
                } else {
                    let gap = step * T::lit(2.0);
                    families.push(WallFamily::new(e.clone(), Offsets::Arith { base: T::zero(), gap }, m1));
                    families.push(WallFamily::new(e, Offsets::Arith { base: step, gap }, m2));
                }
            }
            ModelKind::EuclideanSpheres { n } => {
                families.push(WallFamily::new(e, Offsets::Finite(vec![T::zero()]), n));
            }
            _ => {}
        }
    }
    WallArrangement::new(Ambient::Flat(k), families)
}
