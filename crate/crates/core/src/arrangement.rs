//! Reflection-wall arrangements on sections.
//!
//! A flat section `R^k` carries affine walls `⟨v, x⟩ = c`; parallel walls come
//! in families whose offsets are either a finite list or an arithmetic
//! progression. A round section `S^k` carries great hyperspheres through the
//! origin (offset 0).

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::num::{rem_euclid, Scalar};

/// Wall identification tolerance, on both normals and offsets.
pub const IDENTIFY_TOLERANCE: f64 = 1e-9;
/// Normals with `|⟨v_i, v_j⟩|` above this are in the same irreducible factor.
pub const COUPLING_TOLERANCE: f64 = 1e-9;
pub const MAX_ROUND_DIM: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArrangementError {
    #[error("closure still growing at {max_walls} walls")]
    ClosureExceeded { max_walls: usize },
    #[error("component spans overlap (|⟨span_i, span_j⟩| = {overlap:e})")]
    SplitFailure { overlap: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPSD { min_eigenvalue: f64 },
    #[error("invalid arrangement: {0}")]
    InvalidArrangement(String),
}

impl ArrangementError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::ClosureExceeded { .. } => "ClosureExceeded",
            Self::SplitFailure { .. } => "SplitFailure",
            Self::NotPSD { .. } => "NotPSD",
            Self::InvalidArrangement(_) => "InvalidArrangement",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ambient {
    Flat(usize),
    Round(usize),
}

impl Ambient {
    pub fn dim(self) -> usize {
        match self {
            Self::Flat(k) | Self::Round(k) => k,
        }
    }

    pub fn is_flat(self) -> bool {
        matches!(self, Self::Flat(_))
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Flat(k) => write!(f, "flat({k})"),
            Self::Round(k) => write!(f, "round({k})"),
        }
    }
}

/// A single wall `⟨normal, x⟩ = offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wall<T: Scalar> {
    pub normal: DVector<T>,
    pub offset: T,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Offsets<T> {
    Finite(Vec<T>),
    /// `{base + n·gap : n ∈ ℤ}`
    Arith { base: T, gap: T },
}

impl<T: Scalar> Offsets<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Arith { .. })
    }

    /// All offsets in `[lo, hi]`, ascending.
    pub fn in_range(&self, lo: T, hi: T) -> Vec<T> {
        match self {
            Self::Finite(v) => {
                let mut out: Vec<T> = v.iter().copied().filter(|&c| c >= lo && c <= hi).collect();
                out.sort_by(|a, b| a.partial_cmp(b).expect("finite offsets"));
                out
            }
            Self::Arith { base, gap } => {
                let mut n = ((lo - *base) / *gap).ceil();
                let mut out = Vec::new();
                loop {
                    let c = *base + n * *gap;
                    if c > hi {
                        break;
                    }
                    out.push(c);
                    n += T::one();
                }
                out
            }
        }
    }
}

/// Parallel walls sharing a unit normal and a multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct WallFamily<T: Scalar> {
    pub normal: DVector<T>,
    pub offsets: Offsets<T>,
    pub multiplicity: usize,
}

impl<T: Scalar> WallFamily<T> {
    pub fn new(normal: DVector<T>, offsets: Offsets<T>, multiplicity: usize) -> Self {
        Self { normal, offsets, multiplicity }
    }

    pub fn walls_in_range(&self, lo: T, hi: T) -> Vec<Wall<T>> {
        self.offsets
            .in_range(lo, hi)
            .into_iter()
            .map(|offset| Wall { normal: self.normal.clone(), offset, multiplicity: self.multiplicity })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WallArrangement<T: Scalar> {
    ambient: Ambient,
    families: Vec<WallFamily<T>>,
}

impl<T: Scalar> WallArrangement<T> {
    /// Validates dimensions, unit normals, positive gaps and the round-case
    /// restrictions.
    pub fn new(ambient: Ambient, families: Vec<WallFamily<T>>) -> Result<Self, ArrangementError> {
        let k = ambient.dim();
        if k == 0 {
            return Err(ArrangementError::InvalidArrangement("ambient dimension must be positive".into()));
        }
        if let Ambient::Round(k) = ambient {
            if k > MAX_ROUND_DIM {
                return Err(ArrangementError::InvalidArrangement(format!(
                    "round sections limited to dimension {MAX_ROUND_DIM}"
                )));
            }
        }
        for (i, f) in families.iter().enumerate() {
            if f.normal.len() != k {
                return Err(ArrangementError::InvalidArrangement(format!(
                    "family {i}: normal has {} components, ambient is {ambient}",
                    f.normal.len()
                )));
            }
            if (f.normal.norm() - T::one()).abs() > T::tol(1e-12) {
                return Err(ArrangementError::InvalidArrangement(format!("family {i}: normal is not unit")));
            }
            if f.multiplicity == 0 {
                return Err(ArrangementError::InvalidArrangement(format!("family {i}: zero multiplicity")));
            }
            match &f.offsets {
                Offsets::Arith { gap, base } => {
                    if !(*gap > T::zero()) || !gap.is_finite() || !base.is_finite() {
                        return Err(ArrangementError::InvalidArrangement(format!(
                            "family {i}: arithmetic gap must be positive"
                        )));
                    }
                    if !ambient.is_flat() {
                        return Err(ArrangementError::InvalidArrangement(format!(
                            "family {i}: round walls pass through the origin"
                        )));
                    }
                }
                Offsets::Finite(v) => {
                    if v.is_empty() {
                        return Err(ArrangementError::InvalidArrangement(format!("family {i}: no offsets")));
                    }
                    if !ambient.is_flat() && v.iter().any(|c| c.abs() > T::tol(IDENTIFY_TOLERANCE)) {
                        return Err(ArrangementError::InvalidArrangement(format!(
                            "family {i}: round walls pass through the origin"
                        )));
                    }
                }
            }
        }
        Ok(Self { ambient, families })
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn families(&self) -> &[WallFamily<T>] {
        &self.families
    }

    /// Walls counted individually, with arithmetic families counted once.
    pub fn family_count(&self) -> usize {
        self.families.len()
    }

    /// Orthogonal direct sum; both factors must have the same ambient kind.
    pub fn direct_sum(&self, other: &Self) -> Result<Self, ArrangementError> {
        let (k1, k2) = (self.ambient.dim(), other.ambient.dim());
        let ambient = match (self.ambient, other.ambient) {
            (Ambient::Flat(_), Ambient::Flat(_)) => Ambient::Flat(k1 + k2),
            (Ambient::Round(_), Ambient::Round(_)) => Ambient::Round(k1 + k2),
            _ => {
                return Err(ArrangementError::InvalidArrangement(
                    "direct sum of flat and round arrangements".into(),
                ))
            }
        };
        let embed = |f: &WallFamily<T>, shift: usize| {
            let mut v = DVector::zeros(k1 + k2);
            v.rows_mut(shift, f.normal.len()).copy_from(&f.normal);
            WallFamily::new(v, f.offsets.clone(), f.multiplicity)
        };
        let families = self
            .families
            .iter()
            .map(|f| embed(f, 0))
            .chain(other.families.iter().map(|f| embed(f, k1)))
            .collect();
        Self::new(ambient, families)
    }
}

/// `v' − 2⟨v', v⟩ v`: the image of the normal `v'` under reflection in the
/// wall with normal `v`.
pub fn reflect_normal<T: Scalar>(v: &DVector<T>, v_prime: &DVector<T>) -> DVector<T> {
    v_prime - v * (T::lit(2.0) * v_prime.dot(v))
}

/// Offset set of one `(normal, multiplicity)` class during closure: finitely
/// many isolated offsets plus an optional periodic part `residues + gap·ℤ`,
/// kept with the minimal period.
#[derive(Debug, Clone)]
struct OffsetSet<T> {
    points: Vec<T>,
    periodic: Option<(T, Vec<T>)>,
}

fn close_enough<T: Scalar>(a: T, b: T) -> bool {
    (a - b).abs() <= T::tol(IDENTIFY_TOLERANCE) * T::one().max(a.abs()).max(b.abs())
}

fn residue_eq<T: Scalar>(a: T, b: T, gap: T) -> bool {
    let d = rem_euclid(a - b, gap);
    d.min(gap - d) <= T::tol(IDENTIFY_TOLERANCE)
}

fn dedup_by<T: Scalar>(xs: impl IntoIterator<Item = T>, eq: impl Fn(T, T) -> bool) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for x in xs {
        if !out.iter().any(|&y| eq(x, y)) {
            out.push(x);
        }
    }
    out
}

fn sort_reals<T: Scalar>(xs: &mut [T]) {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite offsets"));
}

/// Greatest common divisor of two positive reals, if they are commensurable.
fn real_gcd<T: Scalar>(a: T, b: T) -> Option<T> {
    let scale = a.max(b);
    let (mut x, mut y) = (scale, a.min(b));
    for _ in 0..64 {
        if y <= T::tol(IDENTIFY_TOLERANCE) * scale {
            return Some(x);
        }
        let r = x - (x / y).round() * y;
        (x, y) = (y, r.abs());
    }
    None
}

impl<T: Scalar> OffsetSet<T> {
    fn from_offsets(offsets: &Offsets<T>) -> Self {
        let mut set = match offsets {
            Offsets::Finite(v) => Self { points: v.clone(), periodic: None },
            Offsets::Arith { base, gap } => Self { points: Vec::new(), periodic: Some((*gap, vec![*base])) },
        };
        set.canonicalize();
        set
    }

    fn size(&self) -> usize {
        self.points.len() + self.periodic.as_ref().map_or(0, |(_, r)| r.len())
    }

    fn representatives(&self) -> Vec<T> {
        let mut out = self.points.clone();
        if let Some((_, r)) = &self.periodic {
            out.extend(r.iter().copied());
        }
        out
    }

    fn canonicalize(&mut self) {
        if let Some((gap, residues)) = &mut self.periodic {
            let g = *gap;
            let mut r = dedup_by(residues.iter().map(|&x| rem_euclid(x, g)), |a, b| residue_eq(a, b, g));
            let n = r.len();
            let mut period = g;
            for q in (2..=n).rev().filter(|q| n % q == 0) {
                let shift = g / T::from_usize_lossy(q);
                if r.iter().all(|&x| r.iter().any(|&y| residue_eq(x + shift, y, g))) {
                    period = shift;
                    break;
                }
            }
            if period < g {
                r = dedup_by(r.iter().map(|&x| rem_euclid(x, period)), |a, b| residue_eq(a, b, period));
            }
            sort_reals(&mut r);
            *gap = period;
            *residues = r;
            let (g, r) = (*gap, residues.clone());
            self.points.retain(|&c| !r.iter().any(|&x| residue_eq(c, x, g)));
        }
        self.points = dedup_by(self.points.iter().copied(), close_enough);
        sort_reals(&mut self.points);
    }

    fn same_as(&self, other: &Self) -> bool {
        let points = self.points.len() == other.points.len()
            && self.points.iter().all(|&p| other.points.iter().any(|&q| close_enough(p, q)));
        let periodic = match (&self.periodic, &other.periodic) {
            (None, None) => true,
            (Some((g, r)), Some((h, s))) => {
                close_enough(*g, *h)
                    && r.len() == s.len()
                    && r.iter().all(|&x| s.iter().any(|&y| residue_eq(x, y, *g)))
            }
            _ => false,
        };
        points && periodic
    }

    fn negate(&self) -> Self {
        let mut out = Self {
            points: self.points.iter().map(|&c| -c).collect(),
            periodic: self.periodic.as_ref().map(|(g, r)| (*g, r.iter().map(|&c| -c).collect())),
        };
        out.canonicalize();
        out
    }

    fn checked(self, max_walls: usize) -> Result<Self, ArrangementError> {
        if self.size() > max_walls {
            Err(ArrangementError::ClosureExceeded { max_walls })
        } else {
            Ok(self)
        }
    }

    fn union(&self, other: &Self, max_walls: usize) -> Result<Self, ArrangementError> {
        let exceeded = ArrangementError::ClosureExceeded { max_walls };
        let periodic = match (&self.periodic, &other.periodic) {
            (None, None) => None,
            (Some(p), None) | (None, Some(p)) => Some(p.clone()),
            (Some((g, r)), Some((h, s))) => {
                let d = real_gcd(*g, *h).ok_or(exceeded.clone())?;
                let lcm = *g / d * *h;
                let mut residues = Vec::new();
                for (gap, rs) in [(*g, r), (*h, s)] {
                    let copies = (lcm / gap).round().to_f64_lossy() as usize;
                    if copies * rs.len() > max_walls {
                        return Err(exceeded);
                    }
                    for &x in rs {
                        residues.extend((0..copies).map(|n| x + gap * T::from_usize_lossy(n)));
                    }
                }
                Some((lcm, residues))
            }
        };
        let mut points = self.points.clone();
        points.extend(other.points.iter().copied());
        let mut out = Self { points, periodic };
        out.canonicalize();
        out.checked(max_walls)
    }

    /// Smallest superset invariant under translation by `shift`.
    fn translation_closure(&self, shift: T, max_walls: usize) -> Result<Self, ArrangementError> {
        let gap = match &self.periodic {
            None => shift,
            Some((g, _)) => real_gcd(*g, shift).ok_or(ArrangementError::ClosureExceeded { max_walls })?,
        };
        let mut out = Self { points: Vec::new(), periodic: Some((gap, self.representatives())) };
        out.canonicalize();
        out.checked(max_walls)
    }

    /// `{d − 2κc : d ∈ self, c ∈ mirror}`
    fn reflected(&self, mirror: &Self, kappa: T, max_walls: usize) -> Result<Self, ArrangementError> {
        let two_k = T::lit(2.0) * kappa;
        let gap = match (&self.periodic, &mirror.periodic) {
            (None, None) => None,
            (Some((g, _)), None) => Some(*g),
            (None, Some((h, _))) => Some(two_k.abs() * *h),
            (Some((g, _)), Some((h, _))) => Some(
                real_gcd(*g, two_k.abs() * *h).ok_or(ArrangementError::ClosureExceeded { max_walls })?,
            ),
        };
        let image = |xs: &[T], cs: &[T]| -> Vec<T> {
            xs.iter().flat_map(|&d| cs.iter().map(move |&c| d - two_k * c)).collect()
        };
        let own_res = self.periodic.as_ref().map_or(Vec::new(), |(_, r)| r.clone());
        let mirror_res = mirror.periodic.as_ref().map_or(Vec::new(), |(_, r)| r.clone());
        let mut periodic_part = image(&self.representatives(), &mirror_res);
        periodic_part.extend(image(&own_res, &mirror.points));
        let mut out = Self {
            points: image(&self.points, &mirror.points),
            periodic: gap.map(|g| (g, periodic_part)),
        };
        out.canonicalize();
        out.checked(max_walls)
    }

    /// Union in place; `Ok(true)` when the set grew.
    fn absorb(&mut self, other: &Self, max_walls: usize) -> Result<bool, ArrangementError> {
        let merged = self.union(other, max_walls)?;
        let changed = !merged.same_as(self);
        *self = merged;
        Ok(changed)
    }

    fn into_offsets(self) -> Vec<Offsets<T>> {
        let mut out = Vec::new();
        if !self.points.is_empty() {
            out.push(Offsets::Finite(self.points));
        }
        if let Some((gap, residues)) = self.periodic {
            out.extend(residues.into_iter().map(|base| Offsets::Arith { base, gap }));
        }
        out
    }
}

/// Flips `v` so its first non-negligible component is positive; reports
/// whether it was flipped.
fn canonical_sign<T: Scalar>(v: &DVector<T>) -> (DVector<T>, bool) {
    let lead = v.iter().find(|x| x.abs() > T::tol(IDENTIFY_TOLERANCE)).copied().unwrap_or(T::one());
    if lead < T::zero() {
        (-v, true)
    } else {
        (v.clone(), false)
    }
}

struct ClassKey<T: Scalar> {
    normal: DVector<T>,
    multiplicity: usize,
}

type Classes<T> = Vec<(ClassKey<T>, OffsetSet<T>)>;

fn parallel<T: Scalar>(u: &DVector<T>, v: &DVector<T>) -> bool {
    u.dot(v) >= T::one() - T::tol(IDENTIFY_TOLERANCE)
}

fn find_class<T: Scalar>(classes: &Classes<T>, normal: &DVector<T>, mult: usize) -> Option<usize> {
    classes
        .iter()
        .position(|(k, _)| k.multiplicity == mult && parallel(&k.normal, normal))
}

fn merge_into<T: Scalar>(
    classes: &mut Classes<T>,
    normal: DVector<T>,
    mult: usize,
    set: OffsetSet<T>,
    max_walls: usize,
) -> Result<bool, ArrangementError> {
    match find_class(classes, &normal, mult) {
        Some(i) => classes[i].1.absorb(&set, max_walls),
        None => {
            classes.push((ClassKey { normal: normal.normalize(), multiplicity: mult }, set));
            Ok(true)
        }
    }
}

/// Two parallel mirrors at offsets `c, c'` compose to a translation by
/// `2(c − c')`; returns the generator of those translations along `normal`.
fn translation_step<T: Scalar>(classes: &Classes<T>, normal: &DVector<T>, max_walls: usize) -> Result<Option<T>, ArrangementError> {
    let mut reps = Vec::new();
    let mut shifts = Vec::new();
    for (_, set) in classes.iter().filter(|(k, _)| parallel(&k.normal, normal)) {
        reps.extend(set.representatives());
        if let Some((g, _)) = &set.periodic {
            shifts.push(T::lit(2.0) * *g);
        }
    }
    if let Some(&first) = reps.first() {
        shifts.extend(reps.iter().map(|&m| T::lit(2.0) * (m - first).abs()));
    }
    let mut step: Option<T> = None;
    for s in shifts.into_iter().filter(|&s| s > T::tol(IDENTIFY_TOLERANCE)) {
        step = Some(match step {
            None => s,
            Some(g) => real_gcd(g, s).ok_or(ArrangementError::ClosureExceeded { max_walls })?,
        });
    }
    Ok(step)
}

/// Reflects every wall through every wall until nothing new appears.
pub fn generate_closure<T: Scalar>(
    arrangement: &WallArrangement<T>,
    max_walls: usize,
) -> Result<WallArrangement<T>, ArrangementError> {
    let mut classes: Classes<T> = Vec::new();
    for f in &arrangement.families {
        let (normal, flipped) = canonical_sign(&f.normal);
        let mut set = OffsetSet::from_offsets(&f.offsets);
        if flipped {
            set = set.negate();
        }
        merge_into(&mut classes, normal, f.multiplicity, set, max_walls)?;
    }
    let total = |classes: &Classes<T>| classes.iter().map(|(_, s)| s.size()).sum::<usize>();

    loop {
        if total(&classes) > max_walls {
            return Err(ArrangementError::ClosureExceeded { max_walls });
        }
        let mut changed = false;
        for a in 0..classes.len() {
            if let Some(step) = translation_step(&classes, &classes[a].0.normal, max_walls)? {
                let closed = classes[a].1.translation_closure(step, max_walls)?;
                if !closed.same_as(&classes[a].1) {
                    classes[a].1 = closed;
                    changed = true;
                }
            }
        }
        let mut a = 0;
        while a < classes.len() {
            let mut b = 0;
            while b < classes.len() {
                let (u, v) = (&classes[a].0.normal, &classes[b].0.normal);
                let kappa = u.dot(v);
                if kappa.abs() > T::tol(1e-12) {
                    let (normal, flipped) = canonical_sign(&reflect_normal(v, u));
                    let mut image = classes[a].1.reflected(&classes[b].1, kappa, max_walls)?;
                    if flipped {
                        image = image.negate();
                    }
                    let mult = classes[a].0.multiplicity;
                    changed |= merge_into(&mut classes, normal, mult, image, max_walls)?;
                    if total(&classes) > max_walls {
                        return Err(ArrangementError::ClosureExceeded { max_walls });
                    }
                }
                b += 1;
            }
            a += 1;
        }
        if !changed {
            break;
        }
    }

    let families = classes
        .into_iter()
        .flat_map(|(key, set)| {
            set.into_offsets()
                .into_iter()
                .map(move |o| WallFamily::new(key.normal.clone(), o, key.multiplicity))
        })
        .collect();
    WallArrangement::new(arrangement.ambient, families)
}

/// One irreducible factor.
#[derive(Debug, Clone)]
pub struct Component<T: Scalar> {
    /// Indices into the arrangement's families.
    pub families: Vec<usize>,
    /// Orthonormal basis (columns) of the span of the factor's normals.
    pub span: DMatrix<T>,
}

/// Orthonormal basis of the column space of `vectors` (columns).
fn column_span<T: Scalar>(vectors: &DMatrix<T>) -> DMatrix<T> {
    let gram = vectors * vectors.transpose();
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().fold(T::zero(), |m, &x| m.max(x));
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > T::tol(COUPLING_TOLERANCE) * top.max(T::one()))
        .collect();
    DMatrix::from_fn(vectors.nrows(), keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
}

/// Orthonormal basis of the orthogonal complement of the columns of `vectors`.
fn null_span<T: Scalar>(vectors: &DMatrix<T>) -> DMatrix<T> {
    let k = vectors.nrows();
    if vectors.ncols() == 0 {
        return DMatrix::identity(k, k);
    }
    let eig = SymmetricEigen::new(vectors * vectors.transpose());
    let keep: Vec<usize> = (0..k)
        .filter(|&i| eig.eigenvalues[i] <= T::tol(COUPLING_TOLERANCE))
        .collect();
    DMatrix::from_fn(k, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])])
}

fn stack_normals<T: Scalar>(k: usize, normals: &[&DVector<T>]) -> DMatrix<T> {
    DMatrix::from_fn(k, normals.len(), |r, c| normals[c][r])
}

/// Irreducible factors: connected components of the non-orthogonality graph
/// on normals.
pub fn split_components<T: Scalar>(
    arrangement: &WallArrangement<T>,
) -> Result<Vec<Component<T>>, ArrangementError> {
    let fams = &arrangement.families;
    let n = fams.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if fams[i].normal.dot(&fams[j].normal).abs() > T::tol(COUPLING_TOLERANCE) {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        match groups.iter_mut().find(|(g, _)| *g == r) {
            Some((_, members)) => members.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    let k = arrangement.ambient.dim();
    let components: Vec<Component<T>> = groups
        .into_iter()
        .map(|(_, members)| {
            let normals: Vec<&DVector<T>> = members.iter().map(|&i| &fams[i].normal).collect();
            let span = column_span(&stack_normals(k, &normals));
            Component { families: members, span }
        })
        .collect();
    for i in 0..components.len() {
        for j in i + 1..components.len() {
            let overlap = (components[i].span.transpose() * &components[j].span).amax();
            if overlap > T::tol(COUPLING_TOLERANCE) {
                return Err(ArrangementError::SplitFailure { overlap: overlap.to_f64_lossy() });
            }
        }
    }
    Ok(components)
}

/// Orthonormal basis (columns) of the directions crossing only finitely many
/// walls: the complement of the normals of infinite families.
pub fn flat_distribution<T: Scalar>(arrangement: &WallArrangement<T>) -> Result<DMatrix<T>, ArrangementError> {
    if !arrangement.ambient.is_flat() {
        return Err(ArrangementError::InvalidArrangement("flat distribution needs a flat section".into()));
    }
    let normals: Vec<&DVector<T>> = arrangement
        .families
        .iter()
        .filter(|f| f.offsets.is_infinite())
        .map(|f| &f.normal)
        .collect();
    Ok(null_span(&stack_normals(arrangement.ambient.dim(), &normals)))
}

/// Whether the chambers are compact: every family is infinite and the flat
/// distribution is trivial.
pub fn chamber_compact<T: Scalar>(arrangement: &WallArrangement<T>) -> Result<bool, ArrangementError> {
    let d = flat_distribution(arrangement)?;
    Ok(d.ncols() == 0 && arrangement.families.iter().all(|f| f.offsets.is_infinite()))
}

/// For a positive semidefinite operator, a vanishing trace forces the
/// operator to vanish. Returns whether that holds numerically.
pub fn psd_trace_zero_check<T: Scalar>(matrix: &DMatrix<T>) -> Result<bool, ArrangementError> {
    if !matrix.is_square() {
        return Err(ArrangementError::InvalidArrangement("matrix must be square".into()));
    }
    let sym = (matrix + matrix.transpose()) * T::lit(0.5);
    let eig = SymmetricEigen::new(sym.clone());
    let min = eig.eigenvalues.iter().fold(T::max_value().unwrap_or(T::one()), |m, &x| m.min(x));
    if matrix.nrows() > 0 && min < -T::tol(1e-10) {
        return Err(ArrangementError::NotPSD { min_eigenvalue: min.to_f64_lossy() });
    }
    Ok(sym.trace() > T::tol(1e-9) || sym.norm() <= T::tol(1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_3, PI};

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn angle(a: f64) -> DVector<f64> {
        v(&[a.cos(), a.sin()])
    }

    fn fin(normal: DVector<f64>) -> WallFamily<f64> {
        WallFamily::new(normal, Offsets::Finite(vec![0.0]), 1)
    }

    fn arith(normal: DVector<f64>, base: f64, gap: f64) -> WallFamily<f64> {
        WallFamily::new(normal, Offsets::Arith { base, gap }, 1)
    }

    /// Independent brute force: iterate reflections on individual walls in a window.
    fn brute_round_normals(seeds: &[DVector<f64>], cap: usize) -> Option<usize> {
        let mut normals: Vec<DVector<f64>> = seeds.to_vec();
        loop {
            let mut fresh = Vec::new();
            for a in &normals {
                for b in &normals {
                    let img = a - b * (2.0 * a.dot(b));
                    let known = normals.iter().chain(&fresh).any(|n: &DVector<f64>| (n.dot(&img).abs() - 1.0).abs() < 1e-9);
                    if !known {
                        fresh.push(img);
                    }
                }
            }
            if fresh.is_empty() {
                return Some(normals.len());
            }
            normals.extend(fresh);
            if normals.len() > cap {
                return None;
            }
        }
    }

    #[test]
    fn reflect_normal_examples() {
        let e1 = v(&[1.0, 0.0]);
        let e2 = v(&[0.0, 1.0]);
        assert_eq!(reflect_normal(&e1, &e1), -&e1);
        assert_eq!(reflect_normal(&e1, &e2), e2);
        let d = v(&[1.0, 1.0]) / 2f64.sqrt();
        let r = reflect_normal(&d, &e1);
        assert!((r - v(&[0.0, -1.0])).norm() < 1e-15);
    }

    #[test]
    fn dihedral_closure() {
        let a = WallArrangement::new(Ambient::Round(2), vec![fin(angle(0.0)), fin(angle(FRAC_PI_3))]).unwrap();
        let c = generate_closure(&a, 100).unwrap();
        assert_eq!(c.family_count(), 3);
        assert_eq!(brute_round_normals(&[angle(0.0), angle(FRAC_PI_3)], 100), Some(3));
        for target in [0.0, FRAC_PI_3, 2.0 * FRAC_PI_3] {
            assert!(c.families().iter().any(|f| (f.normal.dot(&angle(target)).abs() - 1.0).abs() < 1e-9));
        }
    }

    #[test]
    fn coxeter_closures_match_brute_force() {
        for (p, expected) in [(2usize, 2usize), (3, 3), (4, 4), (6, 6)] {
            let seeds = [angle(0.0), angle(PI / p as f64)];
            let a = WallArrangement::new(Ambient::Round(2), seeds.iter().cloned().map(fin).collect()).unwrap();
            let c = generate_closure(&a, 100).unwrap();
            assert_eq!(c.family_count(), expected);
            assert_eq!(brute_round_normals(&seeds, 100), Some(expected));
        }
        // B3 has 9 reflections
        let s = 0.5f64.sqrt();
        let seeds = [v(&[1.0, 0.0, 0.0]), v(&[-s, s, 0.0]), v(&[0.0, -s, s])];
        let a = WallArrangement::new(Ambient::Round(3), seeds.iter().cloned().map(fin).collect()).unwrap();
        assert_eq!(generate_closure(&a, 100).unwrap().family_count(), 9);
        assert_eq!(brute_round_normals(&seeds, 100), Some(9));
    }

    #[test]
    fn orthogonal_flat_already_closed() {
        let a = WallArrangement::new(Ambient::Flat(2), vec![fin(v(&[1.0, 0.0])), fin(v(&[0.0, 1.0]))]).unwrap();
        let c = generate_closure(&a, 10).unwrap();
        assert_eq!(c.families(), a.families());
    }

    #[test]
    fn incommensurable_angle_exceeds() {
        let a = WallArrangement::new(Ambient::Round(2), vec![fin(angle(0.0)), fin(angle(1.0))]).unwrap();
        assert_eq!(generate_closure(&a, 500), Err(ArrangementError::ClosureExceeded { max_walls: 500 }));
    }

    #[test]
    fn parallel_finite_walls_become_periodic() {
        let a = WallArrangement::new(
            Ambient::Flat(1),
            vec![WallFamily::new(v(&[1.0]), Offsets::Finite(vec![0.0, 1.0]), 1)],
        )
        .unwrap();
        let c = generate_closure(&a, 50).unwrap();
        // {0, 1} + 2ℤ = ℤ
        assert_eq!(c.family_count(), 1);
        assert!(matches!(c.families()[0].offsets, Offsets::Arith { gap, .. } if (gap - 1.0).abs() < 1e-12));
        assert!(chamber_compact(&c).unwrap());
    }

    #[test]
    fn affine_a2_closure() {
        // A2 normals with integer offsets: closed, 3 infinite families.
        let fams: Vec<_> = [0.0, FRAC_PI_3, 2.0 * FRAC_PI_3].iter().map(|&t| arith(angle(t), 0.0, 1.0)).collect();
        let a = WallArrangement::new(Ambient::Flat(2), fams).unwrap();
        let c = generate_closure(&a, 100).unwrap();
        assert_eq!(c.family_count(), 3);
        assert!(chamber_compact(&c).unwrap());
        let again = generate_closure(&c, 100).unwrap();
        assert_eq!(again.family_count(), c.family_count());
    }

    #[test]
    fn mixed_gap_merge() {
        // reflecting x=0,x=1/2 family through itself gives gap 1/2... via the rectangle
        let a = WallArrangement::new(
            Ambient::Flat(2),
            vec![arith(v(&[1.0, 0.0]), 0.0, 1.0), arith(v(&[1.0, 0.0]), 0.5, 1.0), arith(v(&[0.0, 1.0]), 0.0, 2.0)],
        )
        .unwrap();
        let c = generate_closure(&a, 100).unwrap();
        let along_x: Vec<_> = c.families().iter().filter(|f| f.normal[0] > 0.5).collect();
        let window: Vec<f64> = along_x.iter().flat_map(|f| f.offsets.in_range(-1.0, 1.0)).collect();
        assert_eq!(window.len(), 5);
    }

    #[test]
    fn split_examples() {
        let e = |i: usize, k: usize| {
            let mut x = DVector::zeros(k);
            x[i] = 1.0;
            x
        };
        let a = WallArrangement::new(Ambient::Flat(2), vec![fin(e(0, 2)), fin(e(1, 2))]).unwrap();
        assert_eq!(split_components(&a).unwrap().len(), 2);
        let a2 = WallArrangement::new(
            Ambient::Round(2),
            vec![fin(v(&[1.0, 0.0])), fin(v(&[-0.5, 3f64.sqrt() / 2.0])), fin(v(&[-0.5, -3f64.sqrt() / 2.0]))],
        )
        .unwrap();
        let comps = split_components(&a2).unwrap();
        assert_eq!(comps.len(), 1);
        assert_eq!(comps[0].span.ncols(), 2);
        let a3 = WallArrangement::new(Ambient::Flat(3), (0..3).map(|i| fin(e(i, 3))).collect()).unwrap();
        assert_eq!(split_components(&a3).unwrap().len(), 3);
    }

    #[test]
    fn direct_sum_splits_into_summands() {
        let a2 = WallArrangement::new(
            Ambient::Flat(2),
            [0.0, FRAC_PI_3, 2.0 * FRAC_PI_3].iter().map(|&t| arith(angle(t), 0.0, 1.0)).collect(),
        )
        .unwrap();
        let a1 = WallArrangement::new(Ambient::Flat(1), vec![arith(v(&[1.0]), 0.0, 1.0)]).unwrap();
        let sum = a2.direct_sum(&a1).unwrap();
        let comps = split_components(&sum).unwrap();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0].families, vec![0, 1, 2]);
        assert_eq!(comps[1].families, vec![3]);
        assert_eq!(comps[0].span.ncols(), 2);
    }

    #[test]
    fn flat_distribution_examples() {
        let e1 = v(&[1.0, 0.0]);
        let e2 = v(&[0.0, 1.0]);
        let one = WallArrangement::new(Ambient::Flat(2), vec![arith(e1.clone(), 0.0, 1.0)]).unwrap();
        let d = flat_distribution(&one).unwrap();
        assert_eq!(d.ncols(), 1);
        assert!((d.column(0).dot(&e2).abs() - 1.0).abs() < 1e-12);
        assert!(!chamber_compact(&one).unwrap());
        let two = WallArrangement::new(Ambient::Flat(2), vec![arith(e1, 0.0, 1.0), arith(e2, 0.0, 1.0)]).unwrap();
        assert_eq!(flat_distribution(&two).unwrap().ncols(), 0);
        assert!(chamber_compact(&two).unwrap());
        let none = WallArrangement::<f64>::new(Ambient::Flat(3), vec![]).unwrap();
        assert_eq!(flat_distribution(&none).unwrap().ncols(), 3);
        assert!(!chamber_compact(&none).unwrap());
        let line = WallArrangement::new(Ambient::Flat(1), vec![arith(v(&[1.0]), 0.0, 1.0)]).unwrap();
        assert!(chamber_compact(&line).unwrap());
    }

    #[test]
    fn psd_examples() {
        assert!(psd_trace_zero_check(&DMatrix::<f64>::zeros(3, 3)).unwrap());
        assert!(psd_trace_zero_check(&DMatrix::from_diagonal(&v(&[1.0, 0.0]))).unwrap());
        assert!(matches!(
            psd_trace_zero_check(&DMatrix::from_diagonal(&v(&[1.0, -1.0]))),
            Err(ArrangementError::NotPSD { .. })
        ));
    }

    #[test]
    fn invalid_inputs() {
        assert!(WallArrangement::new(Ambient::Round(4), vec![fin(v(&[1.0, 0.0, 0.0, 0.0]))]).is_err());
        assert!(WallArrangement::new(Ambient::Round(2), vec![arith(v(&[1.0, 0.0]), 0.0, 1.0)]).is_err());
        assert!(WallArrangement::new(Ambient::Flat(2), vec![arith(v(&[1.0, 0.0]), 0.0, 0.0)]).is_err());
        assert!(WallArrangement::new(Ambient::Flat(2), vec![fin(v(&[1.0, 1.0]))]).is_err());
    }
}
