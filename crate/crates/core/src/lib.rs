//! Numerics for polar and isoparametric foliations: closed-form Jacobi fields
//! and focal indices, Riccati comparison, reconstruction of leaf-volume
//! densities from focal data, reflection-wall arrangements, and the reduced
//! mean curvature flow on the orbit space.
//!
//! The numeric core is generic over [`num::Scalar`] (`f32` or `f64`). The
//! aliases below fix the scalar to `f64`.

pub mod arrangement;
pub mod catalog;
pub mod geodesic_jacobi;
pub mod mcf;
pub mod num;
pub mod riccati;
pub mod trig_reconstruct;

use thiserror::Error;

pub use catalog::FoliationModel;
pub use num::Scalar;

pub type CurvatureSpectrum = geodesic_jacobi::CurvatureSpectrum<f64>;
pub type RiccatiOperator = geodesic_jacobi::RiccatiOperator<f64>;
pub type JacobiFamily = geodesic_jacobi::JacobiFamily<f64>;
pub type Interval = geodesic_jacobi::Interval<f64>;
pub type FocalDatum = geodesic_jacobi::FocalDatum<f64>;
pub type RiccatiProblem = riccati::RiccatiProblem<f64>;
pub type RiccatiTrajectory = riccati::RiccatiTrajectory<f64>;
pub type ComparisonReport = riccati::ComparisonReport<f64>;
pub type VanishingConstraint = trig_reconstruct::VanishingConstraint<f64>;
pub type TrigDensity = trig_reconstruct::TrigDensity<f64>;
pub type WallFamily = arrangement::WallFamily<f64>;
pub type WallArrangement = arrangement::WallArrangement<f64>;
pub type FlowTrajectory = mcf::FlowTrajectory<f64>;
pub type FlowState = mcf::FlowState<f64>;

/// Any error raised by the library, tagged with its module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Jacobi(#[from] geodesic_jacobi::JacobiError),
    #[error(transparent)]
    Riccati(#[from] riccati::RiccatiError),
    #[error(transparent)]
    Reconstruct(#[from] trig_reconstruct::ReconstructError),
    #[error(transparent)]
    Arrangement(#[from] arrangement::ArrangementError),
    #[error(transparent)]
    Catalog(#[from] catalog::CatalogError),
    #[error(transparent)]
    Mcf(#[from] mcf::McfError),
}

impl Error {
    pub fn module(&self) -> &'static str {
        match self {
            Self::Jacobi(_) => "geodesic_jacobi",
            Self::Riccati(_) => "riccati",
            Self::Reconstruct(_) => "trig_reconstruct",
            Self::Arrangement(_) => "arrangement",
            Self::Catalog(_) => "catalog",
            Self::Mcf(_) => "mcf",
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Self::Jacobi(e) => e.code(),
            Self::Riccati(e) => e.code(),
            Self::Reconstruct(e) => e.code(),
            Self::Arrangement(e) => e.code(),
            Self::Catalog(e) => e.code(),
            Self::Mcf(e) => e.code(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
