use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("input: {0}")]
    Input(String),
    #[error("{module}: {code}: {message}")]
    Numerical { module: &'static str, code: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Input(_) => 3,
            Self::Numerical { .. } => 4,
        }
    }

    pub fn numerical(module: &'static str, code: &'static str, message: impl Into<String>) -> Self {
        Self::Numerical { module, code, message: message.into() }
    }
}

impl From<polarflow::Error> for CliError {
    fn from(e: polarflow::Error) -> Self {
        Self::Numerical { module: e.module(), code: e.code(), message: e.to_string() }
    }
}

macro_rules! module_error {
    ($($ty:ty),*) => {$(
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                polarflow::Error::from(e).into()
            }
        }
    )*};
}

module_error!(
    polarflow::geodesic_jacobi::JacobiError,
    polarflow::riccati::RiccatiError,
    polarflow::trig_reconstruct::ReconstructError,
    polarflow::arrangement::ArrangementError,
    polarflow::mcf::McfError
);

/// Model ids are command-line input, so a malformed id is a usage error;
/// other catalog failures (points outside the chamber) are numerical.
impl From<polarflow::catalog::CatalogError> for CliError {
    fn from(e: polarflow::catalog::CatalogError) -> Self {
        use polarflow::catalog::CatalogError as C;
        match e {
            C::InvalidG(_) | C::InvalidMultiplicity(_) | C::InvalidModelId(_) => Self::Usage(e.to_string()),
            other => polarflow::Error::from(other).into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Input(e.to_string())
    }
}
