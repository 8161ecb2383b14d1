use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {0} lies outside the closed unit disk")]
    Domain(Complex64),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("automorphism pole guard tripped at z = {0}")]
    Pole(Complex64),

    #[error("critical point of h at z = {0}: sense-preservation undecidable")]
    CriticalPoint(Complex64),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("operation not supported for {0} regions")]
    UnsupportedRegion(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "quadrature did not converge: cap hit at q={radial_nodes}, angular={angular_nodes}; \
         coarse={coarse}, fine={fine}, error estimate {error_estimate:e} > {limit:e}"
    )]
    NonConvergence {
        radial_nodes: usize,
        angular_nodes: usize,
        coarse: f64,
        fine: f64,
        error_estimate: f64,
        limit: f64,
    },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn ensure_finite(z: Complex64, what: &'static str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}
