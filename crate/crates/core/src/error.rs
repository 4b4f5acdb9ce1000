use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("derivative order {order} exceeds max_order {max_order}")]
    OrderOutOfRange { order: usize, max_order: usize },

    #[error("non-finite or out-of-range parameter: {0}")]
    BadParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: last bracket width {bracket:.3e} after {blocks} blocks")]
    QuadratureNonConvergence { bracket: f64, blocks: usize },

    #[error("rho {rho:.6e} outside table range [{min:.6e}, {max:.6e}]")]
    TableRange { rho: f64, min: f64, max: f64 },

    #[error("inverse argument {requested:.6e} beyond achievable image (finite limit {limit:.6e})")]
    InverseOutOfRange { requested: f64, limit: f64 },

    #[error("target in contact with a curve (distance {dist:.3e})")]
    Contact { dist: f64 },

    #[error("curve is degenerate: {0}")]
    DegenerateCurve(String),

    #[error("self-intersection detected on patch {patch_id}")]
    SelfIntersection { patch_id: usize },

    #[error("inter-patch contact: min distance {dist:.3e} below threshold {threshold:.3e}")]
    PatchContact { dist: f64, threshold: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("expression error: {0}")]
    Expr(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
