use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("closure violation: residual {residual:e} exceeds {tol:e}")]
    ClosureViolation { residual: f64, tol: f64 },
    #[error("invalid tangent: residual {residual:e} exceeds {tol:e}")]
    InvalidTangent { residual: f64, tol: f64 },
    #[error("not reductive: {0}")]
    NotReductive(String),
    #[error("finite-difference stencil leaves the chart: {0}")]
    Stencil(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("arrows are not composable: source {source_point:?} != target {target_point:?}")]
    NotComposable {
        source_point: Vec<f64>,
        target_point: Vec<f64>,
    },
    #[error("degenerate form: {0}")]
    DegenerateForm(String),
    #[error("refused construction: {0}")]
    RefusedConstruction(String),
    #[error("catalog: {0}")]
    Catalog(String),
    #[error("configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
