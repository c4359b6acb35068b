use thiserror::Error;

/// Errors shared by all numeric modules.
#[derive(Debug, Error)]
pub enum CesError {
    /// Operands have incompatible shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A required inverse failed the conditioning guard. Explicit failure
    /// beats silent garbage, so near-singular inputs are rejected rather
    /// than inverted.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// A parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Adaptive quadrature failed to converge to the requested tolerance.
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),
}
