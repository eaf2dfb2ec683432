//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary: ‖g†g − I‖ = {defect:.3e}")]
    NotUnitary { defect: f64 },

    #[error("group closure exceeded max_order = {max_order} (infinite or mis-specified group)")]
    OrderExceeded { max_order: usize },

    #[error("character data does not define a projection: ‖P²−P‖ = {defect:.3e}")]
    NotIdempotent { defect: f64 },

    #[error("operator is not a projection on the reliable block: defect {defect:.3e}")]
    NotProjection { defect: f64 },

    #[error("no clean spectral gap: largest kernel candidate {below:.3e}, next singular value {above:.3e}")]
    GapFailure { below: f64, above: f64 },

    #[error("index differs across truncation levels: {first} at K={k_first}, {second} at K={k_second}")]
    UnstableIndex {
        first: i64,
        second: i64,
        k_first: usize,
        k_second: usize,
    },

    #[error("symbol is not elliptic: certificate {certificate:.3e} at sample point {point:?}")]
    NotElliptic { certificate: f64, point: Vec<f64> },

    #[error("second factor is not equivariant: intertwining residual {residual:.3e}")]
    NotEquivariant { residual: f64 },

    #[error("ellipticity lost along homotopy at t = {t:.4}: certificate {certificate:.3e}")]
    EllipticityLost { t: f64, certificate: f64 },

    #[error("derivative callbacks disagree with finite differences: relative error {rel_err:.3e} in direction {direction}")]
    DerivativeMismatch { rel_err: f64, direction: usize },

    #[error("Chern form does not vanish beyond r1: leak {leak:.3e} at |z| = {radius:.3}")]
    SupportLeak { leak: f64, radius: f64 },

    #[error("quadrature unconverged: doubling nodes moved the value by {shift:.3e} (relative)")]
    QuadratureUnconverged { shift: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{0}")]
    Invalid(String),
}
