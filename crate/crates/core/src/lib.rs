//! Hyperstreamline visualization of nematic alignment tensor fields.
//!
//! The pipeline has three stages: identify a topological template of the
//! field (defect graph or domain boundary), distribute seed points along the
//! template curves according to the local alignment, and integrate
//! hyperstreamlines of the major eigenvector field from every seed.
//! A Landau-de Gennes gradient-flow solver is included for generating test
//! fields.
//!
//! Validation code deliberately writes `!(x > 0.0)` so that NaN fails the
//! check; the negated form is intentional.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod field;
pub mod field_gen;
pub mod integrator;
pub mod pipeline;
pub mod render;
pub mod seeding;
pub mod tensor;
pub mod threading;
pub mod topology;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("eigendecomposition did not converge (non-finite or corrupt input)")]
    EigenNonConvergence,
    #[error("no nematic minimum: bulk discriminant b^2 - 24ac < 0")]
    NoNematicMinimum,
    #[error("relaxation diverged (non-finite values) at step {step}")]
    Divergence { step: usize },
    #[error("defects closer than two grid cells are unresolvable")]
    DefectsTooClose,
    #[error("degenerate domain: no defects and no boundary contour")]
    EmptyTemplate,
    #[error("curve has too few distinct points for parameterization")]
    DegenerateCurve,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
