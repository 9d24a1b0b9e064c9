use thiserror::Error;

/// Errors raised by estimation, simulation and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    #[error("degenerate panel: {0}")]
    DegeneratePanel(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("singular design: cross-product is rank deficient along direction {null_direction:?}")]
    SingularDesign { null_direction: Vec<f64> },

    #[error("singular weighted design at IRLS iteration {iteration}")]
    SingularWeightedDesign { iteration: usize },

    #[error("degenerate design: every elemental subset was singular")]
    DegenerateDesign,

    #[error("zero scale: residual spread is exactly zero")]
    ZeroScale,

    #[error("no valid tuning constant: {0}")]
    NoValidTuning(String),

    #[error("unstable curvature: mean psi' = {0} is not positive")]
    UnstableCurvature(f64),

    #[error("invalid loss: {0}")]
    InvalidLoss(String),

    #[error("block policy: m = {m} is not a whole number of {block}-period blocks; nearest valid m is {nearest}")]
    BlockPolicy { m: usize, block: usize, nearest: usize },

    #[error("invalid contamination: {0}")]
    InvalidScheme(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("row {row}: duplicate cell (unit `{unit}`, time `{time}`)")]
    DuplicateCell { row: usize, unit: String, time: String },

    #[error("unbalanced panel: missing cell (unit `{unit}`, time `{time}`)")]
    Unbalanced { unit: String, time: String },

    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumeric { row: usize, column: String, value: String },

    #[error("config: {0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures caused by the input data or configuration rather than
    /// by the estimation itself.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidPanel(_)
                | Error::DegeneratePanel(_)
                | Error::ShapeMismatch(_)
                | Error::MissingColumn(_)
                | Error::DuplicateCell { .. }
                | Error::Unbalanced { .. }
                | Error::NonNumeric { .. }
                | Error::Config(_)
                | Error::Csv(_)
                | Error::Io(_)
                | Error::BlockPolicy { .. }
                | Error::InvalidScheme(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
