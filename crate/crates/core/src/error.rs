use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the engine can report.
///
/// [`Error::kind`] gives the stable machine-readable name that front ends
/// (HTTP, CLI) key their status codes and exit codes on.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("incomparable distributions: {0}")]
    IncomparableDistributions(String),

    #[error("non-finite quantile: probability {0} has no finite chi-square quantile")]
    NonFiniteQuantile(f64),

    #[error("unknown dimension `{0}`")]
    UnknownDimension(String),

    #[error("unknown cohort `{0}`")]
    UnknownCohort(String),

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("invalid reweight configuration: {0}")]
    InvalidConfig(String),

    #[error("subgroup explosion: {0} reweight dimensions exceeds the cap of {max}", max = crate::reweight::MAX_REWEIGHT_DIMS)]
    SubgroupExplosion(usize),

    #[error("empty baseline cohort")]
    EmptyBaseline,

    #[error("empty focus cohort")]
    EmptyFocus,

    #[error("no focus cohort selected")]
    NoFocus,

    #[error("danger score undefined: {0}")]
    DangerUndefined(String),

    #[error("cycle in dimension hierarchy at `{0}`")]
    HierarchyCycle(String),

    #[error("invalid hierarchy: {0}")]
    InvalidHierarchy(String),

    #[error("unknown event codes: {}", .0.join(", "))]
    UnknownEventCodes(Vec<String>),

    #[error("duplicate entity id `{0}`")]
    DuplicateEntity(String),

    #[error("checksum mismatch: manifest says {expected}, files hash to {actual}")]
    ChecksumMismatch { expected: String, actual: String },

    #[error("unsupported session schema version {0}")]
    UnsupportedVersion(u32),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::IncomparableDistributions(_) => "incomparable_distributions",
            Error::NonFiniteQuantile(_) => "non_finite_quantile",
            Error::UnknownDimension(_) => "unknown_dimension",
            Error::UnknownCohort(_) => "unknown_cohort",
            Error::UnknownDataset(_) => "unknown_dataset",
            Error::InvalidConfig(_) => "invalid_config",
            Error::SubgroupExplosion(_) => "subgroup_explosion",
            Error::EmptyBaseline => "empty_baseline",
            Error::EmptyFocus => "empty_focus",
            Error::NoFocus => "no_focus",
            Error::DangerUndefined(_) => "danger_undefined",
            Error::HierarchyCycle(_) => "hierarchy_cycle",
            Error::InvalidHierarchy(_) => "invalid_hierarchy",
            Error::UnknownEventCodes(_) => "unknown_event_codes",
            Error::DuplicateEntity(_) => "duplicate_entity",
            Error::ChecksumMismatch { .. } => "checksum_mismatch",
            Error::UnsupportedVersion(_) => "unsupported_version",
            Error::Parse(_) => "parse_error",
            Error::Io { .. } => "io_error",
        }
    }

    /// True for errors caused by the caller's input rather than by the engine.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io { .. })
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
