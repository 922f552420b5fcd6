use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("empty variable or constraint name")]
    EmptyName,
    #[error("duplicate variable name `{0}`")]
    DuplicateVar(String),
    #[error("duplicate constraint name `{0}`")]
    DuplicateConstraint(String),
    #[error("reference to unknown variable id {0}")]
    UnknownVar(usize),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("variable `{var}` has empty domain [{lower}, {upper}]")]
    EmptyDomain { var: String, lower: f64, upper: f64 },
    #[error("variable `{var}` appears twice in `{constraint}`")]
    DuplicateTerm { constraint: String, var: String },
    #[error("objective unset")]
    ObjectiveUnset,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("external solver: {0}")]
    External(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
