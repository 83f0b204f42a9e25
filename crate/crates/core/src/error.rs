use thiserror::Error;

use crate::model::ValidationReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid model:\n{0}")]
    Invalid(ValidationReport),

    #[error("index out of range: {what} = {index} (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("strategy undefined for agent {agent} (subsystem {subsystem}) at t = {t}")]
    StrategyUndefined {
        agent: usize,
        subsystem: usize,
        t: usize,
    },

    #[error("hat model construction failed: {0}")]
    Construction(String),

    #[error("inconsistent initial common information")]
    InconsistentInitial,

    #[error("infeasible observation for the given information state and action")]
    InfeasibleObservation,

    #[error("resource limit exceeded: {what} reached {count} (cap {cap})")]
    Resource {
        what: &'static str,
        count: u128,
        cap: u128,
    },

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
