use crate::eval::EvalError;
use crate::kinematics::KinematicsError;
use crate::mixture::MixtureError;
use crate::normstats::NormError;
use crate::schema::SchemaError;
use crate::store::StoreError;

/// Any error produced by the pipeline, tagged with its originating module.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Mixture(#[from] MixtureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

impl Error {
    /// Module-qualified error code, e.g. `store::checksum`.
    pub fn code(&self) -> String {
        match self {
            Error::Schema(e) => format!("schema::{}", e.code()),
            Error::Kinematics(e) => format!("kinematics::{}", e.code()),
            Error::Norm(e) => format!("normstats::{}", e.code()),
            Error::Mixture(e) => format!("mixture::{}", e.code()),
            Error::Eval(e) => format!("eval::{}", e.code()),
            Error::Store(e) => format!("store::{}", e.code()),
        }
    }

    /// True when the failure comes from the environment (files, processes)
    /// rather than from the data itself.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Store(e) => e.is_io(),
            Error::Eval(e) => e.is_io(),
            _ => false,
        }
    }
}
