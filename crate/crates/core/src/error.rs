use thiserror::Error;

use crate::engineering::Infeasibility;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or configuration value violates its domain. `field` is a
    /// dotted path such as `setup.w_p` when the value came from a config.
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("quadrature did not converge for {context}: error estimate {estimate:.3e} exceeds {tolerance:.3e}")]
    QuadratureNotConverged {
        context: String,
        estimate: f64,
        tolerance: f64,
    },

    #[error("OAM window [{min}, {max}] does not cover the {d}x{d} subspace")]
    WindowTooSmall { d: usize, min: i32, max: i32 },

    #[error("matrix has no nonzero entries")]
    ZeroMatrix,

    #[error("linear system is rank deficient: rank {rank}, needed {needed}")]
    RankDeficient { rank: usize, needed: usize },

    #[error("linear system residual {residual:.3e} exceeds threshold {threshold:.3e}")]
    ResidualTooLarge { residual: f64, threshold: f64 },

    #[error("baseline amplitude on pump diagonal l_p = {ell_p} vanishes ({magnitude:.3e})")]
    BaselineVanishes { ell_p: i32, magnitude: f64 },

    #[error("target state is infeasible: {0}")]
    Infeasible(Infeasibility),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNotConverged { .. }
                | Error::ZeroMatrix
                | Error::RankDeficient { .. }
                | Error::ResidualTooLarge { .. }
                | Error::BaselineVanishes { .. }
        )
    }
}
