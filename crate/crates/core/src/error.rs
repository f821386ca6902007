use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} is outside its domain (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("series truncated after {terms} terms; last term magnitude {last_term:e}")]
    SeriesTruncation { terms: usize, last_term: f64 },

    #[error("quadrature stopped after {intervals} subintervals with error estimate {error:e}")]
    Quadrature { intervals: usize, error: f64 },

    /// Remark: equal variances leave the two hypotheses indistinguishable.
    #[error("hypotheses cannot be discriminated: sigma0^2 = {sigma0_sq}, sigma1^2 = {sigma1_sq}")]
    DetectionUndefined { sigma0_sq: f64, sigma1_sq: f64 },

    #[error("numeric domain error: {0}")]
    NumericDomain(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// No training blocks were available to label the two blind levels.
    #[error("cannot label blind estimates without training blocks (a_min = {a_min}, a_max = {a_max})")]
    Ambiguous { a_min: f64, a_max: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(what: &'static str, value: impl num_traits::ToPrimitive) -> Self {
        Error::Domain {
            what,
            value: value.to_f64().unwrap_or(f64::NAN),
        }
    }
}
