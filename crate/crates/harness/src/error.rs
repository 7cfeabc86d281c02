use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] multislip::Error),

    #[error("ladder step n={n}: {source}")]
    Step {
        n: u64,
        #[source]
        source: multislip::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) trait AtStep<T> {
    fn at_step(self, n: u64) -> Result<T>;
}

impl<T> AtStep<T> for multislip::Result<T> {
    fn at_step(self, n: u64) -> Result<T> {
        self.map_err(|source| HarnessError::Step { n, source })
    }
}
