use std::io;

/// Everything that can stop a subcommand before its outputs are written.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A flag value was rejected; `flag` is spelled as on the command line.
    #[error("invalid value for {flag}: {reason}")]
    Flag { flag: String, reason: String },
    #[error(transparent)]
    Core(rcp_core::Error),
    #[error("{path}: {source}")]
    Config {
        path: String,
        source: Box<toml::de::Error>,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn flag(flag: &str, reason: impl Into<String>) -> Self {
        CliError::Flag {
            flag: flag.to_string(),
            reason: reason.into(),
        }
    }

    /// Process exit code: 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Flag { .. } | CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

/// Core parameter names mapped to the flags that set them.
fn flag_for(name: &str) -> Option<&'static str> {
    Some(match name {
        "a" => "--a",
        "b" => "--b",
        "capacity" => "--C",
        "tau" => "--tau",
        "kappa" => "--kappa",
        "gamma" => "--gamma",
        "sigma2" => "--sigma2",
        "rho_star" => "--rho-star",
        "n_sources" => "--n-sources",
        "rtt" => "--rtt",
        "packet_size" => "--packet-size",
        "control_interval" => "--control-interval",
        "duration" => "--duration",
        "buffer_limit" => "--buffer-limit",
        "steps_per_delay" => "--steps-per-delay",
        "variant" => "--variant",
        _ => return None,
    })
}

impl From<rcp_core::Error> for CliError {
    fn from(e: rcp_core::Error) -> Self {
        match e {
            rcp_core::Error::InvalidParameter { name, reason } => match flag_for(name) {
                Some(flag) => CliError::flag(flag, reason),
                None => CliError::Core(e),
            },
            other => CliError::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
