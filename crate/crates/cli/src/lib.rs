//! Scenario runner, identity driver and exporters behind the `plateau` binary.

pub mod export;
pub mod report;
pub mod run;
pub mod scenario;

use serde::Serialize;

pub const EXIT_CERTIFICATION: i32 = 2;
pub const EXIT_SCHEMA: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Schema(String),
    Certification(String),
    Run(String),
}

#[derive(Serialize)]
struct ErrorObject<'a> {
    error: &'a str,
    message: &'a str,
    exit_code: i32,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => EXIT_SCHEMA,
            CliError::Certification(_) => EXIT_CERTIFICATION,
            CliError::Run(_) => 1,
        }
    }

    /// Machine-readable one-line JSON form.
    pub fn to_json(&self) -> String {
        let (error, message) = match self {
            CliError::Schema(m) => ("schema", m),
            CliError::Certification(m) => ("certification", m),
            CliError::Run(m) => ("run", m),
        };
        serde_json::to_string(&ErrorObject { error, message, exit_code: self.exit_code() }).expect("plain strings")
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_json())
    }
}

impl std::error::Error for CliError {}

/// Size the global rayon pool from `PLATEAU_THREADS`.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("PLATEAU_THREADS") else { return Ok(()) };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Schema(format!("PLATEAU_THREADS={v}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Run(e.to_string()))
}
