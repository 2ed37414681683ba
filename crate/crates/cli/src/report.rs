//! The report envelope: command echo, config echo, payload, wall time.

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub threads: usize,
    pub budget: u64,
    pub format: String,
}

#[derive(Serialize)]
pub struct Report<T: Serialize> {
    pub command: String,
    pub argv: Vec<String>,
    pub config: ConfigEcho,
    /// Volatile: excluded from reproducibility comparisons.
    pub wall_ms: u128,
    pub result: T,
}

#[derive(Serialize)]
pub struct ErrorReport {
    pub command: String,
    pub argv: Vec<String>,
    pub error: String,
}

pub fn print_json<T: Serialize>(report: &Report<T>) {
    println!(
        "{}",
        serde_json::to_string_pretty(report).expect("report serialization")
    );
}
