//! The run-report envelope: config hash, seed echo, typed results, notes,
//! numeric flags, and wall-clock timing. Everything except `timing` is a
//! pure function of the config, so repeated runs agree byte for byte after
//! dropping that field.

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct RunReport {
    pub version: u32,
    pub kind: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub threads: usize,
    pub oracle_mode: bool,
    pub results: serde_json::Value,
    pub notes: Vec<String>,
    /// Degenerate or non-converged numerics encountered during the run;
    /// a nonempty list maps to exit code 3.
    pub numeric_flags: Vec<String>,
    pub timing: Timing,
}

#[derive(Serialize)]
pub struct Timing {
    pub wall_ms: u128,
}

pub fn config_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn render(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports always serialize");
    s.push('\n');
    s
}
