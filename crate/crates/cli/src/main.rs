//! hyperq: a single-binary multi-tool for exact hypergraph quasirandomness
//! machinery, projective geometries, extremal constructions, embedding
//! search, and regularity decompositions.
//!
//! Every invocation prints one JSON document (or a CSV table for censuses)
//! and exits 0 on success, 2 on budget-exhausted verdicts, 1 on errors.
//! Identical (argv, seed) produce byte-identical payloads at any thread
//! count; wall-time and node-count statistics live in volatile fields.

mod commands;
mod report;

use clap::Parser;

fn main() {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match commands::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Usage and help go to stderr; errors exit 1, never 2 (which is
            // reserved for budget-exhausted verdicts).
            if e.use_stderr() {
                eprint!("{e}");
                std::process::exit(1);
            }
            print!("{e}");
            std::process::exit(0);
        }
    };
    let code = commands::run(cli, &argv);
    std::process::exit(code);
}
