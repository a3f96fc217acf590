//! Placeholder.
pub fn run_cli() -> i32 { 0 }
