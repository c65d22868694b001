//! Acceptance checks for the workspace. The checks live in
//! `tests/acceptance.rs` and print one PASS or FAIL line per criterion.
