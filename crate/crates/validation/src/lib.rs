//! Acceptance criteria for `refinable` live in `tests/acceptance.rs`, one
//! printed `criterion n: PASS/FAIL` line each.
