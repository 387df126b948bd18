//! Acceptance runs over the whole workspace. Everything lives in
//! `tests/acceptance.rs`; run it with `cargo test -p aniso-suite`.
