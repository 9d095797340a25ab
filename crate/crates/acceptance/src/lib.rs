//! Home of the `acceptance` test target. Run it with
//! `cargo test -p patsig-e2e --test acceptance`.
