//! Doc-test bridge for the guide chapters in `book/`.
//!
//! Each chapter is included verbatim as a doc comment so `cargo test --doc`
//! executes every runnable snippet the book shows.

#[doc = include_str!("../../../book/src/matrix-functions.md")]
mod matrix_functions {}
