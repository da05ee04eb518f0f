//! The user guide, mirrored from `book/` chapter by chapter so that every
//! code snippet in it compiles and runs under `cargo test --doc`. Build
//! the rendered version with `mdbook build book`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}

#[doc = include_str!("../../../book/src/laws.md")]
pub mod laws {}

#[doc = include_str!("../../../book/src/kinetic.md")]
pub mod kinetic {}

#[doc = include_str!("../../../book/src/excursions.md")]
pub mod excursions {}

#[doc = include_str!("../../../book/src/reflector.md")]
pub mod reflector {}

#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}

#[doc = include_str!("../../../book/src/statistics.md")]
pub mod statistics {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}

#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
