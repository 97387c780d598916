//! The book's code listings, compiled and run by `cargo test --doc`.
//!
//! mdbook cannot link external crates when testing, so each chapter is
//! pulled in here as the docs of an empty module instead.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}
#[doc = include_str!("../../../book/src/density-ratios.md")]
pub mod density_ratios {}
#[doc = include_str!("../../../book/src/ensembles.md")]
pub mod ensembles {}
#[doc = include_str!("../../../book/src/estimators.md")]
pub mod estimators {}
#[doc = include_str!("../../../book/src/feature-selection.md")]
pub mod feature_selection {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/limits.md")]
pub mod limits {}
