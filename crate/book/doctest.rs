// mdbook can't run the snippets against a local crate, so each chapter is
// included as the docs of an empty module and `cargo test --doc` runs them.

#[doc = include_str!("src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("src/noise.md")]
pub mod noise {}
#[doc = include_str!("src/steane.md")]
pub mod steane {}
#[doc = include_str!("src/matching.md")]
pub mod matching {}
#[doc = include_str!("src/rates.md")]
pub mod rates {}
#[doc = include_str!("src/allocation.md")]
pub mod allocation {}
#[doc = include_str!("src/cli.md")]
pub mod cli {}
#[doc = include_str!("../README.md")]
pub mod readme {}
