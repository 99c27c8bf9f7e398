//! Compiles the code listings in `book/src` as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}
#[doc = include_str!("../../../book/src/phrase-pool.md")]
pub mod phrase_pool {}
#[doc = include_str!("../../../book/src/drafting.md")]
pub mod drafting {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/engines.md")]
pub mod engines {}
#[doc = include_str!("../../../book/src/benchmarking.md")]
pub mod benchmarking {}
