//! The horizon-lab book, compiled as documentation so its snippets run as
//! doc-tests.
#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}

#[doc = include_str!("../../../book/src/ergosphere.md")]
pub mod ergosphere {}

#[doc = include_str!("../../../book/src/geodesics.md")]
pub mod geodesics {}

#[doc = include_str!("../../../book/src/horizon.md")]
pub mod horizon {}

#[doc = include_str!("../../../book/src/charcoords.md")]
pub mod charcoords {}

#[doc = include_str!("../../../book/src/kerr.md")]
pub mod kerr {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
