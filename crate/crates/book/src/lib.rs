//! Runs every snippet in the guide as a doc-test.

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/hypergraphs.md")]
pub mod hypergraphs {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/autodiff.md")]
pub mod autodiff {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/data.md")]
pub mod data {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/perturbations.md")]
pub mod perturbations {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
