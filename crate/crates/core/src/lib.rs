//! Locally epistatic genomic prediction.
//!
//! Marker panels are cut into genomic regions, each region gets its own
//! relationship kernel, and a mixed model estimates how much phenotypic
//! variance every region explains. Regions can be tested hierarchically,
//! combined into a sparse predictor with the lasso, and fed into selection
//! indices and cross predictions for breeding.

pub mod breeding;
pub mod combine;
pub mod error;
pub mod genome;
pub mod hierarchy;
pub mod kernel;
pub mod linalg;
pub mod pipeline;
pub mod sim;
pub mod spmm;
pub mod stats;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/data.md")]
mod book_data {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/kernels.md")]
mod book_kernels {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/mixed-models.md")]
mod book_mixed_models {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/testing.md")]
mod book_testing {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/combining.md")]
mod book_combining {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/breeding.md")]
mod book_breeding {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/simulation.md")]
mod book_simulation {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
