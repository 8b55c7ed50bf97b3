//! Affordance learning through interactive perception.
//!
//! A robot-free reimplementation of the full pipeline: a synthetic tabletop
//! world is rendered into noisy point clouds, over-segmented into
//! supervoxel-like regions, and described by colour histograms plus FPFH.
//! An online two-class mixture classifier ([`cmm::MixtureClassifier`]) learns
//! which regions produce an effect under a given action primitive, while an
//! uncertainty/confidence driven policy ([`exploration`]) picks the next
//! region to interact with. Per-affordance relevance maps are finally
//! composed and merged into an affordance map ([`maps`]).

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cmm;
pub mod error;
pub mod exploration;
pub mod maps;
pub mod metrics;
pub mod percept;
pub mod runner;
pub mod simworld;

pub use error::{Error, Result};
