//! Objective regionalisation of gridded multi-parameter ocean data.
//!
//! The crate covers the whole chain from gridded cells to fused water-mass
//! labels: min-max scaling and KNN imputation ([`grid`]), fuzzy-graph
//! manifold embedding ([`embedding`]), k-means / Ward / DBSCAN
//! ([`clustering`]), six cluster-validity indices ([`cvi`]), partition
//! similarity ([`similarity`]), ensemble fusion with per-cell uncertainty
//! ([`nemi`]), hyperparameter sweeps ([`sweep`]) and rigid alignment of
//! embeddings ([`registration`]). [`synth`] generates Gaussian-blob test
//! data.

pub mod clustering;
pub mod cvi;
pub mod distance;
pub mod embedding;
pub mod grid;
pub mod nemi;
pub mod partition;
pub mod registration;
pub mod similarity;
pub mod sweep;
pub mod synth;

pub use grid::{FeatureMatrix, GridBounds, GridCell, GridDataset, GridError, ScalingParams};
pub use partition::{ClusterSet, Label, Provenance, NOISE};
