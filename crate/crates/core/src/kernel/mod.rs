//! Relationship matrices over lines: marker kernels, their combinations,
//! scoring, locality-weighted scanning and sparsifying shrinkage.
//!
//! Every marker-based kernel divides inner products by the number of markers
//! it was built from (or by the total locality weight for scan kernels), so
//! variance components stay comparable across regions of different sizes.

mod combine;
mod export;
mod functions;
mod matrix;
mod scan;
mod shrink;
mod weights;

pub use combine::{alignment_weights, combine_kernels, hadamard, kernel_alignment};
pub use export::{write_edges, write_kernel};
pub use functions::{
    complement_kernel, gaussian_kernel, linear_kernel, marker_kernel, polynomial_kernel,
    region_kernel, Bandwidth, KernelFunction, ResolvedKernel,
};
pub use matrix::{KernelMatrix, Recipe, PSD_TOLERANCE, SYMMETRY_TOLERANCE};
pub use scan::{kernel_scan, scan_weights};
pub use shrink::{shrink_kernel, Edge};
pub use weights::{qiu_weights, KernelWeights, ScoreKind, WeightMethod};
