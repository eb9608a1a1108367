//! Selection indices over region EBLUPs and progeny value distributions for
//! crosses between doubled-haploid lines.

mod cross;
mod density;
mod index;
mod report;

pub use cross::{cross_distribution, cross_many, CrossDistribution, CrossMode, CrossSummary, ASSORTMENT_NOTE};
pub use density::{region_densities, region_density};
pub use index::{jannink_index, preference_index, SelectionInput};
pub use report::{write_cross_samples, write_crosses, write_selection};
