//! Marker panels, genetic maps, phenotypes and the region hierarchy built on
//! top of them.
//!
//! Marker columns are stored in map order: by chromosome, then position, with
//! unmapped markers last on a sentinel chromosome `c + 1`. Every [`Region`]
//! refers to columns by their index in that order.

mod io;
mod panel;
mod partition;
mod phenotype;

pub use io::{load_marker_panel, load_phenotype, write_map, write_markers, write_phenotype};
pub use panel::{Coding, GeneticMap, MapEntry, MarkerPanel};
pub use partition::{partition_genome, split_by_cm, Region, RegionTree};
pub use phenotype::Phenotype;
