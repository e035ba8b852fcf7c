//! Protein inference from peptide identification tables.
//!
//! The pipeline turns Percolator-style PSM tables into protein-group /
//! peptide / PSM tripartite graphs, scores protein groups with a
//! heterogeneous message-passing network trained by pseudo-label
//! self-training, and evaluates the output with decoy q-values and
//! entrapment-FDR curves.
//!
//! Modules follow the pipeline order:
//! - [`psm`]: PIN parsing, decoy relabeling, feature standardization,
//!   peptide-protein bipartite map
//! - [`graph`]: protein grouping, peptide-sharing edge attributes,
//!   tripartite graph construction
//! - [`nn`]: message-passing network, reverse-mode gradients, Adam,
//!   gradient checking
//! - [`train`]: pseudo-labels, per-round training, self-training,
//!   ensemble scoring
//! - [`eval`]: decoy q-values, entrapment-FDR curves, pAUC, reports
//! - [`synth`]: synthetic PSM tables with planted ground truth
//! - [`cli`]: the `pinfer` command-line front end

pub mod checkpoint;
pub mod cli;
pub mod eval;
pub mod graph;
pub mod mat;
pub mod nn;
pub mod psm;
pub mod synth;
pub mod train;
