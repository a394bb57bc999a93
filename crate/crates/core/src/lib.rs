//! Phase-space Monte Carlo simulation and statistical validation of linear
//! bosonic networks with threshold (click) detectors.
//!
//! The crate simulates grouped count probabilities (GCPs) of Gaussian inputs
//! sent through a transmission matrix, for pure, thermalized, thermal and
//! squashed input families at normal, symmetric or anti-normal ordering. On
//! the data side it ingests or generates binary detection patterns, bins
//! them on the same grouped-count lattices, and decides with chi-square and
//! Wilson-Hilferty Z statistics whether the counts match the simulated
//! distribution.
//!
//! Pipeline shape:
//!
//! ```text
//! InputModel --sample--> AmplitudeEnsemble --network--> output ensemble
//!     |                                                     |
//!     |                                     gcp / moments / cumulants
//!     |                                                     |
//! generate_fakes / ingest_patterns --bin--> BinnedCounts --chi_square--> Z
//! ```
//!
//! Everything is deterministic per 64-bit seed: random streams are derived
//! per purpose, repeat and chunk, so thread count never changes results.

pub mod counts;
pub mod csvio;
pub mod error;
pub mod input;
pub mod linalg;
pub mod network;
pub mod observables;
pub mod oracle;
pub mod rng;
pub mod simulate;
pub mod statistics;
pub mod testing;

pub use counts::{
    bin_patterns, generate_fakes, ingest_patterns, permutation_test, BinnedCounts, PatternSet,
    Provenance,
};
pub use error::{Error, ErrorClass, Result};
pub use input::{
    derive_photon_params, sample_input_ensemble, sigma_variances, AmplitudeEnsemble, InputModel,
    QuadratureVariances, SigmaOrdering, StateFamily,
};
pub use network::{
    apply_network, load_matrix, parse_matrix, permute_outputs, Permutation, TransmissionMatrix,
};
pub use observables::{
    bin_count, click_probabilities, cumulants_low_order, gcp, intensity_correlation,
    marginal_moment, permutation_count, BinningSpec, Estimate, GcpEstimate,
};
pub use simulate::{run_gcp, run_moments, SampleSizes, SimulationSpec};
pub use statistics::{
    chi_square, fit_decoherence, normalized_difference, z_statistic, ComparisonReport, FitGrid,
    FitOptions, FitResult,
};
