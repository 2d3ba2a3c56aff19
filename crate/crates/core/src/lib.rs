//! Two-community geometric stochastic block model: sampling, the
//! information-theoretic threshold, the two-phase exact recovery algorithm,
//! and truth-aware baselines for the impossibility side.

pub mod divergence;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod oracle;
pub mod partition;
pub mod profiles;
pub mod recovery;
pub mod sampler;
pub mod seeds;

pub use divergence::{information_metric, DivergenceReport};
pub use error::{ConfigIssue, GsbmError, Result};
pub use geometry::{unit_ball_volume, CellIndex, TorusBox};
pub use oracle::{brute_force_mle, flip_bad_census, genie_label, likelihood, FlipBadReport};
pub use partition::{validate_parameters, BlockGrid, ValidationReport, VisibilityGraph};
pub use profiles::{Profile, ProfileSpec, Scale};
pub use recovery::{agreement, run_exact_recovery, Labeling, Phase, RecoveryOutcome, Status};
pub use sampler::{read_graph, sample, write_graph, GsbmGraph};
