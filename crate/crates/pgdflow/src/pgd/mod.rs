//! Proper generalised decomposition: separated representations and the two
//! algorithms that build them.

pub mod aposteriori;
pub mod apriori;
pub mod compress;
pub mod repr;
pub mod tensor;

pub use aposteriori::{run_aposteriori, separate, AposterioriConfig, RankOne, Residual, Separation};
pub use apriori::{run_apriori, run_apriori_logged, AprioriConfig, AprioriRun, ParametricInit, ParametricSpace, ParametricTest};
pub use compress::compress;
pub use repr::{normalize_mode, Mode, Provenance, SeparatedSolution, Variable};
pub use tensor::{compute_snapshots, state_blocks, PlanLevel, SnapshotPlan, SnapshotTensor};
