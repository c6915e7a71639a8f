//! Reduced-order models of the parametric transport problem and of the
//! kinetic correction equation.

pub mod correction;
pub mod io;
pub mod model;
pub mod pod;
pub mod snapshots;

pub use correction::{RomsaCorrection, RomsadCorrection};
pub use model::{romig, ModelKind, OfflineTimings, ReducedModel};
pub use pod::{truncation_rank, PodBasis, PodBuilder, PodDecomposition};
pub use snapshots::{collect_snapshots, CollectionSummary, PodAccumulator, SnapshotSink, SnapshotStore, TrainingSnapshot};
