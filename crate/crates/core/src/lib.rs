//! Empirical gramians for nonlinear input-state-output systems
//! `x' = f(x, u, p)`, `y = g(x, u, p)`, and gramian-based reduction of
//! states, parameters, or both.

pub mod bench;
pub mod cli;
pub mod error;
pub mod gramian;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod perturbation;
pub mod pgramian;
pub mod reduce;
pub mod schur;
pub mod sim;
pub mod snapshot;
pub mod system;

pub use error::{Error, Result};
pub use gramian::{
    collect_snapshots, empirical_controllability, empirical_cross, empirical_gramian, empirical_observability,
    Gramian, GramianConfig, GramianKind, GramianOutput, GramianType, ParamSignal, SnapshotData,
};
pub use perturbation::{PerturbationSpec, RotationKind, ScaleKind};
pub use pgramian::{identifiability_gramian, joint_gramian, sensitivity_gramian};
pub use sim::{integrate, output_trajectory, InputSignal, IntegratorKind};
pub use snapshot::{CenteringKind, SnapshotMatrix};
pub use system::{SystemDims, SystemModel, TimeGrid};
