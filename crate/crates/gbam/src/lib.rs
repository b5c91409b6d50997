//! Generalized bandwidth allocation for single-link, multi-class admission
//! control.
//!
//! One configurable rule set — per-class bandwidth constraints plus
//! directional loan caps — covers the classic DS-TE allocation models as
//! special cases: MAM (no loans), RDM (full high-to-low loans), G-RDM
//! (high-to-low loans over configurable private shares) and AllocTC-Sharing
//! (full loans both ways). The crate provides:
//!
//! * [`model`] — the parameter model: validation, factories for the classic
//!   configurations, and the static/dynamic allocation bounds;
//! * [`link`] / [`packing`] — a stateful link allocator whose admission test
//!   is an exact joint-feasibility check over lender pools, with a canonical
//!   loan packing exposed in snapshots;
//! * [`oracle`] — independently structured MAM/RDM/AllocTC-Sharing admission
//!   oracles plus a trace replay harness for equivalence testing;
//! * [`sim`] — a deterministic discrete-event workload generator and runner;
//! * [`metrics`] — trace folding into load series and run summaries, with
//!   CSV export;
//! * [`cli`] — the scenario file format and the `gbam` command
//!   implementations.

pub mod admission;
pub mod bandwidth;
pub mod cli;
pub mod link;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod packing;
pub mod sim;

pub use admission::{AdmissionEngine, AdmissionError, Decision, LspId, LspRequest, ReleaseRecord};
pub use bandwidth::Bandwidth;
pub use link::{LinkSnapshot, LinkState};
pub use model::{
    alloctc_config, grdm_config, mam_config, rdm_config, validate_config, BamConfig, ClassConfig,
    ClassUsage, ConfigError, LoanDirection, MAX_CLASSES,
};
pub use oracle::{replay, DecisionTrace, OracleModel, OracleState, TraceOp};
pub use packing::{feasible, Feasibility, LoanMatrix, Packing};
