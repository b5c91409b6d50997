//! Shared admission-control vocabulary: requests, decisions, release records
//! and the engine trait implemented by the G-BAM link and the classic oracles.

use crate::bandwidth::Bandwidth;
use thiserror::Error;

/// Opaque LSP identifier. Unique within one engine instance and never reused
/// once an admitted LSP has been released.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LspId(pub u64);

/// An admission request: which class wants how much bandwidth.
///
/// Zero-bandwidth requests are legal no-ops: they are admitted and recorded
/// without affecting any total.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LspRequest {
    pub id: LspId,
    pub class: usize,
    pub bandwidth: Bandwidth,
}

/// Outcome of an admission request.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Admitted,
    /// The request did not fit; `shortfall` is how many kbps were missing
    /// from the class's current headroom.
    Blocked { shortfall: Bandwidth },
}

impl Decision {
    pub fn is_admitted(&self) -> bool {
        matches!(self, Decision::Admitted)
    }
}

/// What a release removed from the link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReleaseRecord {
    pub id: LspId,
    pub class: usize,
    pub bandwidth: Bandwidth,
}

/// Caller contract violations. These are distinct from [`Decision::Blocked`],
/// which is an ordinary workload condition.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum AdmissionError {
    #[error("lsp id {0:?} was already used on this engine")]
    DuplicateLspId(LspId),
    #[error("class {class} out of range, engine has {class_count} classes")]
    ClassOutOfRange { class: usize, class_count: usize },
    #[error("unknown lsp id {0:?}")]
    UnknownLspId(LspId),
}

/// A single-writer admission engine over one link.
///
/// Implementations are sequential state machines: operations mutate the
/// engine one at a time, distinct instances are independent, and everything
/// an engine hands out (snapshots, totals copies) is an immutable value.
pub trait AdmissionEngine {
    fn class_count(&self) -> usize;

    fn capacity(&self) -> Bandwidth;

    /// Current per-class allocated totals, loans included.
    fn totals(&self) -> &[Bandwidth];

    fn admit(&mut self, req: &LspRequest) -> Result<Decision, AdmissionError>;

    fn release(&mut self, id: LspId) -> Result<ReleaseRecord, AdmissionError>;

    /// Per-class bandwidth currently borrowed (via HTL, via LTH), for engines
    /// that track loans. Oracles return `None`.
    fn loan_breakdown(&self) -> Option<(Vec<Bandwidth>, Vec<Bandwidth>)>;

    /// Check every structural invariant of the current state, returning a
    /// description of the first violation found.
    fn verify_invariants(&self) -> Result<(), String>;
}
