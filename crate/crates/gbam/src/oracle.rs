//! Independent MAM, RDM and AllocTC-Sharing admission oracles.
//!
//! These are deliberately written from each model's textbook rule instead of
//! from loan packings, so they share no structure with the G-BAM link
//! allocator and can serve as ground truth for equivalence testing:
//!
//! * MAM: a class admits while its own total stays within its BC; classes are
//!   fully isolated.
//! * RDM: nested availability, expressed on suffix sums. A class-`c` request
//!   fits iff for every threshold `t <= c` the total load of classes `>= t`
//!   stays within the summed BCs of classes `>= t`. The top class degenerates
//!   to the MAM rule.
//! * AllocTC-Sharing: only the link matters; the summed load of all classes
//!   must stay within capacity.
//!
//! [`replay`] runs a recorded operation sequence through any engine and
//! returns the ordered decisions, which is the equivalence harness used by
//! the comparison command and the acceptance suite.

use crate::admission::{
    AdmissionEngine, AdmissionError, Decision, LspId, LspRequest, ReleaseRecord,
};
use crate::bandwidth::Bandwidth;
use std::collections::{HashMap, HashSet};
use thiserror::Error;

/// Which classic model an [`OracleState`] implements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleModel {
    Mam,
    Rdm,
    AllocTc,
}

/// Largest class-`class` request MAM would admit on `totals`.
pub fn mam_headroom(bcs: &[Bandwidth], totals: &[Bandwidth], class: usize) -> Bandwidth {
    bcs[class].saturating_sub(totals[class])
}

/// Largest class-`class` request RDM would admit on `totals`: the tightest
/// suffix slack over all thresholds at or below the class.
pub fn rdm_headroom(bcs: &[Bandwidth], totals: &[Bandwidth], class: usize) -> Bandwidth {
    let mut headroom = Bandwidth::from_kbps(u64::MAX);
    let mut bc_suffix = Bandwidth::ZERO;
    let mut load_suffix = Bandwidth::ZERO;
    for t in (0..bcs.len()).rev() {
        bc_suffix += bcs[t];
        load_suffix += totals[t];
        if t <= class {
            headroom = headroom.min(bc_suffix.saturating_sub(load_suffix));
        }
    }
    headroom
}

/// Largest request of any class AllocTC-Sharing would admit on `totals`.
pub fn alloctc_headroom(capacity: Bandwidth, totals: &[Bandwidth]) -> Bandwidth {
    let allocated: Bandwidth = totals.iter().copied().sum();
    capacity.saturating_sub(allocated)
}

/// Admission state of one classic-model link: BC table, capacity, per-class
/// totals and the LSP registry.
#[derive(Clone, Debug)]
pub struct OracleState {
    model: OracleModel,
    bcs: Vec<Bandwidth>,
    capacity: Bandwidth,
    totals: Vec<Bandwidth>,
    lsps: HashMap<LspId, (usize, Bandwidth)>,
    retired: HashSet<LspId>,
}

impl OracleState {
    pub fn new(model: OracleModel, bcs: Vec<Bandwidth>, capacity: Bandwidth) -> OracleState {
        let n = bcs.len();
        OracleState {
            model,
            bcs,
            capacity,
            totals: vec![Bandwidth::ZERO; n],
            lsps: HashMap::new(),
            retired: HashSet::new(),
        }
    }

    pub fn model(&self) -> OracleModel {
        self.model
    }

    /// Largest request the given class could currently get admitted.
    pub fn headroom(&self, class: usize) -> Bandwidth {
        match self.model {
            OracleModel::Mam => mam_headroom(&self.bcs, &self.totals, class),
            OracleModel::Rdm => rdm_headroom(&self.bcs, &self.totals, class),
            OracleModel::AllocTc => alloctc_headroom(self.capacity, &self.totals),
        }
    }

    pub fn admit(&mut self, req: &LspRequest) -> Result<Decision, AdmissionError> {
        if req.class >= self.bcs.len() {
            return Err(AdmissionError::ClassOutOfRange {
                class: req.class,
                class_count: self.bcs.len(),
            });
        }
        if self.lsps.contains_key(&req.id) || self.retired.contains(&req.id) {
            return Err(AdmissionError::DuplicateLspId(req.id));
        }
        let headroom = self.headroom(req.class);
        if req.bandwidth > headroom {
            return Ok(Decision::Blocked { shortfall: req.bandwidth - headroom });
        }
        self.totals[req.class] += req.bandwidth;
        self.lsps.insert(req.id, (req.class, req.bandwidth));
        Ok(Decision::Admitted)
    }

    pub fn release(&mut self, id: LspId) -> Result<ReleaseRecord, AdmissionError> {
        let (class, bandwidth) = self.lsps.remove(&id).ok_or(AdmissionError::UnknownLspId(id))?;
        self.retired.insert(id);
        self.totals[class] -= bandwidth;
        Ok(ReleaseRecord { id, class, bandwidth })
    }

    pub fn verify(&self) -> Result<(), String> {
        let mut registry = vec![Bandwidth::ZERO; self.bcs.len()];
        for (class, bandwidth) in self.lsps.values() {
            registry[*class] += *bandwidth;
        }
        if registry != self.totals {
            return Err("registry totals disagree with tracked totals".into());
        }
        let allocated: Bandwidth = self.totals.iter().copied().sum();
        match self.model {
            OracleModel::Mam => {
                for (i, (&total, &bc)) in self.totals.iter().zip(&self.bcs).enumerate() {
                    if total > bc {
                        return Err(format!("class {i}: total {total} exceeds bc {bc}"));
                    }
                }
            }
            OracleModel::Rdm => {
                let mut bc_suffix = Bandwidth::ZERO;
                let mut load_suffix = Bandwidth::ZERO;
                for t in (0..self.bcs.len()).rev() {
                    bc_suffix += self.bcs[t];
                    load_suffix += self.totals[t];
                    if load_suffix > bc_suffix {
                        return Err(format!(
                            "suffix {t}: load {load_suffix} exceeds bc sum {bc_suffix}"
                        ));
                    }
                }
            }
            OracleModel::AllocTc => {}
        }
        if allocated > self.capacity {
            return Err(format!("allocated {allocated} exceeds capacity {}", self.capacity));
        }
        Ok(())
    }
}

impl AdmissionEngine for OracleState {
    fn class_count(&self) -> usize {
        self.bcs.len()
    }

    fn capacity(&self) -> Bandwidth {
        self.capacity
    }

    fn totals(&self) -> &[Bandwidth] {
        &self.totals
    }

    fn admit(&mut self, req: &LspRequest) -> Result<Decision, AdmissionError> {
        OracleState::admit(self, req)
    }

    fn release(&mut self, id: LspId) -> Result<ReleaseRecord, AdmissionError> {
        OracleState::release(self, id)
    }

    fn loan_breakdown(&self) -> Option<(Vec<Bandwidth>, Vec<Bandwidth>)> {
        None
    }

    fn verify_invariants(&self) -> Result<(), String> {
        self.verify()
    }
}

/// One recorded admission-control operation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TraceOp {
    Admit(LspRequest),
    Release(LspId),
}

/// Ordered admission decisions produced by a replayed trace.
pub type DecisionTrace = Vec<Decision>;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ReplayError {
    #[error("malformed trace at op {index}: {source}")]
    MalformedTrace {
        index: usize,
        #[source]
        source: AdmissionError,
    },
}

/// Runs a recorded operation sequence through an engine, returning one
/// decision per admit op. Release ops must name ids the engine actually
/// admitted and has not yet released; anything else is a malformed trace.
pub fn replay(
    engine: &mut dyn AdmissionEngine,
    ops: &[TraceOp],
) -> Result<DecisionTrace, ReplayError> {
    let mut decisions = Vec::new();
    for (index, op) in ops.iter().enumerate() {
        match op {
            TraceOp::Admit(req) => {
                let decision = engine
                    .admit(req)
                    .map_err(|source| ReplayError::MalformedTrace { index, source })?;
                decisions.push(decision);
            }
            TraceOp::Release(id) => {
                engine
                    .release(*id)
                    .map_err(|source| ReplayError::MalformedTrace { index, source })?;
            }
        }
    }
    Ok(decisions)
}
