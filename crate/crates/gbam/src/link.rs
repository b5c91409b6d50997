//! Stateful single-link admission control under a G-BAM configuration.
//!
//! A [`LinkState`] admits and releases LSPs, keeping per-class totals and the
//! canonical loan packing in sync. Admission is all-or-nothing: a request is
//! admitted exactly when the candidate totals are jointly packable
//! ([`crate::packing::feasible`]); otherwise the state is left untouched and
//! the decision reports how much headroom was missing. Nothing is ever
//! preempted.
//!
//! After every admit and release the packing is recomputed from scratch for
//! the new totals, so borrowed load migrates into own-BC space as soon as it
//! frees up and lender pools are returned eagerly. No LSP is moved or torn
//! down by this; it is pure accounting. It also makes every decision a
//! function of (config, totals, request) alone, so replaying a trace prefix
//! always reproduces the same decisions.

use crate::admission::{
    AdmissionEngine, AdmissionError, Decision, LspId, LspRequest, ReleaseRecord,
};
use crate::bandwidth::Bandwidth;
use crate::model::BamConfig;
use crate::packing::{canonical_packing, feasible_totals, LoanMatrix, Packing};
use std::collections::{HashMap, HashSet};

#[derive(Clone, Copy, Debug)]
struct Lsp {
    class: usize,
    bandwidth: Bandwidth,
}

/// Admission state of one link: LSP registry, per-class totals and the
/// canonical packing of those totals.
#[derive(Clone, Debug)]
pub struct LinkState {
    config: BamConfig,
    lsps: HashMap<LspId, Lsp>,
    totals: Vec<Bandwidth>,
    own: Vec<Bandwidth>,
    loans: LoanMatrix,
    retired: HashSet<LspId>,
}

/// Read-only view of a link's state at one instant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkSnapshot {
    /// Per-class allocated totals, loans included.
    pub totals: Vec<Bandwidth>,
    /// Per-class load served from the class's own BC.
    pub own: Vec<Bandwidth>,
    pub loans: LoanMatrix,
    /// Per-class bandwidth still lendable downward right now.
    pub loanable_htl: Vec<Bandwidth>,
    /// Per-class bandwidth still lendable upward right now.
    pub loanable_lth: Vec<Bandwidth>,
    /// Capacity not allocated to any class.
    pub free: Bandwidth,
    /// Per-class ceiling on totals reachable from the current state.
    pub dynamic_bound: Vec<Bandwidth>,
}

impl LinkState {
    pub fn new(config: BamConfig) -> LinkState {
        let n = config.class_count();
        LinkState {
            config,
            lsps: HashMap::new(),
            totals: vec![Bandwidth::ZERO; n],
            own: vec![Bandwidth::ZERO; n],
            loans: LoanMatrix::zero(n),
            retired: HashSet::new(),
        }
    }

    pub fn config(&self) -> &BamConfig {
        &self.config
    }

    pub fn lsp_count(&self) -> usize {
        self.lsps.len()
    }

    /// Largest request the given class could currently get admitted.
    pub fn headroom(&self, class: usize) -> Bandwidth {
        let allocated: Bandwidth = self.totals.iter().copied().sum();
        let free = self.config.capacity() - allocated;
        let mut probe_totals = self.totals.clone();
        let fits = |probe_totals: &mut Vec<Bandwidth>, extra: Bandwidth| {
            probe_totals[class] = self.totals[class] + extra;
            let ok = feasible_totals(&self.config, probe_totals);
            probe_totals[class] = self.totals[class];
            ok
        };
        if fits(&mut probe_totals, free) {
            return free;
        }
        // Feasibility is monotone in the extra load: zero extra keeps the
        // current (feasible) state.
        let (mut lo, mut hi) = (0u64, free.kbps());
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if fits(&mut probe_totals, Bandwidth::from_kbps(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Bandwidth::from_kbps(lo)
    }

    pub fn admit(&mut self, req: &LspRequest) -> Result<Decision, AdmissionError> {
        let n = self.config.class_count();
        if req.class >= n {
            return Err(AdmissionError::ClassOutOfRange { class: req.class, class_count: n });
        }
        if self.lsps.contains_key(&req.id) || self.retired.contains(&req.id) {
            return Err(AdmissionError::DuplicateLspId(req.id));
        }
        let mut candidate = self.totals.clone();
        candidate[req.class] += req.bandwidth;
        match canonical_packing(&self.config, &candidate) {
            Some(packing) => {
                self.apply_packing(candidate, packing);
                self.lsps.insert(req.id, Lsp { class: req.class, bandwidth: req.bandwidth });
                Ok(Decision::Admitted)
            }
            None => {
                let shortfall = req.bandwidth - self.headroom(req.class);
                Ok(Decision::Blocked { shortfall })
            }
        }
    }

    pub fn release(&mut self, id: LspId) -> Result<ReleaseRecord, AdmissionError> {
        let lsp = self.lsps.remove(&id).ok_or(AdmissionError::UnknownLspId(id))?;
        self.retired.insert(id);
        let mut candidate = self.totals.clone();
        candidate[lsp.class] -= lsp.bandwidth;
        let packing = canonical_packing(&self.config, &candidate)
            .expect("shrinking totals preserves feasibility");
        self.apply_packing(candidate, packing);
        Ok(ReleaseRecord { id, class: lsp.class, bandwidth: lsp.bandwidth })
    }

    fn apply_packing(&mut self, totals: Vec<Bandwidth>, packing: Packing) {
        self.totals = totals;
        self.own = packing.own;
        self.loans = packing.loans;
    }

    /// Remaining loanable pool of `lender` in one direction, after its
    /// current usage and outstanding loans in both directions.
    fn residual(&self, lender: usize, htl: bool) -> Bandwidth {
        let cfg = self.config.class(lender);
        let (cap, lent_dir) = if htl {
            (cfg.htl_cap, self.loans.lent_htl(lender))
        } else {
            (cfg.lth_cap, self.loans.lent_lth(lender))
        };
        let budget = cfg.bc - cfg.private().max(self.own[lender]);
        (cap - lent_dir).min(budget - self.loans.lent_total(lender))
    }

    pub fn snapshot(&self) -> LinkSnapshot {
        let n = self.config.class_count();
        let allocated: Bandwidth = self.totals.iter().copied().sum();
        let loanable_htl: Vec<Bandwidth> = (0..n).map(|j| self.residual(j, true)).collect();
        let loanable_lth: Vec<Bandwidth> = (0..n).map(|j| self.residual(j, false)).collect();
        // A class's reachable ceiling counts its own borrowings as available:
        // re-packing would hand them back before re-borrowing.
        let dynamic_bound = (0..n)
            .map(|i| {
                let mut bound = self.config.bc(i);
                for j in 0..n {
                    if j > i {
                        bound += loanable_htl[j] + self.loans.amount(i, j);
                    } else if j < i {
                        bound += loanable_lth[j] + self.loans.amount(i, j);
                    }
                }
                bound
            })
            .collect();
        LinkSnapshot {
            totals: self.totals.clone(),
            own: self.own.clone(),
            loans: self.loans.clone(),
            loanable_htl,
            loanable_lth,
            free: self.config.capacity() - allocated,
            dynamic_bound,
        }
    }

    /// Checks every structural invariant of the current state.
    pub fn verify(&self) -> Result<(), String> {
        let n = self.config.class_count();
        let allocated: Bandwidth = self.totals.iter().copied().sum();
        if allocated > self.config.capacity() {
            return Err(format!(
                "allocated {} exceeds capacity {}",
                allocated,
                self.config.capacity()
            ));
        }
        let mut registry = vec![Bandwidth::ZERO; n];
        for lsp in self.lsps.values() {
            registry[lsp.class] += lsp.bandwidth;
        }
        if registry != self.totals {
            return Err(format!(
                "registry totals {registry:?} disagree with tracked totals {:?}",
                self.totals
            ));
        }
        for i in 0..n {
            let bc = self.config.bc(i);
            if self.own[i] > bc {
                return Err(format!("class {i}: own usage {} exceeds bc {bc}", self.own[i]));
            }
            if self.own[i] != self.totals[i].min(bc) {
                return Err(format!(
                    "class {i}: own usage {} is not min(total, bc)",
                    self.own[i]
                ));
            }
            if self.own[i] + self.loans.borrowed_total(i) != self.totals[i] {
                return Err(format!("class {i}: own + borrowed differs from total"));
            }
            if self.totals[i] > self.config.static_max_allocation(i).min(self.config.capacity()) {
                return Err(format!("class {i}: total {} over static bound", self.totals[i]));
            }
            let lent_htl = self.loans.lent_htl(i);
            let lent_lth = self.loans.lent_lth(i);
            if lent_htl > self.config.htl_cap(i) {
                return Err(format!("class {i}: HTL loans {lent_htl} over cap"));
            }
            if lent_lth > self.config.lth_cap(i) {
                return Err(format!("class {i}: LTH loans {lent_lth} over cap"));
            }
            let lent = lent_htl + lent_lth;
            if self.own[i] + lent > bc {
                return Err(format!("class {i}: own + lent exceeds bc"));
            }
            let sanctity = bc - self.config.private_bandwidth(i).max(self.own[i]);
            if lent > sanctity {
                return Err(format!(
                    "class {i}: lent {lent} intrudes on private bandwidth (budget {sanctity})"
                ));
            }
            if self.loans.amount(i, i) != Bandwidth::ZERO {
                return Err(format!("class {i}: self-loan recorded"));
            }
        }
        let snapshot = self.snapshot();
        for i in 0..n {
            if self.totals[i] > snapshot.dynamic_bound[i] {
                return Err(format!(
                    "class {i}: total {} over dynamic bound {}",
                    self.totals[i], snapshot.dynamic_bound[i]
                ));
            }
        }
        Ok(())
    }
}

impl AdmissionEngine for LinkState {
    fn class_count(&self) -> usize {
        self.config.class_count()
    }

    fn capacity(&self) -> Bandwidth {
        self.config.capacity()
    }

    fn totals(&self) -> &[Bandwidth] {
        &self.totals
    }

    fn admit(&mut self, req: &LspRequest) -> Result<Decision, AdmissionError> {
        LinkState::admit(self, req)
    }

    fn release(&mut self, id: LspId) -> Result<ReleaseRecord, AdmissionError> {
        LinkState::release(self, id)
    }

    fn loan_breakdown(&self) -> Option<(Vec<Bandwidth>, Vec<Bandwidth>)> {
        let n = self.config.class_count();
        Some((
            (0..n).map(|i| self.loans.borrowed_htl(i)).collect(),
            (0..n).map(|i| self.loans.borrowed_lth(i)).collect(),
        ))
    }

    fn verify_invariants(&self) -> Result<(), String> {
        self.verify()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{alloctc_config, mam_config, rdm_config};

    fn kb(v: u64) -> Bandwidth {
        Bandwidth::from_kbps(v)
    }

    fn bws(vals: &[u64]) -> Vec<Bandwidth> {
        vals.iter().map(|&v| kb(v)).collect()
    }

    const TABLE: [u64; 3] = [248_800, 217_700, 155_500];

    fn table_bcs() -> Vec<Bandwidth> {
        bws(&TABLE)
    }

    fn req(id: u64, class: usize, bandwidth: u64) -> LspRequest {
        LspRequest { id: LspId(id), class, bandwidth: kb(bandwidth) }
    }

    #[test]
    fn new_link_is_empty_with_model_bounds() {
        let rdm = LinkState::new(rdm_config(&table_bcs(), kb(622_000)).unwrap());
        let snap = rdm.snapshot();
        assert_eq!(snap.totals, bws(&[0, 0, 0]));
        assert_eq!(snap.free, kb(622_000));

        let mam = LinkState::new(mam_config(&table_bcs(), kb(622_000)).unwrap());
        assert_eq!(mam.snapshot().dynamic_bound, table_bcs());

        let alloctc = LinkState::new(alloctc_config(&table_bcs(), kb(622_000)).unwrap());
        assert_eq!(
            alloctc.snapshot().dynamic_bound,
            bws(&[622_000, 622_000, 622_000])
        );
    }

    #[test]
    fn mam_admits_up_to_bc_and_not_further() {
        let mut link = LinkState::new(mam_config(&table_bcs(), kb(622_000)).unwrap());
        assert_eq!(link.admit(&req(1, 0, 248_800)).unwrap(), Decision::Admitted);
        assert_eq!(
            link.admit(&req(2, 0, 1)).unwrap(),
            Decision::Blocked { shortfall: kb(1) }
        );
        link.verify().unwrap();
    }

    #[test]
    fn rdm_lowest_class_can_take_the_whole_link() {
        let mut link = LinkState::new(rdm_config(&table_bcs(), kb(622_000)).unwrap());
        assert_eq!(link.admit(&req(1, 0, 622_000)).unwrap(), Decision::Admitted);
        link.verify().unwrap();
    }

    #[test]
    fn rdm_top_class_is_capped_at_its_bc() {
        let mut link = LinkState::new(rdm_config(&table_bcs(), kb(622_000)).unwrap());
        assert_eq!(
            link.admit(&req(1, 2, 155_501)).unwrap(),
            Decision::Blocked { shortfall: kb(1) }
        );
        // Blocked requests leave no trace: the same id is reusable.
        assert_eq!(link.admit(&req(1, 2, 155_500)).unwrap(), Decision::Admitted);
    }

    #[test]
    fn alloctc_top_class_can_take_the_whole_link() {
        let mut link = LinkState::new(alloctc_config(&table_bcs(), kb(622_000)).unwrap());
        assert_eq!(link.admit(&req(1, 2, 622_000)).unwrap(), Decision::Admitted);
        link.verify().unwrap();
    }

    #[test]
    fn blocked_leaves_state_unchanged() {
        let mut link = LinkState::new(mam_config(&table_bcs(), kb(622_000)).unwrap());
        link.admit(&req(1, 1, 100_000)).unwrap();
        let before = link.snapshot();
        assert!(matches!(
            link.admit(&req(2, 1, 200_000)).unwrap(),
            Decision::Blocked { .. }
        ));
        assert_eq!(link.snapshot(), before);
    }

    #[test]
    fn admit_then_release_restores_the_empty_state() {
        let mut link = LinkState::new(rdm_config(&table_bcs(), kb(622_000)).unwrap());
        let empty = link.snapshot();
        link.admit(&req(7, 0, 5000)).unwrap();
        let rec = link.release(LspId(7)).unwrap();
        assert_eq!(rec, ReleaseRecord { id: LspId(7), class: 0, bandwidth: kb(5000) });
        assert_eq!(link.snapshot(), empty);
    }

    #[test]
    fn released_load_migrates_back_into_own_bc() {
        let mut link = LinkState::new(rdm_config(&table_bcs(), kb(622_000)).unwrap());
        // Fill class 1 so it cannot lend, fill class 0's own BC, then borrow
        // 50 Mbps from class 2.
        link.admit(&req(1, 1, 217_700)).unwrap();
        link.admit(&req(2, 0, 198_800)).unwrap();
        link.admit(&req(3, 0, 50_000)).unwrap();
        link.admit(&req(4, 0, 50_000)).unwrap();
        assert_eq!(link.snapshot().loans.amount(0, 2), kb(50_000));
        // Releasing 50 Mbps of own-BC load re-homes the borrowed load: the
        // loan is returned and class 0's own BC absorbs everything.
        link.release(LspId(3)).unwrap();
        let snap = link.snapshot();
        assert_eq!(snap.loans.amount(0, 2), Bandwidth::ZERO);
        assert_eq!(snap.own[0], kb(248_800));
        assert_eq!(snap.totals[0], kb(248_800));
        link.verify().unwrap();
    }

    #[test]
    fn release_unknown_id_is_an_error() {
        let mut link = LinkState::new(mam_config(&table_bcs(), kb(622_000)).unwrap());
        let before = link.snapshot();
        assert_eq!(
            link.release(LspId(9)).unwrap_err(),
            AdmissionError::UnknownLspId(LspId(9))
        );
        assert_eq!(link.snapshot(), before);
    }

    #[test]
    fn ids_are_never_reused_after_release() {
        let mut link = LinkState::new(mam_config(&table_bcs(), kb(622_000)).unwrap());
        link.admit(&req(1, 0, 10)).unwrap();
        assert_eq!(
            link.admit(&req(1, 1, 10)).unwrap_err(),
            AdmissionError::DuplicateLspId(LspId(1))
        );
        link.release(LspId(1)).unwrap();
        assert_eq!(
            link.admit(&req(1, 1, 10)).unwrap_err(),
            AdmissionError::DuplicateLspId(LspId(1))
        );
    }

    #[test]
    fn class_out_of_range_is_an_error() {
        let mut link = LinkState::new(mam_config(&table_bcs(), kb(622_000)).unwrap());
        assert_eq!(
            link.admit(&req(1, 3, 10)).unwrap_err(),
            AdmissionError::ClassOutOfRange { class: 3, class_count: 3 }
        );
    }

    #[test]
    fn zero_bandwidth_requests_are_recorded_noops() {
        let mut link = LinkState::new(mam_config(&table_bcs(), kb(622_000)).unwrap());
        link.admit(&req(1, 0, 248_800)).unwrap();
        // Even a full class still admits a zero-bandwidth LSP.
        assert_eq!(link.admit(&req(2, 0, 0)).unwrap(), Decision::Admitted);
        assert_eq!(link.totals()[0], kb(248_800));
        link.release(LspId(2)).unwrap();
        assert_eq!(link.lsp_count(), 1);
    }

    #[test]
    fn snapshot_reports_canonical_packing_and_residuals() {
        let mut link = LinkState::new(rdm_config(&table_bcs(), kb(622_000)).unwrap());
        link.admit(&req(1, 0, 373_200)).unwrap();
        let snap = link.snapshot();
        assert_eq!(snap.own[0], kb(248_800));
        assert_eq!(snap.loans.amount(0, 1), kb(124_400));
        assert_eq!(snap.loanable_htl[1], kb(93_300));
        let total: Bandwidth = snap.totals.iter().copied().sum();
        assert_eq!(total + snap.free, kb(622_000));
    }

    #[test]
    fn headroom_matches_admission_boundary() {
        let mut link = LinkState::new(rdm_config(&table_bcs(), kb(622_000)).unwrap());
        link.admit(&req(1, 2, 100_000)).unwrap();
        let h = link.headroom(0);
        assert_eq!(link.admit(&req(2, 0, h.kbps())).unwrap(), Decision::Admitted);
        assert!(matches!(
            link.admit(&req(3, 0, 1)).unwrap(),
            Decision::Blocked { .. }
        ));
    }

    #[test]
    fn mam_config_never_creates_loans() {
        let mut link = LinkState::new(mam_config(&table_bcs(), kb(622_000)).unwrap());
        for (i, bc) in TABLE.iter().enumerate() {
            link.admit(&req(i as u64, i, *bc)).unwrap();
        }
        assert!(link.snapshot().loans.is_zero());
        link.verify().unwrap();
    }
}
