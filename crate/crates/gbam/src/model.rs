//! The G-BAM parameter model: per-class bandwidth constraints, loan caps,
//! validation, and the derived allocation bounds.
//!
//! A link of capacity `M` is divided among up to [`MAX_CLASSES`] traffic
//! classes. Class index 0 is best effort; a higher index means higher
//! priority. Each class `i` carries three configured quantities:
//!
//! * `bc` — the class's bandwidth constraint `BC_i`,
//! * `htl_cap` — how much of `BC_i` may be lent *downward* to lower-priority
//!   classes ("high to low"),
//! * `lth_cap` — how much of `BC_i` may be lent *upward* to higher-priority
//!   classes ("low to high").
//!
//! The non-lendable remainder `BC_i - max(htl_cap, lth_cap)` is the class's
//! private bandwidth. Setting both caps to zero everywhere yields MAM
//! behavior (full isolation); full `htl_cap` yields RDM; full caps in both
//! directions yield AllocTC-Sharing. The factory functions in this module
//! build those configurations from a plain BC table.

use crate::bandwidth::Bandwidth;
use std::fmt;
use thiserror::Error;

/// DS-TE defines at most eight traffic classes per link.
pub const MAX_CLASSES: usize = 8;

/// Direction of a bandwidth loan, from the lender's point of view.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LoanDirection {
    /// Lend downward: a higher-priority class's bandwidth serves a lower one.
    HighToLow,
    /// Lend upward: a lower-priority class's bandwidth serves a higher one.
    LowToHigh,
}

impl fmt::Display for LoanDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoanDirection::HighToLow => write!(f, "HTL"),
            LoanDirection::LowToHigh => write!(f, "LTH"),
        }
    }
}

/// Per-class configuration: bandwidth constraint plus the two loan caps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassConfig {
    pub bc: Bandwidth,
    pub htl_cap: Bandwidth,
    pub lth_cap: Bandwidth,
}

impl ClassConfig {
    pub fn new(bc: Bandwidth, htl_cap: Bandwidth, lth_cap: Bandwidth) -> Self {
        ClassConfig { bc, htl_cap, lth_cap }
    }

    /// The portion of `bc` that can never be lent to another class.
    pub fn private(&self) -> Bandwidth {
        self.bc - self.htl_cap.max(self.lth_cap)
    }

    fn cap(&self, direction: LoanDirection) -> Bandwidth {
        match direction {
            LoanDirection::HighToLow => self.htl_cap,
            LoanDirection::LowToHigh => self.lth_cap,
        }
    }
}

/// A configuration rule violation found by [`validate_config`].
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("class list is empty")]
    EmptyClassList,
    #[error("{count} classes configured, at most {MAX_CLASSES} supported")]
    TooManyClasses { count: usize },
    #[error("sum of bandwidth constraints ({sum_kbps} kbps) exceeds link capacity ({capacity} kbps)")]
    SumExceedsCapacity { sum_kbps: u128, capacity: Bandwidth },
    #[error("class {class}: {direction} cap {cap} kbps exceeds bc {bc} kbps")]
    CapExceedsBc {
        class: usize,
        direction: LoanDirection,
        cap: Bandwidth,
        bc: Bandwidth,
    },
    #[error("class {class}: private share {private} kbps exceeds bc {bc} kbps")]
    PrivateExceedsBc {
        class: usize,
        private: Bandwidth,
        bc: Bandwidth,
    },
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// A validated link configuration: capacity plus the ordered class table.
///
/// Instances can only be produced by [`validate_config`] or the factory
/// functions, so every `BamConfig` satisfies the structural rules: the BC
/// sum fits the capacity and no loan cap exceeds its class's BC.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BamConfig {
    capacity: Bandwidth,
    classes: Vec<ClassConfig>,
}

/// Validates raw capacity and class values into a [`BamConfig`].
///
/// Total: every input yields either a valid configuration or a non-empty
/// list holding *all* violated rules, not just the first.
pub fn validate_config(
    capacity: Bandwidth,
    classes: Vec<ClassConfig>,
) -> Result<BamConfig, Vec<ConfigError>> {
    let mut errors = Vec::new();
    if classes.is_empty() {
        return Err(vec![ConfigError::EmptyClassList]);
    }
    if classes.len() > MAX_CLASSES {
        errors.push(ConfigError::TooManyClasses { count: classes.len() });
    }
    let sum: u128 = classes.iter().map(|c| c.bc.kbps() as u128).sum();
    if sum > capacity.kbps() as u128 {
        errors.push(ConfigError::SumExceedsCapacity { sum_kbps: sum, capacity });
    }
    for (i, class) in classes.iter().enumerate() {
        for direction in [LoanDirection::HighToLow, LoanDirection::LowToHigh] {
            let cap = class.cap(direction);
            if cap > class.bc {
                errors.push(ConfigError::CapExceedsBc {
                    class: i,
                    direction,
                    cap,
                    bc: class.bc,
                });
            }
        }
    }
    if errors.is_empty() {
        Ok(BamConfig { capacity, classes })
    } else {
        Err(errors)
    }
}

impl BamConfig {
    pub fn capacity(&self) -> Bandwidth {
        self.capacity
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[ClassConfig] {
        &self.classes
    }

    pub fn class(&self, class: usize) -> &ClassConfig {
        &self.classes[class]
    }

    pub fn bc(&self, class: usize) -> Bandwidth {
        self.classes[class].bc
    }

    pub fn htl_cap(&self, class: usize) -> Bandwidth {
        self.classes[class].htl_cap
    }

    pub fn lth_cap(&self, class: usize) -> Bandwidth {
        self.classes[class].lth_cap
    }

    /// Bandwidth of `class` that can never serve another class:
    /// `BC - max(htl_cap, lth_cap)`.
    pub fn private_bandwidth(&self, class: usize) -> Bandwidth {
        self.classes[class].private()
    }

    /// Design-time upper bound on a class's total allocation: its own BC plus
    /// every downward cap above it and every upward cap below it.
    ///
    /// This is the raw bound; it is deliberately not clamped to the link
    /// capacity (see [`BamConfig::effective_max_allocation`]).
    pub fn static_max_allocation(&self, class: usize) -> Bandwidth {
        let bc = self.classes[class].bc;
        let above: Bandwidth = self.classes[class + 1..].iter().map(|c| c.htl_cap).sum();
        let below: Bandwidth = self.classes[..class].iter().map(|c| c.lth_cap).sum();
        bc + above + below
    }

    /// The static bound clamped to what the link can physically carry.
    pub fn effective_max_allocation(&self, class: usize) -> Bandwidth {
        self.static_max_allocation(class).min(self.capacity)
    }

    /// Bandwidth `class` can still lend in `direction`, given its own-BC
    /// usage and the amount already lent out in that direction:
    /// `max(0, min(cap, BC - max(private, own_usage)) - already_lent)`.
    ///
    /// With nothing lent and nothing borrowed this is exactly the class's
    /// disposable loan pool. `own_usage` counts only load served from the
    /// class's own BC, so it can never exceed `bc`; passing a larger value is
    /// a contract violation and panics.
    pub fn loanable(
        &self,
        class: usize,
        own_usage: Bandwidth,
        already_lent: Bandwidth,
        direction: LoanDirection,
    ) -> Bandwidth {
        let cfg = &self.classes[class];
        assert!(
            own_usage <= cfg.bc,
            "own usage {} exceeds bc {} for class {class}",
            own_usage,
            cfg.bc
        );
        let unused = cfg.bc - cfg.private().max(own_usage);
        cfg.cap(direction).min(unused).saturating_sub(already_lent)
    }

    /// Runtime upper bound on a class's total allocation given the current
    /// per-class usage: its own BC plus every other class's remaining
    /// loanable pool in the direction that can reach it.
    ///
    /// On an empty link this equals [`BamConfig::static_max_allocation`].
    pub fn dynamic_bound(&self, usage: &[ClassUsage], class: usize) -> Bandwidth {
        assert_eq!(
            usage.len(),
            self.classes.len(),
            "usage vector length mismatch"
        );
        let mut bound = self.classes[class].bc;
        for (j, u) in usage.iter().enumerate() {
            if j > class {
                bound += self.loanable(j, u.own, u.lent_htl, LoanDirection::HighToLow);
            } else if j < class {
                bound += self.loanable(j, u.own, u.lent_lth, LoanDirection::LowToHigh);
            }
        }
        bound
    }
}

/// Per-class usage summary consumed by [`BamConfig::dynamic_bound`]: load
/// served from the class's own BC and bandwidth already lent out per
/// direction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassUsage {
    pub own: Bandwidth,
    pub lent_htl: Bandwidth,
    pub lent_lth: Bandwidth,
}

impl ClassUsage {
    pub fn own(own: Bandwidth) -> Self {
        ClassUsage { own, ..Default::default() }
    }
}

/// MAM behavior: every cap zero, every class fully private.
pub fn mam_config(bcs: &[Bandwidth], capacity: Bandwidth) -> Result<BamConfig, Vec<ConfigError>> {
    let classes = bcs
        .iter()
        .map(|&bc| ClassConfig::new(bc, Bandwidth::ZERO, Bandwidth::ZERO))
        .collect();
    validate_config(capacity, classes)
}

/// RDM behavior: every class above the bottom lends its full BC downward;
/// nothing is lent upward. Only class 0 keeps a private share.
pub fn rdm_config(bcs: &[Bandwidth], capacity: Bandwidth) -> Result<BamConfig, Vec<ConfigError>> {
    let classes = bcs
        .iter()
        .enumerate()
        .map(|(i, &bc)| {
            let htl = if i == 0 { Bandwidth::ZERO } else { bc };
            ClassConfig::new(bc, htl, Bandwidth::ZERO)
        })
        .collect();
    validate_config(capacity, classes)
}

/// AllocTC-Sharing behavior: full caps in both directions, zero private
/// bandwidth everywhere (for two or more classes). The bottom class has no
/// one below it to lend to and the top class no one above, so those boundary
/// caps stay zero.
pub fn alloctc_config(
    bcs: &[Bandwidth],
    capacity: Bandwidth,
) -> Result<BamConfig, Vec<ConfigError>> {
    let last = bcs.len().saturating_sub(1);
    let classes = bcs
        .iter()
        .enumerate()
        .map(|(i, &bc)| {
            let htl = if i == 0 { Bandwidth::ZERO } else { bc };
            let lth = if i == last { Bandwidth::ZERO } else { bc };
            ClassConfig::new(bc, htl, lth)
        })
        .collect();
    validate_config(capacity, classes)
}

/// Hybrid behavior: downward lending like RDM, but each class keeps a
/// configurable private share. `privates = bcs` degenerates to MAM,
/// `privates = 0` to RDM.
pub fn grdm_config(
    bcs: &[Bandwidth],
    privates: &[Bandwidth],
    capacity: Bandwidth,
) -> Result<BamConfig, Vec<ConfigError>> {
    if privates.len() != bcs.len() {
        return Err(vec![ConfigError::LengthMismatch {
            expected: bcs.len(),
            got: privates.len(),
        }]);
    }
    let mut errors = Vec::new();
    let mut classes = Vec::with_capacity(bcs.len());
    for (i, (&bc, &private)) in bcs.iter().zip(privates).enumerate() {
        let htl = match bc.checked_sub(private) {
            Some(h) if i > 0 => h,
            Some(_) => Bandwidth::ZERO,
            None => {
                errors.push(ConfigError::PrivateExceedsBc { class: i, private, bc });
                Bandwidth::ZERO
            }
        };
        classes.push(ClassConfig::new(bc, htl, Bandwidth::ZERO));
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    validate_config(capacity, classes)
}
