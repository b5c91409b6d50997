//! Deterministic discrete-event workload generation and simulation.
//!
//! A [`Scenario`] describes per-class arrival processes (exponential
//! interarrivals after a fixed start delay, uniformly distributed request
//! sizes, exponential holding times) over one link configuration.
//! [`generate_workload`] expands it into a merged, time-ordered arrival
//! stream; [`run`] feeds that stream through an admission engine, scheduling
//! a departure for every admitted LSP, and records a [`SimTrace`].
//!
//! Determinism: draws come from ChaCha8 with one dedicated stream per
//! (class, variate kind), so the same (scenario, seed) pair reproduces the
//! same workload byte for byte and adding a class never perturbs another
//! class's draws. Exponential sampling uses inversion with a pure-Rust `ln`,
//! keeping sequences identical across platforms. Blocked requests are
//! dropped, never retried.

use crate::admission::{AdmissionEngine, Decision, LspId, LspRequest};
use crate::bandwidth::Bandwidth;
use crate::link::LinkState;
use crate::model::{validate_config, BamConfig, ClassConfig};
use crate::oracle::{OracleModel, OracleState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use thiserror::Error;

/// Arrival process of one traffic class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassWorkload {
    /// Mean of the exponential interarrival gap, seconds.
    pub interarrival_mean_s: f64,
    /// Offset added to every arrival of this class, seconds.
    pub start_delay_s: f64,
    /// Number of LSP requests this class offers.
    pub count: u64,
    pub bandwidth_min: Bandwidth,
    pub bandwidth_max: Bandwidth,
    /// Mean of the exponential LSP lifetime, seconds.
    pub holding_mean_s: f64,
}

impl ClassWorkload {
    fn validate(&self, class: usize) -> Result<(), SimError> {
        if !(self.interarrival_mean_s >= 0.0)
            || !(self.start_delay_s >= 0.0)
            || !(self.holding_mean_s >= 0.0)
        {
            return Err(SimError::InvalidScenario(format!(
                "class {class}: workload times must be finite and non-negative"
            )));
        }
        if self.bandwidth_min > self.bandwidth_max {
            return Err(SimError::InvalidScenario(format!(
                "class {class}: bandwidth_min exceeds bandwidth_max"
            )));
        }
        Ok(())
    }
}

/// A complete simulation description: link configuration, per-class
/// workloads, seed, and an optional cap on processed requests.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub capacity: Bandwidth,
    pub classes: Vec<ClassConfig>,
    pub workloads: Vec<ClassWorkload>,
    pub seed: u64,
    /// Stop offering new arrivals after this many have been served or
    /// blocked; admitted LSPs still run to departure. `None` processes all.
    pub max_requests: Option<u64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let cfg = self.bam_config()?;
        if self.workloads.len() != cfg.class_count() {
            return Err(SimError::InvalidScenario(format!(
                "{} workloads for {} classes",
                self.workloads.len(),
                cfg.class_count()
            )));
        }
        for (class, w) in self.workloads.iter().enumerate() {
            w.validate(class)?;
        }
        Ok(())
    }

    pub fn bam_config(&self) -> Result<BamConfig, SimError> {
        validate_config(self.capacity, self.classes.clone())
            .map_err(|errors| SimError::InvalidScenario(format!("invalid config: {errors:?}")))
    }

    /// The BC column, which is all the oracle engines use.
    pub fn bcs(&self) -> Vec<Bandwidth> {
        self.classes.iter().map(|c| c.bc).collect()
    }
}

/// Which engine a simulation drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EngineKind {
    /// The G-BAM link allocator under the scenario's own configuration.
    Gbam,
    Mam,
    Rdm,
    AllocTc,
}

impl EngineKind {
    pub fn label(&self) -> &'static str {
        match self {
            EngineKind::Gbam => "gbam",
            EngineKind::Mam => "mam",
            EngineKind::Rdm => "rdm",
            EngineKind::AllocTc => "alloctc",
        }
    }
}

/// Builds the engine a scenario should drive. Oracle engines take only the
/// BC column and capacity; the G-BAM engine takes the full configuration.
pub fn build_engine(
    scenario: &Scenario,
    kind: EngineKind,
) -> Result<Box<dyn AdmissionEngine>, SimError> {
    Ok(match kind {
        EngineKind::Gbam => Box::new(LinkState::new(scenario.bam_config()?)),
        EngineKind::Mam => Box::new(OracleState::new(
            OracleModel::Mam,
            scenario.bcs(),
            scenario.capacity,
        )),
        EngineKind::Rdm => Box::new(OracleState::new(
            OracleModel::Rdm,
            scenario.bcs(),
            scenario.capacity,
        )),
        EngineKind::AllocTc => Box::new(OracleState::new(
            OracleModel::AllocTc,
            scenario.bcs(),
            scenario.capacity,
        )),
    })
}

#[derive(Clone, Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("engine contract violation (a bug, not a workload condition): {0}")]
    Engine(#[from] crate::admission::AdmissionError),
    #[error("engine invariant violated at t={time}: {detail}")]
    InvariantViolation { time: f64, detail: String },
}

/// One generated LSP arrival.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrivalSpec {
    pub time: f64,
    pub class: usize,
    pub bandwidth: Bandwidth,
    pub holding_s: f64,
}

const STREAM_INTERARRIVAL: u64 = 0;
const STREAM_BANDWIDTH: u64 = 1;
const STREAM_HOLDING: u64 = 2;

fn class_rng(seed: u64, class: usize, variate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(class as u64 * 3 + variate);
    rng
}

/// Inversion sampling; `u` is uniform on [0, 1). `libm` keeps the result
/// bit-identical across platforms.
fn exp_draw(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let u: f64 = rng.gen();
    -mean * libm::log(1.0 - u)
}

/// Expands a scenario into the merged, time-ordered arrival stream.
///
/// Per class, arrival `k` happens at `start_delay + sum of k exponential
/// gaps`; size is uniform on `[bandwidth_min, bandwidth_max]` at 1 kbps
/// granularity; lifetime is exponential. Ties across classes break by class
/// index, then draw order.
pub fn generate_workload(scenario: &Scenario, seed: u64) -> Result<Vec<ArrivalSpec>, SimError> {
    scenario.validate()?;
    let mut arrivals: Vec<(ArrivalSpec, usize, u64)> = Vec::new();
    for (class, w) in scenario.workloads.iter().enumerate() {
        let mut gaps = class_rng(seed, class, STREAM_INTERARRIVAL);
        let mut sizes = class_rng(seed, class, STREAM_BANDWIDTH);
        let mut lifetimes = class_rng(seed, class, STREAM_HOLDING);
        let mut clock = w.start_delay_s;
        for k in 0..w.count {
            clock += exp_draw(&mut gaps, w.interarrival_mean_s);
            let bandwidth = Bandwidth::from_kbps(
                sizes.gen_range(w.bandwidth_min.kbps()..=w.bandwidth_max.kbps()),
            );
            let holding_s = exp_draw(&mut lifetimes, w.holding_mean_s);
            arrivals.push((ArrivalSpec { time: clock, class, bandwidth, holding_s }, class, k));
        }
    }
    arrivals.sort_by(|(a, ca, ka), (b, cb, kb)| {
        a.time
            .total_cmp(&b.time)
            .then(ca.cmp(cb))
            .then(ka.cmp(kb))
    });
    Ok(arrivals.into_iter().map(|(a, _, _)| a).collect())
}

/// What happened at one trace instant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Arrival,
    Departure,
}

/// One simulation event with the post-event engine state.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub kind: EventKind,
    pub id: LspId,
    pub class: usize,
    pub bandwidth: Bandwidth,
    /// Admission outcome; `None` for departures.
    pub decision: Option<Decision>,
    /// Per-class totals after the event.
    pub totals: Vec<Bandwidth>,
    /// Per-class bandwidth borrowed downward/upward after the event
    /// (all zero for engines that do not track loans).
    pub borrowed_htl: Vec<Bandwidth>,
    pub borrowed_lth: Vec<Bandwidth>,
}

/// Timestamped event log of one simulation run.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTrace {
    pub scenario: String,
    pub engine: String,
    pub seed: u64,
    pub capacity: Bandwidth,
    pub class_count: usize,
    pub records: Vec<TraceRecord>,
}

/// A pending departure. Orders by (time, class, sequence) so equal-time
/// departures process in ascending class order.
#[derive(Clone, Copy, Debug)]
struct Departure {
    time: f64,
    class: usize,
    seq: u64,
    id: LspId,
    bandwidth: Bandwidth,
}

impl PartialEq for Departure {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Departure {}
impl PartialOrd for Departure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Departure {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the earliest first.
        other
            .time
            .total_cmp(&self.time)
            .then(other.class.cmp(&self.class))
            .then(other.seq.cmp(&self.seq))
    }
}

/// Runs a scenario against the selected engine kind.
pub fn run(scenario: &Scenario, kind: EngineKind) -> Result<SimTrace, SimError> {
    let mut engine = build_engine(scenario, kind)?;
    run_engine(scenario, kind.label(), engine.as_mut())
}

/// Runs a scenario against an already-built engine.
///
/// Events process in time order; at equal timestamps departures precede
/// arrivals (freed capacity is visible to the competing request), and each
/// kind breaks remaining ties by class index. Every admitted arrival
/// schedules a departure at `time + holding`. The run ends when all arrivals
/// are processed and all admitted LSPs have departed. Engine invariants are
/// checked after every event.
pub fn run_engine(
    scenario: &Scenario,
    engine_label: &str,
    engine: &mut dyn AdmissionEngine,
) -> Result<SimTrace, SimError> {
    let arrivals = generate_workload(scenario, scenario.seed)?;
    let offered_cap = scenario.max_requests.unwrap_or(u64::MAX);
    let mut departures: BinaryHeap<Departure> = BinaryHeap::new();
    let mut records = Vec::with_capacity(arrivals.len() * 2);
    let mut arrivals = arrivals.into_iter();
    let mut next_arrival = arrivals.next();
    let mut offered: u64 = 0;
    let mut next_id: u64 = 0;

    loop {
        if offered >= offered_cap {
            next_arrival = None;
        }
        let take_departure = match (departures.peek(), &next_arrival) {
            (Some(dep), Some(arr)) => dep.time <= arr.time,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        let (time, kind, id, class, bandwidth, decision) = if take_departure {
            let dep = departures.pop().expect("peeked departure");
            engine.release(dep.id)?;
            (dep.time, EventKind::Departure, dep.id, dep.class, dep.bandwidth, None)
        } else {
            let arr = next_arrival.take().expect("checked arrival");
            next_arrival = arrivals.next();
            offered += 1;
            let id = LspId(next_id);
            next_id += 1;
            let req = LspRequest { id, class: arr.class, bandwidth: arr.bandwidth };
            let decision = engine.admit(&req)?;
            if decision.is_admitted() {
                departures.push(Departure {
                    time: arr.time + arr.holding_s,
                    class: arr.class,
                    seq: id.0,
                    id,
                    bandwidth: arr.bandwidth,
                });
            }
            (arr.time, EventKind::Arrival, id, arr.class, arr.bandwidth, Some(decision))
        };
        let n = engine.class_count();
        let (borrowed_htl, borrowed_lth) = engine
            .loan_breakdown()
            .unwrap_or_else(|| (vec![Bandwidth::ZERO; n], vec![Bandwidth::ZERO; n]));
        engine
            .verify_invariants()
            .map_err(|detail| SimError::InvariantViolation { time, detail })?;
        records.push(TraceRecord {
            time,
            kind,
            id,
            class,
            bandwidth,
            decision,
            totals: engine.totals().to_vec(),
            borrowed_htl,
            borrowed_lth,
        });
    }

    Ok(SimTrace {
        scenario: scenario.name.clone(),
        engine: engine_label.to_string(),
        seed: scenario.seed,
        capacity: scenario.capacity,
        class_count: engine.class_count(),
        records,
    })
}

const STM4_KBPS: u64 = 622_000;
const TABLE_BC_KBPS: [u64; 3] = [248_800, 217_700, 155_500];

fn reference_scenario(name: &str, delays: [f64; 3], count_per_class: u64, seed: u64) -> Scenario {
    let classes = TABLE_BC_KBPS
        .iter()
        .map(|&bc| ClassConfig::new(Bandwidth::from_kbps(bc), Bandwidth::ZERO, Bandwidth::ZERO))
        .collect();
    let workloads = delays
        .iter()
        .map(|&start_delay_s| ClassWorkload {
            interarrival_mean_s: 3.0,
            start_delay_s,
            count: count_per_class,
            bandwidth_min: Bandwidth::from_kbps(5_000),
            bandwidth_max: Bandwidth::from_kbps(10_000),
            holding_mean_s: 250.0,
        })
        .collect();
    Scenario {
        name: name.to_string(),
        capacity: Bandwidth::from_kbps(STM4_KBPS),
        classes,
        workloads,
        seed,
        max_requests: None,
    }
}

/// Reference saturation scenario: all classes offer ~625 Mbps on a 622 Mbps
/// link; the low-priority class starts first, higher classes join at 800 s
/// and 1400 s. Class caps default to zero (MAM); pick the engine or
/// configuration per run.
pub fn scenario_01(count_per_class: u64, seed: u64) -> Scenario {
    reference_scenario("scenario01", [0.0, 800.0, 1400.0], count_per_class, seed)
}

/// Mirror of [`scenario_01`]: the high-priority class starts first, lower
/// classes join at 800 s and 1400 s.
pub fn scenario_02(count_per_class: u64, seed: u64) -> Scenario {
    reference_scenario("scenario02", [1400.0, 800.0, 0.0], count_per_class, seed)
}
