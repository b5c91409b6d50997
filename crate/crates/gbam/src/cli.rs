//! Scenario file format and the command implementations behind the `gbam`
//! binary.
//!
//! Scenario files are strict JSON: unknown keys are rejected so a typo in a
//! cap field cannot silently configure the wrong model. Bandwidth fields
//! come in exactly one of two forms, absolute (`*_kbps`) or integer percent
//! of capacity (`*_percent`); percent values must convert to whole kbps or
//! the file is rejected. When a `factory` is named, the loan caps are derived
//! from the BC column and explicit cap keys are forbidden (`grdm`
//! additionally requires a per-class `private_*` share). Workload fields
//! default to the reference parameters: interarrival mean 3 s, start delay
//! 0 s, 1000 requests, sizes uniform on 5000..=10000 kbps, holding mean
//! 250 s.

use crate::bandwidth::Bandwidth;
use crate::model::{
    alloctc_config, grdm_config, mam_config, rdm_config, validate_config, BamConfig, ClassConfig,
    ConfigError,
};
use crate::metrics::{config_digest, export_csv, fold_trace, MetricsError, RunMeta, RunSummary};
use crate::sim::{self, ClassWorkload, EngineKind, Scenario, SimTrace};
use serde::Deserialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

const DEFAULT_INTERARRIVAL_S: f64 = 3.0;
const DEFAULT_START_DELAY_S: f64 = 0.0;
const DEFAULT_COUNT: u64 = 1000;
const DEFAULT_BANDWIDTH_MIN_KBPS: u64 = 5_000;
const DEFAULT_BANDWIDTH_MAX_KBPS: u64 = 10_000;
const DEFAULT_HOLDING_S: f64 = 250.0;

/// Errors carry their exit code: 1 for validation/equivalence failures,
/// 2 for usage, parse and I/O problems.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration:\n{}", render_config_errors(.0))]
    InvalidConfig(Vec<ConfigError>),
    #[error("{0}")]
    Run(String),
    #[error("{report}")]
    NotEquivalent { report: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } | CliError::Parse { .. } => 2,
            CliError::InvalidConfig(_) | CliError::Run(_) | CliError::NotEquivalent { .. } => 1,
        }
    }
}

fn render_config_errors(errors: &[ConfigError]) -> String {
    errors.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    capacity_kbps: u64,
    #[serde(default)]
    factory: Option<String>,
    classes: Vec<ClassEntry>,
    #[serde(default)]
    workloads: Option<Vec<WorkloadEntry>>,
    seed: u64,
    #[serde(default)]
    max_requests: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassEntry {
    #[serde(default)]
    bc_kbps: Option<u64>,
    #[serde(default)]
    bc_percent: Option<u64>,
    #[serde(default)]
    htl_kbps: Option<u64>,
    #[serde(default)]
    htl_percent: Option<u64>,
    #[serde(default)]
    lth_kbps: Option<u64>,
    #[serde(default)]
    lth_percent: Option<u64>,
    #[serde(default)]
    private_kbps: Option<u64>,
    #[serde(default)]
    private_percent: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkloadEntry {
    #[serde(default)]
    interarrival_mean_s: Option<f64>,
    #[serde(default)]
    start_delay_s: Option<f64>,
    #[serde(default)]
    count: Option<u64>,
    #[serde(default)]
    bandwidth_min_kbps: Option<u64>,
    #[serde(default)]
    bandwidth_max_kbps: Option<u64>,
    #[serde(default)]
    holding_mean_s: Option<f64>,
}

/// Which factory derives the loan caps from the BC column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactoryKind {
    Mam,
    Rdm,
    AllocTc,
    Grdm,
}

impl FactoryKind {
    fn parse(name: &str) -> Option<FactoryKind> {
        match name {
            "mam" => Some(FactoryKind::Mam),
            "rdm" => Some(FactoryKind::Rdm),
            "alloctc" => Some(FactoryKind::AllocTc),
            "grdm" => Some(FactoryKind::Grdm),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            FactoryKind::Mam => "mam",
            FactoryKind::Rdm => "rdm",
            FactoryKind::AllocTc => "alloctc",
            FactoryKind::Grdm => "grdm",
        }
    }
}

/// Applies a factory to a BC table. `privates` is only meaningful for grdm.
pub fn factory_config(
    kind: FactoryKind,
    bcs: &[Bandwidth],
    privates: Option<&[Bandwidth]>,
    capacity: Bandwidth,
) -> Result<BamConfig, Vec<ConfigError>> {
    match kind {
        FactoryKind::Mam => mam_config(bcs, capacity),
        FactoryKind::Rdm => rdm_config(bcs, capacity),
        FactoryKind::AllocTc => alloctc_config(bcs, capacity),
        FactoryKind::Grdm => {
            let privates = privates.expect("grdm requires privates");
            grdm_config(bcs, privates, capacity)
        }
    }
}

/// A parsed and fully resolved scenario file.
#[derive(Clone, Debug)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub config: BamConfig,
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let file: ScenarioFile = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    resolve(file, path)
}

fn resolve(file: ScenarioFile, path: &Path) -> Result<LoadedScenario, CliError> {
    let parse_err = |message: String| CliError::Parse { path: path.to_path_buf(), message };
    let capacity_kbps = file.capacity_kbps;
    let capacity = Bandwidth::from_kbps(capacity_kbps);
    let factory = match &file.factory {
        None => None,
        Some(name) => Some(
            FactoryKind::parse(name)
                .ok_or_else(|| parse_err(format!("unknown factory \"{name}\"")))?,
        ),
    };

    let field = |kbps: Option<u64>, percent: Option<u64>, key: &str, class: usize| {
        match (kbps, percent) {
            (Some(_), Some(_)) => Err(parse_err(format!(
                "class {class}: {key}_kbps and {key}_percent are mutually exclusive"
            ))),
            (Some(v), None) => Ok(Some(v)),
            (None, Some(pct)) => {
                let scaled = capacity_kbps.checked_mul(pct).ok_or_else(|| {
                    parse_err(format!("class {class}: {key}_percent overflows"))
                })?;
                if scaled % 100 != 0 {
                    return Err(parse_err(format!(
                        "class {class}: {key}_percent {pct} of capacity {capacity_kbps} is not a whole kbps amount"
                    )));
                }
                Ok(Some(scaled / 100))
            }
            (None, None) => Ok(None),
        }
    };

    let mut bcs = Vec::with_capacity(file.classes.len());
    let mut htls = Vec::with_capacity(file.classes.len());
    let mut lths = Vec::with_capacity(file.classes.len());
    let mut privates = Vec::with_capacity(file.classes.len());
    for (i, entry) in file.classes.iter().enumerate() {
        let bc = field(entry.bc_kbps, entry.bc_percent, "bc", i)?
            .ok_or_else(|| parse_err(format!("class {i}: bc_kbps or bc_percent is required")))?;
        bcs.push(Bandwidth::from_kbps(bc));
        htls.push(field(entry.htl_kbps, entry.htl_percent, "htl", i)?);
        lths.push(field(entry.lth_kbps, entry.lth_percent, "lth", i)?);
        privates.push(field(entry.private_kbps, entry.private_percent, "private", i)?);
    }

    let config = match factory {
        Some(kind) => {
            if htls.iter().any(Option::is_some) || lths.iter().any(Option::is_some) {
                return Err(parse_err(format!(
                    "factory \"{}\" derives the loan caps; htl/lth keys must be absent",
                    kind.label()
                )));
            }
            let private_values: Option<Vec<Bandwidth>> = privates
                .iter()
                .map(|p| p.map(Bandwidth::from_kbps))
                .collect();
            match kind {
                FactoryKind::Grdm => {
                    let private_values = private_values.ok_or_else(|| {
                        parse_err("factory \"grdm\" requires a private share per class".into())
                    })?;
                    factory_config(kind, &bcs, Some(&private_values), capacity)
                }
                _ => {
                    if privates.iter().any(Option::is_some) {
                        return Err(parse_err(format!(
                            "factory \"{}\" takes no private keys",
                            kind.label()
                        )));
                    }
                    factory_config(kind, &bcs, None, capacity)
                }
            }
        }
        None => {
            if privates.iter().any(Option::is_some) {
                return Err(parse_err(
                    "private keys are only meaningful with factory \"grdm\"".into(),
                ));
            }
            let classes: Vec<ClassConfig> = (0..bcs.len())
                .map(|i| {
                    let htl = htls[i].ok_or_else(|| {
                        parse_err(format!("class {i}: htl_kbps or htl_percent is required without a factory"))
                    })?;
                    let lth = lths[i].ok_or_else(|| {
                        parse_err(format!("class {i}: lth_kbps or lth_percent is required without a factory"))
                    })?;
                    Ok(ClassConfig::new(
                        bcs[i],
                        Bandwidth::from_kbps(htl),
                        Bandwidth::from_kbps(lth),
                    ))
                })
                .collect::<Result<_, CliError>>()?;
            validate_config(capacity, classes)
        }
    }
    .map_err(CliError::InvalidConfig)?;

    let workloads: Vec<ClassWorkload> = match &file.workloads {
        None => vec![default_workload(); config.class_count()],
        Some(entries) => {
            if entries.len() != config.class_count() {
                return Err(parse_err(format!(
                    "{} workloads for {} classes",
                    entries.len(),
                    config.class_count()
                )));
            }
            entries.iter().map(resolve_workload).collect()
        }
    };

    let scenario = Scenario {
        name: file.name,
        capacity,
        classes: config.classes().to_vec(),
        workloads,
        seed: file.seed,
        max_requests: file.max_requests,
    };
    scenario
        .validate()
        .map_err(|e| parse_err(e.to_string()))?;
    Ok(LoadedScenario { scenario, config })
}

fn default_workload() -> ClassWorkload {
    ClassWorkload {
        interarrival_mean_s: DEFAULT_INTERARRIVAL_S,
        start_delay_s: DEFAULT_START_DELAY_S,
        count: DEFAULT_COUNT,
        bandwidth_min: Bandwidth::from_kbps(DEFAULT_BANDWIDTH_MIN_KBPS),
        bandwidth_max: Bandwidth::from_kbps(DEFAULT_BANDWIDTH_MAX_KBPS),
        holding_mean_s: DEFAULT_HOLDING_S,
    }
}

fn resolve_workload(entry: &WorkloadEntry) -> ClassWorkload {
    ClassWorkload {
        interarrival_mean_s: entry.interarrival_mean_s.unwrap_or(DEFAULT_INTERARRIVAL_S),
        start_delay_s: entry.start_delay_s.unwrap_or(DEFAULT_START_DELAY_S),
        count: entry.count.unwrap_or(DEFAULT_COUNT),
        bandwidth_min: Bandwidth::from_kbps(
            entry.bandwidth_min_kbps.unwrap_or(DEFAULT_BANDWIDTH_MIN_KBPS),
        ),
        bandwidth_max: Bandwidth::from_kbps(
            entry.bandwidth_max_kbps.unwrap_or(DEFAULT_BANDWIDTH_MAX_KBPS),
        ),
        holding_mean_s: entry.holding_mean_s.unwrap_or(DEFAULT_HOLDING_S),
    }
}

/// Renders the per-class parameter table and allocation bounds of a
/// configuration.
pub fn render_config_report(config: &BamConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "capacity: {} kbps ({} Mbps)", config.capacity(), config.capacity().mbps_string());
    let _ = writeln!(
        out,
        "{:<6} {:>12} {:>12} {:>12} {:>14}",
        "class", "bc_kbps", "htl_kbps", "lth_kbps", "private_kbps"
    );
    for (i, class) in config.classes().iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<6} {:>12} {:>12} {:>12} {:>14}",
            format!("TC{i}"),
            class.bc,
            class.htl_cap,
            class.lth_cap,
            config.private_bandwidth(i)
        );
    }
    let _ = writeln!(out, "{:<6} {:>12} {:>16}", "class", "max_kbps", "effective_kbps");
    for i in 0..config.class_count() {
        let _ = writeln!(
            out,
            "{:<6} {:>12} {:>16}",
            format!("TC{i}"),
            config.static_max_allocation(i),
            config.effective_max_allocation(i)
        );
    }
    out
}

/// `validate` command: parse, resolve and validate a scenario file, and
/// print its derived parameter table.
pub fn cmd_validate(path: &Path) -> Result<String, CliError> {
    let loaded = load_scenario(path)?;
    let mut out = format!("{}: valid\n", path.display());
    out.push_str(&render_config_report(&loaded.config));
    Ok(out)
}

fn render_summary(summary: &RunSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:>8} {:>9} {:>8} {:>15} {:>14} {:>14} {:>12}",
        "class", "offered", "admitted", "blocked", "blocking_ratio", "avg_load_kbps", "peak_kbps", "utilization"
    );
    let mut rows: Vec<(String, &crate::metrics::ClassSummary)> = summary
        .per_class
        .iter()
        .enumerate()
        .map(|(i, s)| (format!("TC{i}"), s))
        .collect();
    rows.push(("all".to_string(), &summary.link));
    for (label, s) in rows {
        let _ = writeln!(
            out,
            "{:<6} {:>8} {:>9} {:>8} {:>15.4} {:>14.1} {:>14} {:>12.4}",
            label,
            s.offered,
            s.admitted,
            s.blocked,
            s.blocking_ratio,
            s.avg_load_kbps,
            s.peak_load,
            s.utilization
        );
    }
    out
}

/// `run` command: simulate a scenario on the selected engine, export the
/// CSVs and return the printable run summary.
pub fn cmd_run(
    path: &Path,
    engine: EngineKind,
    seed_override: Option<u64>,
    out_dir: &Path,
) -> Result<String, CliError> {
    let mut loaded = load_scenario(path)?;
    if let Some(seed) = seed_override {
        loaded.scenario.seed = seed;
    }
    let trace = sim::run(&loaded.scenario, engine).map_err(|e| CliError::Run(e.to_string()))?;
    let (series, summary) = fold_trace(&trace).map_err(|e| CliError::Run(e.to_string()))?;
    let meta = RunMeta {
        scenario: loaded.scenario.name.clone(),
        seed: loaded.scenario.seed,
        engine: engine.label().to_string(),
        config_digest: config_digest(&loaded.config),
    };
    let files = export_csv(&series, &summary, &meta, out_dir).map_err(|e| match e {
        MetricsError::Export { path, message } => CliError::Io { path, message },
        other => CliError::Run(other.to_string()),
    })?;
    let mut out = render_summary(&summary);
    let _ = writeln!(
        out,
        "wrote {}, {}, {}",
        files.load.display(),
        files.summary.display(),
        files.meta.display()
    );
    Ok(out)
}

/// One `gbam:<factory>=<oracle>` comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComparePair {
    pub factory: FactoryKind,
    pub oracle: EngineKind,
}

impl ComparePair {
    pub fn label(&self) -> String {
        format!("gbam:{}={}", self.factory.label(), self.oracle.label())
    }
}

/// Parses a comma-separated pair list such as
/// `gbam:mam=mam,gbam:rdm=rdm,gbam:alloctc=alloctc`.
pub fn parse_pairs(spec: &str) -> Result<Vec<ComparePair>, CliError> {
    let mut pairs = Vec::new();
    for item in spec.split(',').filter(|s| !s.is_empty()) {
        let (left, right) = item
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("pair \"{item}\" is not <engine>=<oracle>")))?;
        let factory_name = left
            .strip_prefix("gbam:")
            .ok_or_else(|| CliError::Usage(format!("pair \"{item}\" must start with gbam:<factory>")))?;
        let factory = FactoryKind::parse(factory_name)
            .filter(|f| *f != FactoryKind::Grdm)
            .ok_or_else(|| {
                CliError::Usage(format!("\"{factory_name}\" is not a comparable factory"))
            })?;
        let oracle = match right {
            "mam" => EngineKind::Mam,
            "rdm" => EngineKind::Rdm,
            "alloctc" => EngineKind::AllocTc,
            other => return Err(CliError::Usage(format!("\"{other}\" is not an oracle engine"))),
        };
        pairs.push(ComparePair { factory, oracle });
    }
    Ok(pairs)
}

fn arrival_decisions(trace: &SimTrace) -> Vec<(usize, &sim::TraceRecord)> {
    trace
        .records
        .iter()
        .filter(|r| r.kind == sim::EventKind::Arrival)
        .enumerate()
        .collect()
}

/// `compare` command: for every pair and seed, replays the identical
/// generated workload through the G-BAM engine (factory applied to the
/// scenario's BC column) and the oracle, and diffs the decision sequences.
pub fn cmd_compare(path: &Path, pairs: &[ComparePair], seeds: u64) -> Result<String, CliError> {
    let loaded = load_scenario(path)?;
    if seeds == 0 {
        return Ok("no runs (0 seeds requested)\n".to_string());
    }
    let bcs = loaded.scenario.bcs();
    let capacity = loaded.scenario.capacity;
    let mut report = String::new();
    let mut divergences = 0usize;
    for pair in pairs {
        let config = factory_config(pair.factory, &bcs, None, capacity)
            .map_err(CliError::InvalidConfig)?;
        let mut decisions_checked = 0usize;
        let mut first_divergence: Option<String> = None;
        for offset in 0..seeds {
            let mut scenario = loaded.scenario.clone();
            scenario.seed = loaded.scenario.seed.wrapping_add(offset);
            scenario.classes = config.classes().to_vec();
            let mut gbam_engine = crate::link::LinkState::new(config.clone());
            let gbam_trace =
                sim::run_engine(&scenario, &format!("gbam:{}", pair.factory.label()), &mut gbam_engine)
                    .map_err(|e| CliError::Run(e.to_string()))?;
            let oracle_trace =
                sim::run(&scenario, pair.oracle).map_err(|e| CliError::Run(e.to_string()))?;
            let ga = arrival_decisions(&gbam_trace);
            let oa = arrival_decisions(&oracle_trace);
            debug_assert_eq!(ga.len(), oa.len());
            for ((idx, g), (_, o)) in ga.iter().zip(oa.iter()) {
                decisions_checked += 1;
                if g.decision != o.decision {
                    if first_divergence.is_none() {
                        first_divergence = Some(format!(
                            "pair {}: DIVERGED at seed {} arrival {} (t={:.3}s, class {}, {} kbps)\n  gbam:   {:?} totals {:?}\n  oracle: {:?} totals {:?}\n",
                            pair.label(),
                            scenario.seed,
                            idx,
                            g.time,
                            g.class,
                            g.bandwidth,
                            g.decision.unwrap(),
                            g.totals,
                            o.decision.unwrap(),
                            o.totals
                        ));
                    }
                    break;
                }
            }
            if first_divergence.is_some() {
                break;
            }
        }
        match first_divergence {
            Some(detail) => {
                divergences += 1;
                report.push_str(&detail);
            }
            None => {
                let _ = writeln!(
                    report,
                    "pair {}: equivalent over {} seeds ({} decisions)",
                    pair.label(),
                    seeds,
                    decisions_checked
                );
            }
        }
    }
    if divergences > 0 {
        Err(CliError::NotEquivalent { report })
    } else {
        Ok(report)
    }
}

const REFERENCE_BC_KBPS: [u64; 3] = [248_800, 217_700, 155_500];
const REFERENCE_CAPACITY_KBPS: u64 = 622_000;

fn render_factory_section(out: &mut String, title: &str, config: &BamConfig) {
    let _ = writeln!(out, "== {title} ==");
    let _ = writeln!(
        out,
        "{:<6} {:>10} {:>9} {:>10} {:>9} {:>10} {:>9} {:>13} {:>12}",
        "class", "bc_kbps", "bc_mbps", "htl_kbps", "htl_mbps", "lth_kbps", "lth_mbps", "private_kbps", "private_mbps"
    );
    for (i, class) in config.classes().iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<6} {:>10} {:>9} {:>10} {:>9} {:>10} {:>9} {:>13} {:>12}",
            format!("TC{i}"),
            class.bc,
            class.bc.mbps_string(),
            class.htl_cap,
            class.htl_cap.mbps_string(),
            class.lth_cap,
            class.lth_cap.mbps_string(),
            config.private_bandwidth(i),
            config.private_bandwidth(i).mbps_string()
        );
    }
    let _ = writeln!(out, "{:<6} {:>10} {:>9}", "class", "max_kbps", "max_mbps");
    for i in 0..config.class_count() {
        let max = config.static_max_allocation(i);
        let _ = writeln!(out, "{:<6} {:>10} {:>9}", format!("TC{i}"), max, max.mbps_string());
    }
    let _ = writeln!(out);
}

/// `tables` command: derived configuration and max-allocation tables for the
/// three factory models over the reference BC set.
pub fn render_tables() -> String {
    let bcs: Vec<Bandwidth> = REFERENCE_BC_KBPS.iter().map(|&v| Bandwidth::from_kbps(v)).collect();
    let capacity = Bandwidth::from_kbps(REFERENCE_CAPACITY_KBPS);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Factory configurations for BCs 248800/217700/155500 kbps on a 622000 kbps link\n"
    );
    render_factory_section(
        &mut out,
        "MAM behavior (loan caps 0%)",
        &mam_config(&bcs, capacity).unwrap(),
    );
    render_factory_section(
        &mut out,
        "RDM behavior (HTL caps 100%)",
        &rdm_config(&bcs, capacity).unwrap(),
    );
    render_factory_section(
        &mut out,
        "AllocTC-Sharing behavior (HTL and LTH caps 100%)",
        &alloctc_config(&bcs, capacity).unwrap(),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, contents: &str) -> PathBuf {
        let path = dir.path().join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    const TABLE_FILE: &str = r#"{
        "name": "table",
        "capacity_kbps": 622000,
        "factory": "mam",
        "classes": [
            {"bc_percent": 40},
            {"bc_percent": 35},
            {"bc_percent": 25}
        ],
        "seed": 1
    }"#;

    #[test]
    fn percent_classes_resolve_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "t.json", TABLE_FILE);
        let loaded = load_scenario(&path).unwrap();
        assert_eq!(
            loaded.scenario.bcs(),
            vec![
                Bandwidth::from_kbps(248_800),
                Bandwidth::from_kbps(217_700),
                Bandwidth::from_kbps(155_500)
            ]
        );
        // Workloads default to the reference parameters.
        assert_eq!(loaded.scenario.workloads.len(), 3);
        assert_eq!(loaded.scenario.workloads[0].count, 1000);
    }

    #[test]
    fn inexact_percent_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "t.json",
            r#"{"name":"x","capacity_kbps":1001,"factory":"mam","classes":[{"bc_percent":50}],"seed":1}"#,
        );
        let err = load_scenario(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("whole kbps"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "t.json",
            r#"{"name":"x","capacity_kbps":100,"factory":"mam","classes":[{"bc_kbps":50,"htl_cap":10}],"seed":1}"#,
        );
        let err = load_scenario(&path).unwrap_err();
        assert!(matches!(err, CliError::Parse { .. }));
        assert!(err.to_string().contains("htl_cap"));
    }

    #[test]
    fn kbps_and_percent_are_mutually_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "t.json",
            r#"{"name":"x","capacity_kbps":100,"factory":"mam","classes":[{"bc_kbps":50,"bc_percent":50}],"seed":1}"#,
        );
        assert!(load_scenario(&path).unwrap_err().to_string().contains("mutually exclusive"));
    }

    #[test]
    fn factory_forbids_cap_keys() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "t.json",
            r#"{"name":"x","capacity_kbps":100,"factory":"rdm","classes":[{"bc_kbps":50,"htl_kbps":10}],"seed":1}"#,
        );
        assert!(load_scenario(&path).unwrap_err().to_string().contains("must be absent"));
    }

    #[test]
    fn explicit_classes_require_both_caps() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "t.json",
            r#"{"name":"x","capacity_kbps":100,"classes":[{"bc_kbps":50,"htl_kbps":10}],"seed":1}"#,
        );
        assert!(load_scenario(&path).unwrap_err().to_string().contains("lth_kbps"));
    }

    #[test]
    fn grdm_requires_and_uses_privates() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "t.json",
            r#"{"name":"x","capacity_kbps":200,"factory":"grdm","classes":[{"bc_kbps":100,"private_kbps":100},{"bc_kbps":100,"private_kbps":40}],"seed":1}"#,
        );
        let loaded = load_scenario(&path).unwrap();
        assert_eq!(loaded.config.htl_cap(1), Bandwidth::from_kbps(60));
        let path = write_file(
            &dir,
            "missing.json",
            r#"{"name":"x","capacity_kbps":200,"factory":"grdm","classes":[{"bc_kbps":100},{"bc_kbps":100}],"seed":1}"#,
        );
        assert!(load_scenario(&path).unwrap_err().to_string().contains("private"));
    }

    #[test]
    fn rule_violations_exit_with_code_one() {
        let dir = tempfile::tempdir().unwrap();
        // 40 + 35 + 26 percent = 101 percent of capacity.
        let path = write_file(
            &dir,
            "t.json",
            r#"{"name":"x","capacity_kbps":622000,"factory":"mam","classes":[{"bc_percent":40},{"bc_percent":35},{"bc_percent":26}],"seed":1}"#,
        );
        let err = load_scenario(&path).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("exceeds link capacity"));
    }

    #[test]
    fn validate_report_contains_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let rdm = TABLE_FILE.replace("mam", "rdm");
        let path = write_file(&dir, "t.json", &rdm);
        let report = cmd_validate(&path).unwrap();
        assert!(report.contains("622000"));
        assert!(report.contains("373200"));
        assert!(report.contains("155500"));
    }

    #[test]
    fn missing_file_reports_path() {
        let err = cmd_validate(Path::new("/nonexistent/scenario.json")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/scenario.json"));
    }

    #[test]
    fn pair_parsing() {
        let pairs = parse_pairs("gbam:mam=mam,gbam:rdm=rdm,gbam:alloctc=alloctc").unwrap();
        assert_eq!(pairs.len(), 3);
        assert_eq!(pairs[1].factory, FactoryKind::Rdm);
        assert_eq!(pairs[1].oracle, EngineKind::Rdm);
        assert!(parse_pairs("gbam:grdm=rdm").is_err());
        assert!(parse_pairs("mam=mam").is_err());
        assert!(parse_pairs("gbam:mam=nope").is_err());
    }

    #[test]
    fn tables_contain_reference_values() {
        let tables = render_tables();
        assert!(tables.contains("248.80"));
        // RDM class 1 row: full downward cap, zero private.
        assert!(tables.contains("217700"));
        assert!(tables.contains("622000"));
        assert!(tables.contains("373200"));
    }
}
