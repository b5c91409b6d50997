//! Folds simulation traces into per-class load series and run summaries, and
//! exports them as CSV.
//!
//! The primary series is event-sampled (one sample per change), which is
//! exact for a piecewise-constant load; a fixed-interval resampler is
//! available for plotting. Time averages are exact: every event time is an
//! f64 and therefore a rational number, so integrals of the step functions
//! accumulate in big-rational arithmetic and only the final average is
//! rendered as f64. CSV output is locale-independent: decimal point, no
//! thousands separators, UTF-8, header row first.

use crate::bandwidth::Bandwidth;
use crate::model::BamConfig;
use crate::sim::{EventKind, SimTrace, TraceRecord};
use num::rational::BigRational;
use num::{BigInt, ToPrimitive, Zero};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("malformed trace: {0}")]
    MalformedTrace(String),
    #[error("failed writing {path}: {message}")]
    Export { path: PathBuf, message: String },
}

/// Per-class step-function samples of allocated load: one `(time, load)`
/// pair per change, starting from zero at time zero.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadSeries {
    pub class_count: usize,
    pub capacity: Bandwidth,
    pub end_time: f64,
    pub per_class: Vec<Vec<(f64, Bandwidth)>>,
}

impl LoadSeries {
    /// Step-function value of `class` at time `t`.
    pub fn value_at(&self, class: usize, t: f64) -> Bandwidth {
        let samples = &self.per_class[class];
        match samples.binary_search_by(|(time, _)| time.total_cmp(&t)) {
            Ok(i) => samples[i].1,
            Err(0) => Bandwidth::ZERO,
            Err(i) => samples[i - 1].1,
        }
    }

    /// Samples every class on a fixed grid `0, dt, 2dt, ..` up to the end of
    /// the series. Coarser than the event-sampled series but plot-friendly.
    pub fn resample(&self, dt: f64) -> Vec<Vec<(f64, Bandwidth)>> {
        assert!(dt > 0.0, "resample interval must be positive");
        let mut grid = Vec::new();
        let mut t = 0.0;
        while t <= self.end_time {
            grid.push(t);
            t += dt;
        }
        (0..self.class_count)
            .map(|class| grid.iter().map(|&t| (t, self.value_at(class, t))).collect())
            .collect()
    }
}

/// Aggregates for one class (or for the link as a whole in the `all` row).
#[derive(Clone, Debug, PartialEq)]
pub struct ClassSummary {
    pub offered: u64,
    pub admitted: u64,
    pub blocked: u64,
    pub blocking_ratio: f64,
    pub avg_load_kbps: f64,
    pub peak_load: Bandwidth,
    pub avg_borrowed_htl_kbps: f64,
    pub avg_borrowed_lth_kbps: f64,
    /// Time-averaged share of link capacity held by this class.
    pub utilization: f64,
}

/// Whole-run aggregates: one entry per class plus the link-level roll-up.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub per_class: Vec<ClassSummary>,
    /// Link-level totals; `utilization` here is the mean link utilization.
    pub link: ClassSummary,
    pub end_time: f64,
    pub capacity: Bandwidth,
}

/// Options for [`fold_trace_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct FoldOptions {
    /// Drop `[0, warmup_s)` from every time average and peak; counts still
    /// cover the whole trace.
    pub warmup_s: f64,
}

pub fn fold_trace(trace: &SimTrace) -> Result<(LoadSeries, RunSummary), MetricsError> {
    fold_trace_with(trace, FoldOptions::default())
}

pub fn fold_trace_with(
    trace: &SimTrace,
    options: FoldOptions,
) -> Result<(LoadSeries, RunSummary), MetricsError> {
    let n = trace.class_count;
    let mut load: Vec<Vec<(f64, Bandwidth)>> = vec![Vec::new(); n];
    let mut borrowed_htl: Vec<Vec<(f64, Bandwidth)>> = vec![Vec::new(); n];
    let mut borrowed_lth: Vec<Vec<(f64, Bandwidth)>> = vec![Vec::new(); n];
    let mut offered = vec![0u64; n];
    let mut admitted = vec![0u64; n];
    let mut blocked = vec![0u64; n];
    let mut total_series: Vec<(f64, Bandwidth)> = Vec::new();

    if !trace.records.is_empty() {
        for c in 0..n {
            load[c].push((0.0, Bandwidth::ZERO));
            borrowed_htl[c].push((0.0, Bandwidth::ZERO));
            borrowed_lth[c].push((0.0, Bandwidth::ZERO));
        }
        total_series.push((0.0, Bandwidth::ZERO));
    }

    let mut prev_totals = vec![Bandwidth::ZERO; n];
    let mut last_time = 0.0f64;
    for (i, record) in trace.records.iter().enumerate() {
        validate_record(trace, record, &prev_totals, last_time, i)?;
        last_time = record.time;
        if record.kind == EventKind::Arrival {
            offered[record.class] += 1;
            match record.decision {
                Some(d) if d.is_admitted() => admitted[record.class] += 1,
                Some(_) => blocked[record.class] += 1,
                None => {
                    return Err(MetricsError::MalformedTrace(format!(
                        "arrival record {i} carries no decision"
                    )))
                }
            }
        }
        for c in 0..n {
            push_change(&mut load[c], record.time, record.totals[c]);
            push_change(&mut borrowed_htl[c], record.time, record.borrowed_htl[c]);
            push_change(&mut borrowed_lth[c], record.time, record.borrowed_lth[c]);
        }
        let total: Bandwidth = record.totals.iter().copied().sum();
        if total > trace.capacity {
            return Err(MetricsError::MalformedTrace(format!(
                "record {i}: total load {total} exceeds capacity {}",
                trace.capacity
            )));
        }
        push_change(&mut total_series, record.time, total);
        prev_totals = record.totals.clone();
    }

    let end_time = last_time;
    let series = LoadSeries {
        class_count: n,
        capacity: trace.capacity,
        end_time,
        per_class: load,
    };

    let window = Window::new(options.warmup_s, end_time);
    let capacity_kbps = trace.capacity.kbps() as f64;
    let per_class: Vec<ClassSummary> = (0..n)
        .map(|c| {
            let avg_load_kbps = window.average(&series.per_class[c]);
            ClassSummary {
                offered: offered[c],
                admitted: admitted[c],
                blocked: blocked[c],
                blocking_ratio: ratio(blocked[c], offered[c]),
                avg_load_kbps,
                peak_load: window.peak(&series.per_class[c]),
                avg_borrowed_htl_kbps: window.average(&borrowed_htl[c]),
                avg_borrowed_lth_kbps: window.average(&borrowed_lth[c]),
                utilization: if capacity_kbps > 0.0 { avg_load_kbps / capacity_kbps } else { 0.0 },
            }
        })
        .collect();

    let offered_all: u64 = offered.iter().sum();
    let blocked_all: u64 = blocked.iter().sum();
    let avg_total = window.average(&total_series);
    let link = ClassSummary {
        offered: offered_all,
        admitted: admitted.iter().sum(),
        blocked: blocked_all,
        blocking_ratio: ratio(blocked_all, offered_all),
        avg_load_kbps: avg_total,
        peak_load: window.peak(&total_series),
        avg_borrowed_htl_kbps: per_class.iter().map(|c| c.avg_borrowed_htl_kbps).sum(),
        avg_borrowed_lth_kbps: per_class.iter().map(|c| c.avg_borrowed_lth_kbps).sum(),
        utilization: if capacity_kbps > 0.0 { avg_total / capacity_kbps } else { 0.0 },
    };

    let summary = RunSummary { per_class, link, end_time, capacity: trace.capacity };
    Ok((series, summary))
}

fn validate_record(
    trace: &SimTrace,
    record: &TraceRecord,
    prev_totals: &[Bandwidth],
    last_time: f64,
    index: usize,
) -> Result<(), MetricsError> {
    if !record.time.is_finite() || record.time < 0.0 {
        return Err(MetricsError::MalformedTrace(format!(
            "record {index}: bad timestamp {}",
            record.time
        )));
    }
    if record.time < last_time {
        return Err(MetricsError::MalformedTrace(format!(
            "record {index}: time goes backwards ({} after {last_time})",
            record.time
        )));
    }
    let n = trace.class_count;
    if record.totals.len() != n || record.borrowed_htl.len() != n || record.borrowed_lth.len() != n
    {
        return Err(MetricsError::MalformedTrace(format!(
            "record {index}: vector length differs from class count {n}"
        )));
    }
    if record.class >= n {
        return Err(MetricsError::MalformedTrace(format!(
            "record {index}: class {} out of range",
            record.class
        )));
    }
    // The record must account for exactly its own event.
    let mut expected = prev_totals.to_vec();
    match (record.kind, record.decision) {
        (EventKind::Arrival, Some(d)) if d.is_admitted() => {
            expected[record.class] += record.bandwidth;
        }
        (EventKind::Arrival, _) => {}
        (EventKind::Departure, _) => {
            expected[record.class] = expected[record.class]
                .checked_sub(record.bandwidth)
                .ok_or_else(|| {
                    MetricsError::MalformedTrace(format!(
                        "record {index}: departure exceeds prior load"
                    ))
                })?;
        }
    }
    if expected != record.totals {
        return Err(MetricsError::MalformedTrace(format!(
            "record {index}: totals inconsistent with the event"
        )));
    }
    Ok(())
}

fn push_change(samples: &mut Vec<(f64, Bandwidth)>, time: f64, value: Bandwidth) {
    match samples.last() {
        Some(&(_, last)) if last == value => {}
        Some(&(t, _)) if t == time => {
            // Same instant: keep only the final value.
            samples.pop();
            push_change(samples, time, value);
        }
        _ => samples.push((time, value)),
    }
}

fn ratio(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 / whole as f64
    }
}

/// Exact integration window over step-function samples.
struct Window {
    start: BigRational,
    end: BigRational,
    length: BigRational,
    start_f: f64,
    end_f: f64,
}

impl Window {
    fn new(warmup_s: f64, end_time: f64) -> Window {
        let start_f = warmup_s.min(end_time);
        let start = BigRational::from_float(start_f).expect("finite warmup");
        let end = BigRational::from_float(end_time).expect("finite end time");
        let length = &end - &start;
        Window { start, end, length, start_f, end_f: end_time }
    }

    /// Exact time average of the step function over the window, as f64.
    fn average(&self, samples: &[(f64, Bandwidth)]) -> f64 {
        if self.length.is_zero() {
            return 0.0;
        }
        let mut integral = BigRational::zero();
        for (i, &(t, v)) in samples.iter().enumerate() {
            let seg_end = samples
                .get(i + 1)
                .map(|&(t2, _)| BigRational::from_float(t2).expect("finite time"))
                .unwrap_or_else(|| self.end.clone());
            let seg_start = BigRational::from_float(t).expect("finite time");
            let lo = seg_start.max(self.start.clone());
            let hi = seg_end.min(self.end.clone());
            if hi > lo {
                integral += BigRational::from(BigInt::from(v.kbps())) * (hi - lo);
            }
        }
        (integral / &self.length).to_f64().unwrap_or(0.0)
    }

    /// Largest step value attained inside the window, including the value
    /// carried in from before it.
    fn peak(&self, samples: &[(f64, Bandwidth)]) -> Bandwidth {
        let mut peak = Bandwidth::ZERO;
        for (i, &(t, v)) in samples.iter().enumerate() {
            let seg_end = samples.get(i + 1).map(|&(t2, _)| t2).unwrap_or(self.end_f);
            if seg_end > self.start_f && t <= self.end_f {
                peak = peak.max(v);
            }
        }
        peak
    }
}

/// Identifies one run in `meta.csv`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunMeta {
    pub scenario: String,
    pub seed: u64,
    pub engine: String,
    pub config_digest: String,
}

/// Hex SHA-256 over the canonical rendering of a configuration, so runs can
/// be matched to the exact parameter set that produced them.
pub fn config_digest(cfg: &BamConfig) -> String {
    let mut canonical = format!("capacity={};", cfg.capacity().kbps());
    for class in cfg.classes() {
        let _ = write!(
            canonical,
            "bc={},htl={},lth={};",
            class.bc.kbps(),
            class.htl_cap.kbps(),
            class.lth_cap.kbps()
        );
    }
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Paths of the files written by [`export_csv`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExportedFiles {
    pub load: PathBuf,
    pub summary: PathBuf,
    pub meta: PathBuf,
}

/// Writes `load.csv` (event-sampled per-class load), `summary.csv` (one row
/// per class plus an `all` row) and `meta.csv` into `dir`, creating it if
/// needed.
pub fn export_csv(
    series: &LoadSeries,
    summary: &RunSummary,
    meta: &RunMeta,
    dir: &Path,
) -> Result<ExportedFiles, MetricsError> {
    fs::create_dir_all(dir).map_err(|e| MetricsError::Export {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let paths = ExportedFiles {
        load: dir.join("load.csv"),
        summary: dir.join("summary.csv"),
        meta: dir.join("meta.csv"),
    };

    let mut rows: Vec<(f64, usize, Bandwidth)> = Vec::new();
    for (class, samples) in series.per_class.iter().enumerate() {
        for &(time, value) in samples {
            rows.push((time, class, value));
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    write_csv(&paths.load, &["time_s", "class", "load_kbps"], rows.iter(), |(t, c, v)| {
        vec![t.to_string(), c.to_string(), v.kbps().to_string()]
    })?;

    let mut summary_rows: Vec<(String, &ClassSummary)> = summary
        .per_class
        .iter()
        .enumerate()
        .map(|(c, s)| (c.to_string(), s))
        .collect();
    if !summary.per_class.is_empty() {
        summary_rows.push(("all".to_string(), &summary.link));
    }
    write_csv(
        &paths.summary,
        &[
            "class",
            "offered",
            "admitted",
            "blocked",
            "blocking_ratio",
            "avg_load_kbps",
            "peak_load_kbps",
            "avg_borrowed_htl_kbps",
            "avg_borrowed_lth_kbps",
            "utilization",
        ],
        summary_rows.iter(),
        |(label, s)| {
            vec![
                label.clone(),
                s.offered.to_string(),
                s.admitted.to_string(),
                s.blocked.to_string(),
                s.blocking_ratio.to_string(),
                s.avg_load_kbps.to_string(),
                s.peak_load.kbps().to_string(),
                s.avg_borrowed_htl_kbps.to_string(),
                s.avg_borrowed_lth_kbps.to_string(),
                s.utilization.to_string(),
            ]
        },
    )?;

    write_csv(
        &paths.meta,
        &["scenario", "seed", "engine", "config_digest"],
        std::iter::once(meta),
        |m| {
            vec![
                m.scenario.clone(),
                m.seed.to_string(),
                m.engine.clone(),
                m.config_digest.clone(),
            ]
        },
    )?;
    Ok(paths)
}

fn write_csv<T>(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = T>,
    mut render: impl FnMut(T) -> Vec<String>,
) -> Result<(), MetricsError> {
    let to_err = |message: String| MetricsError::Export { path: path.to_path_buf(), message };
    let mut writer = csv::Writer::from_path(path).map_err(|e| to_err(e.to_string()))?;
    writer.write_record(header).map_err(|e| to_err(e.to_string()))?;
    for row in rows {
        writer.write_record(render(row)).map_err(|e| to_err(e.to_string()))?;
    }
    writer.flush().map_err(|e| to_err(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admission::{Decision, LspId};
    use crate::sim::{EventKind, SimTrace, TraceRecord};

    fn kb(v: u64) -> Bandwidth {
        Bandwidth::from_kbps(v)
    }

    fn empty_trace() -> SimTrace {
        SimTrace {
            scenario: "t".into(),
            engine: "mam".into(),
            seed: 0,
            capacity: kb(1000),
            class_count: 2,
            records: Vec::new(),
        }
    }

    fn record(
        time: f64,
        kind: EventKind,
        class: usize,
        bandwidth: u64,
        decision: Option<Decision>,
        totals: &[u64],
    ) -> TraceRecord {
        TraceRecord {
            time,
            kind,
            id: LspId(0),
            class,
            bandwidth: kb(bandwidth),
            decision,
            totals: totals.iter().map(|&v| kb(v)).collect(),
            borrowed_htl: vec![Bandwidth::ZERO; totals.len()],
            borrowed_lth: vec![Bandwidth::ZERO; totals.len()],
        }
    }

    #[test]
    fn empty_trace_folds_to_zero() {
        let (series, summary) = fold_trace(&empty_trace()).unwrap();
        assert_eq!(series.end_time, 0.0);
        assert!(series.per_class.iter().all(|s| s.is_empty()));
        assert_eq!(summary.link.offered, 0);
        assert_eq!(summary.link.avg_load_kbps, 0.0);
    }

    #[test]
    fn single_lsp_average_is_the_exact_integral() {
        let mut trace = empty_trace();
        trace.class_count = 1;
        trace.capacity = kb(10_000);
        trace.records = vec![
            record(1.0, EventKind::Arrival, 0, 5000, Some(Decision::Admitted), &[5000]),
            record(251.0, EventKind::Departure, 0, 5000, None, &[0]),
        ];
        let (series, summary) = fold_trace(&trace).unwrap();
        assert_eq!(series.per_class[0], vec![(0.0, kb(0)), (1.0, kb(5000)), (251.0, kb(0))]);
        // 5000 kbps over 250 of 251 seconds.
        assert_eq!(summary.per_class[0].avg_load_kbps, 5000.0 * 250.0 / 251.0);
        assert_eq!(summary.per_class[0].peak_load, kb(5000));
        assert_eq!(summary.per_class[0].offered, 1);
        assert_eq!(summary.per_class[0].blocked, 0);
    }

    #[test]
    fn blocking_ratio_is_blocked_over_offered() {
        let mut trace = empty_trace();
        trace.class_count = 2;
        let mut records = Vec::new();
        for i in 0..10u64 {
            let decision = if i < 3 {
                Decision::Blocked { shortfall: kb(1) }
            } else {
                Decision::Admitted
            };
            records.push(record(i as f64, EventKind::Arrival, 1, 0, Some(decision), &[0, 0]));
        }
        trace.records = records;
        let (_, summary) = fold_trace(&trace).unwrap();
        assert_eq!(summary.per_class[1].offered, 10);
        assert_eq!(summary.per_class[1].blocked, 3);
        assert_eq!(summary.per_class[1].blocking_ratio, 0.3);
    }

    #[test]
    fn warmup_truncates_averages_but_not_counts() {
        let mut trace = empty_trace();
        trace.class_count = 1;
        trace.records = vec![
            record(0.0, EventKind::Arrival, 0, 100, Some(Decision::Admitted), &[100]),
            record(10.0, EventKind::Departure, 0, 100, None, &[0]),
            record(20.0, EventKind::Arrival, 0, 0, Some(Decision::Admitted), &[0]),
        ];
        let (_, full) = fold_trace(&trace).unwrap();
        assert_eq!(full.per_class[0].avg_load_kbps, 100.0 * 10.0 / 20.0);
        let (_, tail) = fold_trace_with(&trace, FoldOptions { warmup_s: 10.0 }).unwrap();
        assert_eq!(tail.per_class[0].avg_load_kbps, 0.0);
        assert_eq!(tail.per_class[0].offered, 2);
        // Carry-in counts for the peak inside the window.
        let (_, mid) = fold_trace_with(&trace, FoldOptions { warmup_s: 5.0 }).unwrap();
        assert_eq!(mid.per_class[0].peak_load, kb(100));
    }

    #[test]
    fn malformed_traces_are_rejected() {
        let mut trace = empty_trace();
        trace.class_count = 1;
        trace.records = vec![record(
            1.0,
            EventKind::Arrival,
            0,
            50,
            Some(Decision::Admitted),
            &[49],
        )];
        assert!(matches!(
            fold_trace(&trace),
            Err(MetricsError::MalformedTrace(_))
        ));

        trace.records = vec![
            record(2.0, EventKind::Arrival, 0, 0, Some(Decision::Admitted), &[0]),
            record(1.0, EventKind::Arrival, 0, 0, Some(Decision::Admitted), &[0]),
        ];
        assert!(matches!(
            fold_trace(&trace),
            Err(MetricsError::MalformedTrace(_))
        ));
    }

    #[test]
    fn resample_reads_the_step_function() {
        let mut trace = empty_trace();
        trace.class_count = 1;
        trace.records = vec![
            record(3.0, EventKind::Arrival, 0, 700, Some(Decision::Admitted), &[700]),
            record(25.0, EventKind::Departure, 0, 700, None, &[0]),
        ];
        let (series, _) = fold_trace(&trace).unwrap();
        let grid = series.resample(10.0);
        assert_eq!(grid[0], vec![(0.0, kb(0)), (10.0, kb(700)), (20.0, kb(700))]);
        assert_eq!(series.value_at(0, 3.0), kb(700));
        assert_eq!(series.value_at(0, 2.9), kb(0));
    }

    #[test]
    fn digest_distinguishes_configurations() {
        use crate::model::{mam_config, rdm_config};
        let bcs = [kb(100), kb(100)];
        let a = config_digest(&mam_config(&bcs, kb(200)).unwrap());
        let b = config_digest(&rdm_config(&bcs, kb(200)).unwrap());
        assert_ne!(a, b);
        assert_eq!(a.len(), 64);
        assert_eq!(a, config_digest(&mam_config(&bcs, kb(200)).unwrap()));
    }
}
