//! Trace, summary and plot-series files.
//!
//! Column orders here are a wire contract; see `docs/formats.md`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::simulator::{CompareReport, RunOutput, RunSummary, TickRecord};

#[derive(Debug, Error)]
#[error("{path}: {source}")]
pub struct TraceError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

pub const TRACE_HEADER: &str = "tick,live_nodes,monitors,monitor_energy,cumulative_monitor_energy,\
drained_energy,cumulative_drained_energy,intra_cluster_reelections,full_reruns,joins,coverage,\
true_positive,false_positive,true_negative,false_negative,misses,dropped";

pub const NODES_HEADER: &str = "tick,node,energy,role";

pub const SERIES_HEADER: &str = "tick,cumulative_monitoring_energy";

pub fn trace_csv(records: &[TickRecord]) -> String {
    let mut s = String::new();
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in records {
        let joins = r
            .elections
            .iter()
            .filter(|e| matches!(e, crate::simulator::ElectionEvent::Join { .. }))
            .count();
        let d = &r.detections;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{:.6},{},{},{},{},{},{}",
            r.tick,
            r.live_nodes(),
            r.monitors(),
            r.monitor_energy,
            r.cumulative_monitor_energy,
            r.drained_energy,
            r.cumulative_drained_energy,
            r.intra_cluster(),
            r.full_reruns(),
            joins,
            r.coverage,
            d.true_positive,
            d.false_positive,
            d.true_negative,
            d.false_negative,
            d.misses,
            d.dropped,
        );
    }
    s
}

/// Long-format per-node state: one row per node per tick.
pub fn nodes_csv(records: &[TickRecord]) -> String {
    let mut s = String::new();
    s.push_str(NODES_HEADER);
    s.push('\n');
    for r in records {
        for (i, (e, role)) in r.energies.iter().zip(&r.roles).enumerate() {
            let _ = writeln!(s, "{},{},{},{}", r.tick, i, e, role.as_str());
        }
    }
    s
}

pub fn series_csv(series: &[(u64, u64)]) -> String {
    let mut s = String::new();
    s.push_str(SERIES_HEADER);
    s.push('\n');
    for (t, e) in series {
        let _ = writeln!(s, "{t},{e}");
    }
    s
}

pub fn summary_text(summary: &RunSummary) -> String {
    let mut s = String::new();
    let d = &summary.detections;
    let acc = summary
        .detection_accuracy
        .map_or_else(|| "na".to_string(), |a| format!("{a:.6}"));
    let _ = writeln!(s, "mode = {}", summary.mode);
    let _ = writeln!(s, "seed = {}", summary.seed);
    let _ = writeln!(s, "terminal_state = {}", summary.terminal);
    let _ = writeln!(s, "ticks_completed = {}", summary.ticks_completed);
    let _ = writeln!(s, "initial_monitors = {}", summary.initial_monitors);
    let _ = writeln!(s, "initial_hop_radius = {}", summary.initial_hop_radius);
    let _ = writeln!(s, "total_monitoring_energy = {}", summary.total_monitoring_energy);
    let _ = writeln!(s, "total_drained_energy = {}", summary.total_drained_energy);
    let _ = writeln!(s, "full_reruns = {}", summary.full_reruns);
    let _ = writeln!(s, "intra_cluster_reelections = {}", summary.intra_cluster_reelections);
    let _ = writeln!(s, "joins = {}", summary.joins);
    let _ = writeln!(s, "mean_coverage = {:.6}", summary.mean_coverage);
    let _ = writeln!(s, "events_delivered = {}", d.delivered());
    let _ = writeln!(s, "true_positive = {}", d.true_positive);
    let _ = writeln!(s, "false_positive = {}", d.false_positive);
    let _ = writeln!(s, "true_negative = {}", d.true_negative);
    let _ = writeln!(s, "false_negative = {}", d.false_negative);
    let _ = writeln!(s, "misses = {}", d.misses);
    let _ = writeln!(s, "dropped = {}", d.dropped);
    let _ = writeln!(s, "detection_accuracy = {acc}");
    let _ = writeln!(s, "training_accuracy = {:.6}", summary.training_accuracy);
    let _ = writeln!(s, "final_live_nodes = {}", summary.final_live_nodes);
    let _ = writeln!(s, "locality_violations = {}", summary.locality_violations);
    s
}

pub fn compare_text(report: &CompareReport) -> String {
    let (a, b) = (report.first_mode, report.second_mode);
    let mut s = String::new();
    let _ = writeln!(s, "first_mode = {a}");
    let _ = writeln!(s, "second_mode = {b}");
    let _ = writeln!(s, "seeds = {}", report.seeds.len());
    let _ = writeln!(s, "mean_full_reruns_{a} = {:.6}", report.mean_first_reruns());
    let _ = writeln!(s, "mean_full_reruns_{b} = {:.6}", report.mean_second_reruns());
    let _ = writeln!(s, "mean_rerun_delta = {:.6}", report.mean_rerun_delta());
    let _ = writeln!(s, "mean_energy_delta = {:.6}", report.mean_energy_delta());
    let _ = writeln!(s, "mean_coverage_delta = {:.6}", report.mean_coverage_delta());
    let _ = writeln!(s, "seeds_{a}_reruns_not_above_{b} = {}", report.seeds_first_not_worse());
    let _ = writeln!(
        s,
        "# seed,reruns_{a},reruns_{b},energy_{a},energy_{b},intra_{a},coverage_{a},coverage_{b},terminal_{a},terminal_{b}"
    );
    for r in &report.seeds {
        let _ = writeln!(
            s,
            "seed_row = {},{},{},{},{},{},{:.6},{:.6},{},{}",
            r.seed,
            r.first.full_reruns,
            r.second.full_reruns,
            r.first.total_monitoring_energy,
            r.second.total_monitoring_energy,
            r.first.intra_cluster_reelections,
            r.first.mean_coverage,
            r.second.mean_coverage,
            r.first.terminal,
            r.second.terminal,
        );
    }
    s
}

fn write(path: PathBuf, contents: &str) -> Result<(), TraceError> {
    fs::write(&path, contents).map_err(|source| TraceError { path, source })
}

fn ensure_dir(dir: &Path) -> Result<(), TraceError> {
    fs::create_dir_all(dir).map_err(|source| TraceError { path: dir.to_path_buf(), source })
}

/// Writes `trace.csv`, `nodes.csv`, `summary.txt` and `series_<mode>.csv`.
pub fn emit_trace(output: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>, TraceError> {
    emit_parts(&output.records, &output.summary, &output.energy_series(), dir)
}

pub fn emit_parts(
    records: &[TickRecord],
    summary: &RunSummary,
    series: &[(u64, u64)],
    dir: &Path,
) -> Result<Vec<PathBuf>, TraceError> {
    ensure_dir(dir)?;
    let files = [
        (dir.join("trace.csv"), trace_csv(records)),
        (dir.join("nodes.csv"), nodes_csv(records)),
        (dir.join("summary.txt"), summary_text(summary)),
        (dir.join(format!("series_{}.csv", summary.mode)), series_csv(series)),
    ];
    let mut written = Vec::new();
    for (path, body) in files {
        write(path.clone(), &body)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes `compare.txt` plus `series_<mode>_seed<seed>.csv` for both modes.
pub fn emit_compare(report: &CompareReport, dir: &Path) -> Result<Vec<PathBuf>, TraceError> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let path = dir.join("compare.txt");
    write(path.clone(), &compare_text(report))?;
    written.push(path);
    for r in &report.seeds {
        for (mode, series) in [(report.first_mode, &r.first_series), (report.second_mode, &r.second_series)] {
            let path = dir.join(format!("series_{mode}_seed{}.csv", r.seed));
            write(path.clone(), &series_csv(series))?;
            written.push(path);
        }
    }
    Ok(written)
}
