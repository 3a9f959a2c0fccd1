//! Benchmark reports: per-interval rows, Rate of Expiration, interval
//! duration histograms, and CSV emission.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("rate of expiration undefined: no live data and no expirations")]
    UndefinedRoe,
    #[error("invalid scenario config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Rate of Expiration: expirations ÷ (live data + expirations). 0 means
/// nothing expired during the interval, 1 means everything did.
pub fn rate_of_expiration(expirations: u64, live: u64) -> Result<f64, BenchError> {
    if expirations == 0 && live == 0 {
        return Err(BenchError::UndefinedRoe);
    }
    Ok(expirations as f64 / (live + expirations) as f64)
}

/// One aggregation interval: a fixed operation budget and what happened
/// inside it. `live_size` is sampled at the interval end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalRow {
    pub interval_index: u64,
    pub wall_ms: f64,
    pub inserts: u64,
    pub expirations: u64,
    pub removes: u64,
    pub live_size: u64,
    pub heap_entries: u64,
    pub tombstones: u64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    /// Live size before the first interval (the bootstrap population).
    pub initial_live: u64,
    pub rows: Vec<IntervalRow>,
    /// Name/value pairs, emitted to the summary CSV in order.
    pub summary: Vec<(String, f64)>,
}

/// Fixed-bin histogram of per-interval wall durations.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl BenchReport {
    /// Per-row RoE; `None` where the ratio is undefined (empty interval
    /// over an empty database).
    pub fn roe_series(&self) -> Vec<Option<f64>> {
        self.rows
            .iter()
            .map(|r| rate_of_expiration(r.expirations, r.live_size).ok())
            .collect()
    }

    /// Histogram of interval durations over `bins` equal-width bins
    /// spanning the observed range.
    pub fn duration_pdf(&self, bins: usize) -> Histogram {
        assert!(bins > 0);
        let durations: Vec<f64> = self.rows.iter().map(|r| r.wall_ms).collect();
        if durations.is_empty() {
            return Histogram { lo: 0.0, hi: 0.0, counts: vec![0; bins] };
        }
        let lo = durations.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = durations.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0u64; bins];
        let width = (hi - lo) / bins as f64;
        for d in durations {
            let i = if width == 0.0 {
                0
            } else {
                (((d - lo) / width) as usize).min(bins - 1)
            };
            counts[i] += 1;
        }
        Histogram { lo, hi, counts }
    }

    /// Per-interval bookkeeping must balance: every change of the live
    /// size is accounted for by inserts, expirations, or removes.
    pub fn verify_conservation(&self) -> Result<(), String> {
        let mut live = self.initial_live as i128;
        for row in &self.rows {
            live += row.inserts as i128 - row.expirations as i128 - row.removes as i128;
            if live != row.live_size as i128 {
                return Err(format!(
                    "interval {}: expected live {live}, row says {}",
                    row.interval_index, row.live_size
                ));
            }
        }
        Ok(())
    }

    pub fn peak_live(&self) -> u64 {
        self.rows
            .iter()
            .map(|r| r.live_size)
            .max()
            .unwrap_or(self.initial_live)
            .max(self.initial_live)
    }

    /// Peak of the memory proxy: index entries plus heap entries
    /// (tombstones occupy heap slots and are counted by `heap_entries`).
    pub fn peak_mem_proxy(&self) -> u64 {
        self.rows
            .iter()
            .map(|r| r.live_size + r.heap_entries)
            .max()
            .unwrap_or(self.initial_live)
            .max(self.initial_live)
    }

    pub fn total_wall_ms(&self) -> f64 {
        self.rows.iter().map(|r| r.wall_ms).sum()
    }

    pub fn write_rows_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(
            w,
            "interval_index,wall_ms,inserts,expirations,removes,live_size,heap_entries,tombstones"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.3},{},{},{},{},{},{}",
                r.interval_index,
                r.wall_ms,
                r.inserts,
                r.expirations,
                r.removes,
                r.live_size,
                r.heap_entries,
                r.tombstones
            )?;
        }
        Ok(())
    }

    pub fn write_summary_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "metric,value")?;
        for (name, value) in &self.summary {
            writeln!(w, "{name},{value}")?;
        }
        Ok(())
    }
}

fn to_file(path: &Path, emit: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), BenchError> {
    let wrap = |source| BenchError::Io { path: path.display().to_string(), source };
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    emit(&mut w).map_err(wrap)?;
    w.flush().map_err(wrap)
}

/// Write the per-interval rows CSV.
pub fn emit_rows_csv(report: &BenchReport, path: &Path) -> Result<(), BenchError> {
    to_file(path, |w| report.write_rows_csv(w))
}

/// Write the summary CSV (`metric,value`).
pub fn emit_summary_csv(report: &BenchReport, path: &Path) -> Result<(), BenchError> {
    to_file(path, |w| report.write_summary_csv(w))
}
