//! Wall-clock benchmark of lookahead-pair extraction for different
//! window sizes, mirroring the extraction-time comparison plot.

use std::time::Instant;

use h2watch_core::event::EventSymbol;
use h2watch_core::learn::extract_lookahead_pairs;

#[derive(Debug, Clone, Copy)]
pub struct BenchRow {
    pub n: usize,
    pub len: usize,
    pub mean_us: f64,
}

/// Cycles the event alphabet into a deterministic sequence of `len`
/// symbols; content is irrelevant to timing, only length and n are.
pub fn synthetic_sequence(len: usize) -> Vec<EventSymbol> {
    use EventSymbol::*;
    let alphabet = [
        Pref,
        Star,
        DataNotEndStream,
        Star,
        HdrEndHeadersOnly,
        Star,
        SettingsAck,
        Star,
        InitWindowNonZero,
        MaxStreamsNonZero,
        Star,
        WindowIncrNonZero,
        Star,
        DataEndStream,
        Star,
        GoAway,
        Star,
    ];
    (0..len).map(|i| alphabet[i % alphabet.len()]).collect()
}

/// Mean extraction time per (n, length) over `reps` runs.
pub fn extraction_timing(ns: &[usize], lens: &[usize], reps: usize) -> Vec<BenchRow> {
    let reps = reps.max(1);
    let mut rows = Vec::new();
    for &len in lens {
        let seq = synthetic_sequence(len);
        for &n in ns {
            // Warm-up pass keeps allocator effects out of the first rep.
            std::hint::black_box(extract_lookahead_pairs(&seq, n));
            let start = Instant::now();
            for _ in 0..reps {
                std::hint::black_box(extract_lookahead_pairs(&seq, n));
            }
            let mean_us = start.elapsed().as_secs_f64() * 1e6 / reps as f64;
            rows.push(BenchRow { n, len, mean_us });
        }
    }
    rows
}

pub fn render_rows(rows: &[BenchRow]) -> String {
    let mut out = String::from("n,length,mean_us\n");
    for r in rows {
        out.push_str(&format!("{},{},{:.3}\n", r.n, r.len, r.mean_us));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_cover_grid() {
        let rows = extraction_timing(&[3, 5], &[100, 200], 3);
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.mean_us >= 0.0));
    }
}
