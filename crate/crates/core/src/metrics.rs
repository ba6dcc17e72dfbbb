//! Evaluation: confusion counts against ground truth and the derived
//! percentage metrics.

use alloc::vec::Vec;
use core::fmt;

use crate::detect::{Label, Verdict};
use crate::flow::FlowKey;

/// Expected classification of one flow, keyed by its 4-tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub flow: FlowKey,
    pub malicious: bool,
}

/// A verdict joined with its ground-truth label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledVerdict {
    pub verdict: Verdict,
    pub malicious: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Tally verdicts against truth. Positive = anomalous.
pub fn confusion(labeled: &[LabeledVerdict]) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for lv in labeled {
        match (lv.verdict.label, lv.malicious) {
            (Label::Anomalous, true) => c.tp += 1,
            (Label::Anomalous, false) => c.fp += 1,
            (Label::Normal, false) => c.tn += 1,
            (Label::Normal, true) => c.fn_ += 1,
        }
    }
    c
}

/// Percentage metrics; `None` where the denominator is empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub counts: ConfusionCounts,
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub false_positive_rate: Option<f64>,
    pub f1: Option<f64>,
}

fn pct(num: u64, den: u64) -> Option<f64> {
    if den == 0 {
        None
    } else {
        Some(num as f64 / den as f64 * 100.0)
    }
}

pub fn summarize(counts: ConfusionCounts) -> Summary {
    let recall = pct(counts.tp, counts.tp + counts.fn_);
    let precision = pct(counts.tp, counts.tp + counts.fp);
    let f1 = match (recall, precision) {
        (Some(r), Some(p)) if r + p > 0.0 => Some(2.0 * r * p / (r + p)),
        _ => None,
    };
    Summary {
        counts,
        accuracy: pct(counts.tp + counts.tn, counts.total()),
        recall,
        precision,
        false_positive_rate: pct(counts.fp, counts.fp + counts.tn),
        f1,
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn cell(v: Option<f64>) -> DisplayCell {
            DisplayCell(v)
        }
        struct DisplayCell(Option<f64>);
        impl fmt::Display for DisplayCell {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match self.0 {
                    Some(v) => write!(f, "{v:.2}"),
                    None => write!(f, "NA"),
                }
            }
        }
        let c = self.counts;
        writeln!(f, "tp={} fp={} tn={} fn={}", c.tp, c.fp, c.tn, c.fn_)?;
        write!(
            f,
            "accuracy={} recall={} precision={} fpr={} f1={}",
            cell(self.accuracy),
            cell(self.recall),
            cell(self.precision),
            cell(self.false_positive_rate),
            cell(self.f1),
        )
    }
}

/// Empirical CDF over decision latencies: sorted distinct values paired
/// with the cumulative fraction of verdicts at or below each.
pub fn latency_cdf(verdicts: &[Verdict]) -> Vec<(f64, f64)> {
    let mut lat: Vec<f64> = verdicts.iter().map(|v| v.latency).collect();
    lat.sort_by(|a, b| a.total_cmp(b));
    let total = lat.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, v) in lat.iter().enumerate() {
        let frac = (i + 1) as f64 / total;
        match out.last_mut() {
            Some(last) if last.0 == *v => last.1 = frac,
            _ => out.push((*v, frac)),
        }
    }
    out
}
