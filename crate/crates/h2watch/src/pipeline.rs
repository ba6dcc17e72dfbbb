//! Glue between reconstructed flows and the learning/detection cores:
//! train on a capture, score every flow offline, and join verdicts with
//! ground truth.

use std::collections::BTreeMap;

use h2watch_core::detect::{Detector, DetectorConfig, Label, Verdict};
use h2watch_core::flow::FlowRecord;
use h2watch_core::learn::{self, DelayDb, EmptyTraining, LookaheadDb};
use h2watch_core::metrics::{confusion, summarize, LabeledVerdict, Summary};

use crate::files::ParsedLabel;

#[derive(Debug)]
pub struct TrainedModel {
    pub lookahead: LookaheadDb,
    pub delay: DelayDb,
    /// Cumulative unique-pair count after each training flow.
    pub saturation: Vec<(usize, usize)>,
}

pub fn train_from_flows(flows: &[FlowRecord], n: usize) -> Result<TrainedModel, EmptyTraining> {
    let (lookahead, delay) = learn::learn(flows, n)?;
    let saturation = learn::saturation_curve(flows, n);
    Ok(TrainedModel {
        lookahead,
        delay,
        saturation,
    })
}

#[derive(Debug, Default)]
pub struct DetectOutcome {
    pub verdicts: Vec<Verdict>,
    /// Flows the capture never saw terminate; they get no verdict.
    pub undecided: usize,
}

/// Scores every flow on its own timeline. Flows are independent, so a
/// fresh detector per flow also makes repeated 4-tuples (port reuse)
/// harmless.
pub fn detect_flows(flows: &[FlowRecord], cfg: &DetectorConfig) -> DetectOutcome {
    let mut out = DetectOutcome::default();
    for flow in flows {
        let mut detector = Detector::new(cfg.clone());
        match detector.process_flow(flow) {
            Some(verdict) => out.verdicts.push(verdict),
            None => out.undecided += 1,
        }
    }
    out
}

#[derive(Debug)]
pub struct Evaluation {
    pub summary: Summary,
    /// kind → (flagged anomalous, total) over attack flows.
    pub per_kind: BTreeMap<String, (usize, usize)>,
    /// Verdicts whose flow had no label entry.
    pub unlabeled: usize,
}

pub fn evaluate(
    verdicts: &[Verdict],
    labels: &std::collections::HashMap<String, ParsedLabel>,
) -> Evaluation {
    let mut labeled = Vec::new();
    let mut per_kind: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut unlabeled = 0;
    for v in verdicts {
        let Some(truth) = labels.get(&v.flow.to_string()) else {
            unlabeled += 1;
            continue;
        };
        if truth.malicious {
            let entry = per_kind.entry(truth.kind.clone()).or_insert((0, 0));
            entry.1 += 1;
            if v.label == Label::Anomalous {
                entry.0 += 1;
            }
        }
        labeled.push(LabeledVerdict {
            verdict: v.clone(),
            malicious: truth.malicious,
        });
    }
    Evaluation {
        summary: summarize(confusion(&labeled)),
        per_kind,
        unlabeled,
    }
}
