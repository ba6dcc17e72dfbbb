//! Detection phase: streaming per-flow mismatch scoring.
//!
//! Every event appended to a flow's sequence completes up to `n` new
//! lookahead pairs; pairs absent from the learned database count as
//! mismatches. The score is the mismatch count over the maximum possible
//! pair count for the current length. A flow is declared anomalous the
//! moment its score exceeds the threshold, or judged at `End`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::event::{self, EventSequence, EventSymbol};
use crate::flow::{CloseKind, FlowKey, FlowRecord};
use crate::learn::{max_pair_count, DelayDb, LookaheadDb, LookaheadPair};

/// Nudge applied when stepping the virtual clock onto a timeout deadline,
/// so strict "greater than the maximum delay" comparisons fire.
const DEADLINE_EPS: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct DetectorConfig {
    pub n: usize,
    /// Mismatch score maximum threshold, in (0, 1).
    pub threshold: f64,
    pub lookahead: LookaheadDb,
    pub delay: DelayDb,
    /// Timeout for transitions never seen in training.
    pub fallback_delay: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    WindowMismatch { db_n: usize, n: usize },
    BadThreshold,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::WindowMismatch { db_n, n } => {
                write!(f, "lookahead database built for n={db_n}, detector configured with n={n}")
            }
            ConfigError::BadThreshold => write!(f, "threshold must lie strictly between 0 and 1"),
        }
    }
}

impl core::error::Error for ConfigError {}

impl DetectorConfig {
    pub fn new(
        lookahead: LookaheadDb,
        delay: DelayDb,
        threshold: f64,
        fallback_delay: f64,
    ) -> Result<Self, ConfigError> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(ConfigError::BadThreshold);
        }
        Ok(DetectorConfig {
            n: lookahead.n,
            threshold,
            lookahead,
            delay,
            fallback_delay,
        })
    }
}

/// Maximum delay after which a flow whose last event is `last` counts as
/// stalled: the largest learned delay out of `last` toward any non-`*`
/// successor, or `fallback` when training never saw one.
pub fn max_delay_for(last: EventSymbol, delay_db: &DelayDb, fallback: f64) -> f64 {
    let mut best: Option<f64> = None;
    for ((a, b), d) in delay_db.entries.range((last, EventSymbol::Start)..) {
        if *a != last {
            break;
        }
        if *b == EventSymbol::Star {
            continue;
        }
        best = Some(match best {
            Some(m) if m >= *d => m,
            _ => *d,
        });
    }
    best.unwrap_or(fallback)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Anomalous,
    Normal,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Anomalous => write!(f, "anomalous"),
            Label::Normal => write!(f, "normal"),
        }
    }
}

/// One-shot classification of a flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub flow: FlowKey,
    pub label: Label,
    pub final_score: f64,
    /// `(sequence length, score)` after each evaluation.
    pub score_trace: Vec<(usize, f64)>,
    /// Time from the flow's first event to the decision.
    pub latency: f64,
    pub decided_at: f64,
}

/// Live scoring state of one undecided flow.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub seq: EventSequence,
    pub mismatch_count: u64,
    first_event_at: f64,
    trace: Vec<(usize, f64)>,
}

impl FlowState {
    fn new(key: FlowKey, established_at: f64, cfg: &DetectorConfig) -> Self {
        let seq = EventSequence {
            flow: key,
            events: Vec::new(),
        };
        let mut state = FlowState {
            seq,
            mismatch_count: 0,
            first_event_at: established_at,
            trace: Vec::new(),
        };
        state.append(EventSymbol::Start, established_at, cfg);
        state.append(EventSymbol::Star, established_at, cfg);
        state
    }

    /// Append one symbol and count the newly completed pairs that are
    /// absent from the database.
    fn append(&mut self, symbol: EventSymbol, ts: f64, cfg: &DetectorConfig) {
        let events = &self.seq.events;
        let j = events.len();
        let lo = j.saturating_sub(cfg.n);
        for i in lo..j {
            let pair = LookaheadPair {
                a: events[i].0,
                b: symbol,
                k: j - i,
            };
            if !cfg.lookahead.contains(&pair) {
                self.mismatch_count += 1;
            }
        }
        self.seq.events.push((symbol, ts));
    }

    pub fn score(&self, n: usize) -> f64 {
        let max = max_pair_count(self.seq.events.len(), n);
        if max == 0 {
            0.0
        } else {
            self.mismatch_count as f64 / max as f64
        }
    }

    /// Threshold check after a completed event group.
    fn evaluate(&mut self, cfg: &DetectorConfig, ts: f64, at_end: bool) -> Option<Verdict> {
        let len = self.seq.events.len();
        let score = self.score(cfg.n);
        self.trace.push((len, score));
        let label = if score > cfg.threshold {
            // Mid-flight verdicts wait until the sequence outgrows the
            // lookahead window; `End` always settles the flow.
            if !at_end && len <= cfg.n {
                return None;
            }
            Label::Anomalous
        } else if at_end {
            Label::Normal
        } else {
            return None;
        };
        Some(Verdict {
            flow: self.seq.flow,
            label,
            final_score: score,
            score_trace: core::mem::take(&mut self.trace),
            latency: ts - self.first_event_at,
            decided_at: ts,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DetectorStats {
    /// Events that arrived for already-decided flows.
    pub late_events: usize,
}

/// Streaming detector over any number of interleaved flows. Per-flow state
/// is isolated; the databases are read-only.
#[derive(Debug)]
pub struct Detector {
    cfg: DetectorConfig,
    flows: BTreeMap<FlowKey, FlowState>,
    decided: BTreeSet<FlowKey>,
    pub stats: DetectorStats,
}

impl Detector {
    pub fn new(cfg: DetectorConfig) -> Self {
        Detector {
            cfg,
            flows: BTreeMap::new(),
            decided: BTreeSet::new(),
            stats: DetectorStats::default(),
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// Number of flows currently tracked and undecided.
    pub fn pending(&self) -> usize {
        self.flows.len()
    }

    /// Register a flow at connection establishment.
    pub fn on_start(&mut self, key: FlowKey, established_at: f64) {
        if self.decided.contains(&key) {
            self.decided.remove(&key);
        }
        let Detector { cfg, flows, .. } = self;
        flows
            .entry(key)
            .or_insert_with(|| FlowState::new(key, established_at, cfg));
    }

    /// Ingest one frame's event group (the trailing `*` is appended here).
    pub fn on_group(
        &mut self,
        key: FlowKey,
        group: &[EventSymbol],
        ts: f64,
    ) -> Option<Verdict> {
        if group.is_empty() {
            return None;
        }
        if self.decided.contains(&key) {
            self.stats.late_events += group.len();
            return None;
        }
        let Detector { cfg, flows, .. } = &mut *self;
        let state = flows
            .entry(key)
            .or_insert_with(|| FlowState::new(key, ts, cfg));
        for &symbol in group {
            state.append(symbol, ts, cfg);
        }
        state.append(EventSymbol::Star, ts, cfg);
        let verdict = state.evaluate(cfg, ts, false);
        if verdict.is_some() {
            self.settle(key);
        }
        verdict
    }

    /// Ingest connection termination; always yields a verdict for a
    /// tracked flow.
    pub fn on_end(&mut self, key: FlowKey, ts: f64) -> Option<Verdict> {
        if self.decided.contains(&key) {
            self.stats.late_events += 1;
            return None;
        }
        let state = self.flows.get_mut(&key)?;
        state.append(EventSymbol::End, ts, &self.cfg);
        let verdict = state.evaluate(&self.cfg, ts, true);
        if verdict.is_some() {
            self.settle(key);
        }
        verdict
    }

    /// Advance the (virtual or real) clock, injecting timeout groups into
    /// every stalled flow and collecting any resulting verdicts.
    pub fn advance_to(&mut self, now: f64) -> Vec<Verdict> {
        let mut verdicts = Vec::new();
        let keys: Vec<FlowKey> = self.flows.keys().copied().collect();
        for key in keys {
            if let Some(verdict) = self.advance_flow(key, now) {
                verdicts.push(verdict);
            }
        }
        verdicts
    }

    /// Fire due timeouts for one flow up to `now`.
    pub fn advance_flow(&mut self, key: FlowKey, now: f64) -> Option<Verdict> {
        loop {
            let state = self.flows.get_mut(&key)?;
            let last = state.seq.events.last()?.0;
            let last_ts = state
                .seq
                .events
                .iter()
                .rev()
                .find(|(s, _)| *s != EventSymbol::Star)
                .map(|(_, t)| *t)?;
            let max_delay = max_delay_for(last, &self.cfg.delay, self.cfg.fallback_delay);
            let deadline = last_ts + max_delay;
            // Slack absorbs float noise so a gap exactly equal to the
            // learned maximum never fires.
            if deadline + 1e-9 >= now {
                return None;
            }
            let fire_at = deadline + DEADLINE_EPS;
            let injected = event::inject_timeout(&mut state.seq, fire_at, max_delay)
                .expect("deadline passed implies injection");
            // inject_timeout appended TO and `*` without scoring; redo the
            // bookkeeping through the scoring path.
            state.seq.events.truncate(state.seq.events.len() - 2);
            state.append(injected, fire_at, &self.cfg);
            state.append(EventSymbol::Star, fire_at, &self.cfg);
            if let Some(verdict) = state.evaluate(&self.cfg, fire_at, false) {
                self.settle(key);
                return Some(verdict);
            }
        }
    }

    fn settle(&mut self, key: FlowKey) {
        self.flows.remove(&key);
        self.decided.insert(key);
    }

    /// Offline driver: replay one reconstructed flow on its own timeline,
    /// firing timeouts between events, and return its verdict (None only
    /// for flows the capture never saw terminate).
    pub fn process_flow(&mut self, flow: &FlowRecord) -> Option<Verdict> {
        let key = flow.key;
        self.on_start(key, flow.established_at);
        for item in &flow.items {
            if let Some(v) = self.advance_flow(key, item.timestamp) {
                return Some(v);
            }
            let group = event::translate_item(&item.kind);
            if group.is_empty() {
                continue;
            }
            if let Some(v) = self.on_group(key, &group, item.timestamp) {
                return Some(v);
            }
        }
        if matches!(flow.close_kind, CloseKind::Fin | CloseKind::Rst) {
            let closed_at = flow.closed_at.unwrap_or(flow.established_at);
            if let Some(v) = self.advance_flow(key, closed_at) {
                return Some(v);
            }
            return self.on_end(key, closed_at);
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::extract_lookahead_pairs;
    use core::net::{IpAddr, Ipv4Addr};

    use EventSymbol::*;

    fn key(port: u16) -> FlowKey {
        FlowKey {
            src_ip: IpAddr::V4(Ipv4Addr::new(10, 0, 0, 2)),
            src_port: port,
            dst_ip: IpAddr::V4(Ipv4Addr::new(10, 0, 0, 1)),
            dst_port: 8080,
        }
    }

    /// DB built from the worked 8-event sample with n=3.
    fn sample_config(threshold: f64) -> DetectorConfig {
        let training = [
            Start,
            Star,
            MaxStreamsNonZero,
            InitWindowNonZero,
            Star,
            WindowIncrNonZero,
            Star,
            Pref,
        ];
        let mut lookahead = LookaheadDb::new(3);
        lookahead.pairs = extract_lookahead_pairs(&training, 3);
        DetectorConfig::new(lookahead, DelayDb::new(), threshold, 10.0).unwrap()
    }

    #[test]
    fn worked_example_scores_seven_of_twenty_one() {
        // Test sequence differs from the training one by an extra `*`
        // between the two SETTINGS parameter events.
        let cfg = sample_config(0.9);
        let mut detector = Detector::new(cfg);
        let k = key(1);
        detector.on_start(k, 0.0);
        // Start->* pre-seeded; remaining groups:
        detector.on_group(k, &[MaxStreamsNonZero], 0.1);
        detector.on_group(k, &[InitWindowNonZero], 0.2);
        detector.on_group(k, &[WindowIncrNonZero], 0.3);
        let state = detector.flows.get(&key(1)).unwrap();
        assert_eq!(state.seq.events.len(), 8);
        // Ninth event: a bare Pref with no trailing star; append it
        // directly for the arithmetic check.
        let mut state = state.clone();
        state.append(Pref, 0.4, detector.config());
        assert_eq!(state.seq.events.len(), 9);
        assert_eq!(state.mismatch_count, 7);
        assert_eq!(max_pair_count(9, 3), 21);
        let score = state.score(3);
        assert!((score - 7.0 / 21.0).abs() < 1e-9, "score {score}");
    }

    #[test]
    fn training_sequence_scores_zero_and_normal() {
        let mut cfg = sample_config(0.02);
        // Allow End after Pref for this synthetic replay.
        cfg.lookahead.pairs.extend([
            // Trailing star after the final Pref group:
            LookaheadPair { a: Pref, b: Star, k: 1 },
            LookaheadPair { a: Star, b: Star, k: 2 },
            LookaheadPair { a: WindowIncrNonZero, b: Star, k: 3 },
            // Connection close:
            LookaheadPair { a: Star, b: End, k: 1 },
            LookaheadPair { a: Pref, b: End, k: 2 },
            LookaheadPair { a: Star, b: End, k: 3 },
        ]);
        let mut detector = Detector::new(cfg);
        let k = key(2);
        detector.on_start(k, 0.0);
        detector.on_group(k, &[MaxStreamsNonZero, InitWindowNonZero], 0.1);
        detector.on_group(k, &[WindowIncrNonZero], 0.2);
        detector.on_group(k, &[Pref], 0.3);
        let verdict = detector.on_end(k, 0.4).unwrap();
        assert_eq!(verdict.label, Label::Normal);
        assert_eq!(verdict.final_score, 0.0);
        assert!(verdict.score_trace.iter().all(|(_, s)| *s == 0.0));
    }

    #[test]
    fn timeouts_drive_score_over_threshold() {
        // A bare Pref scores 3/6 = 0.5 against the sample DB; the high
        // threshold keeps the flow pending until timeouts pile on.
        let cfg = sample_config(0.6);
        let mut detector = Detector::new(cfg);
        let k = key(3);
        detector.on_start(k, 0.0);
        detector.on_group(k, &[Pref], 0.5);
        // No delay entries at all, so the 10s fallback governs.
        assert!(detector.advance_to(10.0).is_empty());
        let verdicts = detector.advance_to(60.0);
        assert_eq!(verdicts.len(), 1);
        assert_eq!(verdicts[0].label, Label::Anomalous);
        assert!(verdicts[0].final_score > 0.6);
        assert!(verdicts[0].decided_at < 11.0);
        // Later events for the decided flow are ignored but counted.
        assert!(detector.on_group(k, &[GoAway], 70.0).is_none());
        assert_eq!(detector.stats.late_events, 1);
    }

    #[test]
    fn max_delay_lookup_skips_star_targets() {
        let mut db = DelayDb::new();
        db.observe(Pref, SettingsUnacked, 0.5);
        db.observe(Pref, Star, 0.0);
        assert_eq!(max_delay_for(Pref, &db, 10.0), 0.5);
        assert_eq!(max_delay_for(GoAway, &db, 10.0), 10.0);
    }

    #[test]
    fn interleaved_flows_are_isolated() {
        let cfg = sample_config(0.5);
        let mut a = Detector::new(cfg.clone());
        let k1 = key(10);
        let k2 = key(11);
        a.on_start(k1, 0.0);
        a.on_start(k2, 0.0);
        a.on_group(k1, &[MaxStreamsNonZero, InitWindowNonZero], 0.1);
        a.on_group(k2, &[GoAway], 0.1);
        a.on_group(k1, &[WindowIncrNonZero], 0.2);
        a.on_group(k2, &[GoAway], 0.2);
        let s1 = a.flows[&k1].mismatch_count;

        let mut b = Detector::new(cfg);
        b.on_start(k1, 0.0);
        b.on_group(k1, &[MaxStreamsNonZero, InitWindowNonZero], 0.1);
        b.on_group(k1, &[WindowIncrNonZero], 0.2);
        assert_eq!(s1, b.flows[&k1].mismatch_count);
    }

    #[test]
    fn short_flow_decided_at_end() {
        let cfg = sample_config(0.02);
        let mut detector = Detector::new(cfg);
        let k = key(4);
        detector.on_start(k, 0.0);
        let verdict = detector.on_end(k, 0.1).unwrap();
        // Start->*->End: no mismatching pairs in the sample DB? Start:*,1
        // exists, Star:End,1 and Start:End,2 do not -> score > 0.
        assert_eq!(verdict.label, Label::Anomalous);
    }
}
