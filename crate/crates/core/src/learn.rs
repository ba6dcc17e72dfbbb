//! Learning phase: build the lookahead-pair database and the per-transition
//! maximum-delay database from benign flows.
//!
//! A lookahead pair records that symbol `b` followed symbol `a` at distance
//! `k <= n` inside a sliding window of size `n + 1`. Tail windows are
//! truncated, so a sequence of length `len` contributes exactly
//! `n * (len - (n + 1) / 2)` pair instances once `len >= n + 1`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::event::{self, EventSequence, EventSymbol};
use crate::flow::FlowRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LookaheadPair {
    pub a: EventSymbol,
    pub b: EventSymbol,
    pub k: usize,
}

impl fmt::Display for LookaheadPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{},{}", self.a, self.b, self.k)
    }
}

/// The learned set of lookahead pairs for a fixed window size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LookaheadDb {
    pub n: usize,
    pub pairs: BTreeSet<LookaheadPair>,
}

impl LookaheadDb {
    pub fn new(n: usize) -> Self {
        LookaheadDb {
            n,
            pairs: BTreeSet::new(),
        }
    }

    pub fn contains(&self, pair: &LookaheadPair) -> bool {
        self.pairs.contains(pair)
    }

    /// `#lookahead n=<n>` header, then one `A:B,k` line per pair, sorted
    /// lexicographically for diff-stability.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<String> = self.pairs.iter().map(|p| p.to_string()).collect();
        lines.sort();
        let mut out = alloc::format!("#lookahead n={}\n", self.n);
        for line in lines {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DbParseError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(DbParseError::MissingHeader)?;
        let n = header
            .strip_prefix("#lookahead n=")
            .and_then(|v| v.trim().parse().ok())
            .ok_or(DbParseError::MissingHeader)?;
        let mut db = LookaheadDb::new(n);
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (a, rest) = line
                .split_once(':')
                .ok_or_else(|| DbParseError::BadLine(line.into()))?;
            let (b, k) = rest
                .rsplit_once(',')
                .ok_or_else(|| DbParseError::BadLine(line.into()))?;
            let pair = LookaheadPair {
                a: a.parse().map_err(|_| DbParseError::BadLine(line.into()))?,
                b: b.parse().map_err(|_| DbParseError::BadLine(line.into()))?,
                k: k.parse().map_err(|_| DbParseError::BadLine(line.into()))?,
            };
            if pair.k == 0 || pair.k > n {
                return Err(DbParseError::BadLine(line.into()));
            }
            db.pairs.insert(pair);
        }
        Ok(db)
    }
}

/// Per-transition maximum benign delay, in fractional seconds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DelayDb {
    pub entries: BTreeMap<(EventSymbol, EventSymbol), f64>,
}

impl DelayDb {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record one observed adjacent delay, keeping the maximum.
    pub fn observe(&mut self, a: EventSymbol, b: EventSymbol, delay: f64) {
        let delay = if delay < 0.0 { 0.0 } else { delay };
        let entry = self.entries.entry((a, b)).or_insert(delay);
        if delay > *entry {
            *entry = delay;
        }
    }

    /// `#delay` header, then one `A->B=<seconds>` line per transition.
    pub fn to_text(&self) -> String {
        let mut lines: Vec<String> = self
            .entries
            .iter()
            .map(|((a, b), d)| alloc::format!("{a}->{b}={d}"))
            .collect();
        lines.sort();
        let mut out = String::from("#delay\n");
        for line in lines {
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, DbParseError> {
        let mut lines = text.lines();
        match lines.next() {
            Some("#delay") => {}
            _ => return Err(DbParseError::MissingHeader),
        }
        let mut db = DelayDb::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            // Symbols may contain `=` (e.g. Ini_Win_Size=0); the delay value
            // sits after the last one.
            let (transition, delay) = line
                .rsplit_once('=')
                .ok_or_else(|| DbParseError::BadLine(line.into()))?;
            let (a, b) = transition
                .split_once("->")
                .ok_or_else(|| DbParseError::BadLine(line.into()))?;
            db.entries.insert(
                (
                    a.parse().map_err(|_| DbParseError::BadLine(line.into()))?,
                    b.parse().map_err(|_| DbParseError::BadLine(line.into()))?,
                ),
                delay.parse().map_err(|_| DbParseError::BadLine(line.into()))?,
            );
        }
        Ok(db)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DbParseError {
    MissingHeader,
    BadLine(String),
}

impl fmt::Display for DbParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DbParseError::MissingHeader => write!(f, "missing or invalid database header"),
            DbParseError::BadLine(line) => write!(f, "unparseable database line `{line}`"),
        }
    }
}

impl core::error::Error for DbParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmptyTraining;

impl fmt::Display for EmptyTraining {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no training flows supplied")
    }
}

impl core::error::Error for EmptyTraining {}

/// Iterate all lookahead-pair instances of a symbol slice, with
/// multiplicity: every `(events[i], events[i + k], k)` for `k` in `1..=n`.
pub fn pair_instances(
    events: &[EventSymbol],
    n: usize,
) -> impl Iterator<Item = LookaheadPair> + '_ {
    events.iter().enumerate().flat_map(move |(i, &a)| {
        events[i + 1..]
            .iter()
            .take(n)
            .enumerate()
            .map(move |(off, &b)| LookaheadPair { a, b, k: off + 1 })
    })
}

/// The distinct lookahead pairs of a sequence.
pub fn extract_lookahead_pairs(events: &[EventSymbol], n: usize) -> BTreeSet<LookaheadPair> {
    pair_instances(events, n).collect()
}

/// Number of pair instances a sequence of length `len` yields; equals
/// `n * (len - (n + 1) / 2)` whenever `len >= n + 1`.
pub fn max_pair_count(len: usize, n: usize) -> u64 {
    let len = len as u64;
    let n = n as u64;
    if len > n {
        // n(len - n) full-width positions plus the truncated tail.
        n * (2 * len - n - 1) / 2
    } else if len > 0 {
        len * (len - 1) / 2
    } else {
        0
    }
}

/// Algorithm: walk every benign flow, union its lookahead pairs into the
/// database and fold every adjacent-event delay into the max-delay map.
pub fn learn(flows: &[FlowRecord], n: usize) -> Result<(LookaheadDb, DelayDb), EmptyTraining> {
    if flows.is_empty() {
        return Err(EmptyTraining);
    }
    let mut lookahead = LookaheadDb::new(n);
    let mut delay = DelayDb::new();
    for flow in flows {
        let seq = event::build_sequence(flow);
        learn_sequence(&seq, n, &mut lookahead, &mut delay);
    }
    Ok((lookahead, delay))
}

/// Fold one already-built sequence into the databases.
pub fn learn_sequence(
    seq: &EventSequence,
    n: usize,
    lookahead: &mut LookaheadDb,
    delay: &mut DelayDb,
) {
    debug_assert_eq!(lookahead.n, n);
    let symbols: Vec<EventSymbol> = seq.symbols().collect();
    lookahead.pairs.extend(pair_instances(&symbols, n));
    for pair in seq.events.windows(2) {
        let (a, ta) = pair[0];
        let (b, tb) = pair[1];
        delay.observe(a, b, tb - ta);
    }
}

/// Cumulative count of distinct pairs after each flow, in the given order.
pub fn saturation_curve(flows: &[FlowRecord], n: usize) -> Vec<(usize, usize)> {
    let mut seen: BTreeSet<LookaheadPair> = BTreeSet::new();
    let mut curve = Vec::with_capacity(flows.len());
    for (i, flow) in flows.iter().enumerate() {
        let symbols: Vec<EventSymbol> = event::build_sequence(flow).symbols().collect();
        seen.extend(pair_instances(&symbols, n));
        curve.push((i + 1, seen.len()));
    }
    curve
}
