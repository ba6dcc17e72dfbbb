//! On-disk formats: database files, verdict lines, label files, and
//! metric CSVs. Writes go through a temp file and rename so partial
//! output is never observed.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use h2watch_core::detect::Verdict;
use h2watch_core::metrics::Summary;

use crate::sim::LabelRecord;

/// Write-temp-then-rename so readers never see half a file.
pub fn atomic_write(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)
}

/// One verdict per line, stable field order; the `flow=` value matches
/// the label file's flow column.
pub fn render_verdict(v: &Verdict) -> String {
    let len = v.score_trace.last().map_or(0, |(l, _)| *l);
    format!(
        "flow={} label={} score={:.6} latency={:.6} len={}",
        v.flow, v.label, v.final_score, v.latency, len
    )
}

pub fn render_verdicts(verdicts: &[Verdict]) -> String {
    let mut out = String::new();
    for v in verdicts {
        out.push_str(&render_verdict(v));
        out.push('\n');
    }
    out
}

/// Per-flow score trace as CSV rows `flow,len,score`.
pub fn render_traces(verdicts: &[Verdict]) -> String {
    let mut out = String::from("flow,len,score\n");
    for v in verdicts {
        for (len, score) in &v.score_trace {
            let _ = writeln!(out, "{},{},{:.6}", v.flow, len, score);
        }
    }
    out
}

pub fn render_labels(labels: &[LabelRecord]) -> String {
    let mut out = String::from("flow,label,kind\n");
    for l in labels {
        let _ = writeln!(out, "{},{},{}", l.flow, l.label, l.kind);
    }
    out
}

#[derive(Debug, Clone)]
pub struct ParsedLabel {
    pub malicious: bool,
    pub kind: String,
}

#[derive(Debug, thiserror::Error)]
#[error("bad label line: {0}")]
pub struct LabelParseError(String);

/// Parses the label file into flow-string → ground truth.
pub fn parse_labels(text: &str) -> Result<HashMap<String, ParsedLabel>, LabelParseError> {
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() || (i == 0 && line.starts_with("flow,")) {
            continue;
        }
        let mut parts = line.splitn(3, ',');
        let (flow, label, kind) = match (parts.next(), parts.next(), parts.next()) {
            (Some(f), Some(l), Some(k)) => (f, l, k),
            _ => return Err(LabelParseError(line.to_string())),
        };
        let malicious = match label {
            "attack" => true,
            "benign" => false,
            _ => return Err(LabelParseError(line.to_string())),
        };
        map.insert(
            flow.to_string(),
            ParsedLabel {
                malicious,
                kind: kind.to_string(),
            },
        );
    }
    Ok(map)
}

pub fn render_summary_csv(s: &Summary) -> String {
    fn cell(v: Option<f64>) -> String {
        v.map_or_else(|| "NA".to_string(), |x| format!("{x:.2}"))
    }
    let c = s.counts;
    let mut out = String::from("metric,value\n");
    for (name, value) in [
        ("tp", c.tp.to_string()),
        ("fp", c.fp.to_string()),
        ("tn", c.tn.to_string()),
        ("fn", c.fn_.to_string()),
        ("accuracy", cell(s.accuracy)),
        ("recall", cell(s.recall)),
        ("precision", cell(s.precision)),
        ("fpr", cell(s.false_positive_rate)),
        ("f1", cell(s.f1)),
    ] {
        let _ = writeln!(out, "{name},{value}");
    }
    out
}

pub fn render_latency_cdf(cdf: &[(f64, f64)]) -> String {
    let mut out = String::from("latency,fraction\n");
    for (lat, frac) in cdf {
        let _ = writeln!(out, "{lat:.6},{frac:.6}");
    }
    out
}

/// Smoke helper for tests: pull one `key=value` field out of a verdict
/// line.
pub fn verdict_field<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    line.split_whitespace()
        .find_map(|tok| tok.strip_prefix(key)?.strip_prefix('='))
}
