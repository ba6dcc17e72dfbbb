//! Translation of reconstructed flows into event sequences.
//!
//! Each frame maps to a short group of symbols from a closed alphabet, each
//! group is terminated by a `*` marking the end of the frame, the 3-way
//! handshake contributes `Start` and real connection termination contributes
//! `End`. During live detection, stalls beyond the learned maximum delay
//! inject `TO_i` timeout groups.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::flow::{CloseKind, FlowKey, FlowRecord, ItemKind};
use crate::frame::{
    FrameBody, SETTINGS_INITIAL_WINDOW_SIZE, SETTINGS_MAX_CONCURRENT_STREAMS,
};

/// The closed event alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventSymbol {
    Start,
    Pref,
    /// DATA frame with END_STREAM reset.
    DataNotEndStream,
    /// DATA frame with END_STREAM set.
    DataEndStream,
    /// HEADERS frame with both END_STREAM and END_HEADERS reset.
    HdrNeither,
    /// HEADERS frame with END_STREAM reset and END_HEADERS set.
    HdrEndHeadersOnly,
    /// HEADERS frame with both END_STREAM and END_HEADERS set.
    HdrBoth,
    SettingsAck,
    /// Non-ack SETTINGS frame carrying no recognized parameter.
    SettingsUnacked,
    InitWindowZero,
    InitWindowNonZero,
    MaxStreamsNonZero,
    MaxStreamsZero,
    WindowIncrNonZero,
    WindowIncrZero,
    GoAway,
    Continuation,
    End,
    /// End-of-frame marker.
    Star,
    /// Injected timeout; the index counts consecutive timeouts in one stall.
    Timeout(u32),
}

impl fmt::Display for EventSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventSymbol::Start => write!(f, "Start"),
            EventSymbol::Pref => write!(f, "Pref"),
            EventSymbol::DataNotEndStream => write!(f, "Data_frame_!ES"),
            EventSymbol::DataEndStream => write!(f, "Data_frame_ES"),
            EventSymbol::HdrNeither => write!(f, "Hdr_frame_!(ESEH)"),
            EventSymbol::HdrEndHeadersOnly => write!(f, "Hdr_frame_!ES_EH"),
            EventSymbol::HdrBoth => write!(f, "Hdr_frame_(ESEH)"),
            EventSymbol::SettingsAck => write!(f, "Settings_ACK"),
            EventSymbol::SettingsUnacked => write!(f, "Settings_UNACK"),
            EventSymbol::InitWindowZero => write!(f, "Ini_Win_Size=0"),
            EventSymbol::InitWindowNonZero => write!(f, "Ini_Win_Size!0"),
            EventSymbol::MaxStreamsNonZero => write!(f, "Max_Con_Strm!0"),
            EventSymbol::MaxStreamsZero => write!(f, "Max_Con_Strm=0"),
            EventSymbol::WindowIncrNonZero => write!(f, "win_size_incr!0"),
            EventSymbol::WindowIncrZero => write!(f, "win_size_incr=0"),
            EventSymbol::GoAway => write!(f, "GOAWAY"),
            EventSymbol::Continuation => write!(f, "CONTINUATION"),
            EventSymbol::End => write!(f, "End"),
            EventSymbol::Star => write!(f, "*"),
            EventSymbol::Timeout(i) => write!(f, "TO_{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownSymbol(pub String);

impl fmt::Display for UnknownSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown event symbol `{}`", self.0)
    }
}

impl core::error::Error for UnknownSymbol {}

impl FromStr for EventSymbol {
    type Err = UnknownSymbol;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Start" => EventSymbol::Start,
            "Pref" => EventSymbol::Pref,
            "Data_frame_!ES" => EventSymbol::DataNotEndStream,
            "Data_frame_ES" => EventSymbol::DataEndStream,
            "Hdr_frame_!(ESEH)" => EventSymbol::HdrNeither,
            "Hdr_frame_!ES_EH" => EventSymbol::HdrEndHeadersOnly,
            "Hdr_frame_(ESEH)" => EventSymbol::HdrBoth,
            "Settings_ACK" => EventSymbol::SettingsAck,
            "Settings_UNACK" => EventSymbol::SettingsUnacked,
            "Ini_Win_Size=0" => EventSymbol::InitWindowZero,
            "Ini_Win_Size!0" => EventSymbol::InitWindowNonZero,
            "Max_Con_Strm!0" => EventSymbol::MaxStreamsNonZero,
            "Max_Con_Strm=0" => EventSymbol::MaxStreamsZero,
            "win_size_incr!0" => EventSymbol::WindowIncrNonZero,
            "win_size_incr=0" => EventSymbol::WindowIncrZero,
            "GOAWAY" => EventSymbol::GoAway,
            "CONTINUATION" => EventSymbol::Continuation,
            "End" => EventSymbol::End,
            "*" => EventSymbol::Star,
            other => {
                if let Some(idx) = other.strip_prefix("TO_") {
                    let i: u32 = idx.parse().map_err(|_| UnknownSymbol(String::from(other)))?;
                    if i == 0 {
                        return Err(UnknownSymbol(String::from(other)));
                    }
                    EventSymbol::Timeout(i)
                } else {
                    return Err(UnknownSymbol(String::from(other)));
                }
            }
        })
    }
}

/// The per-flow event sequence: symbols with their source timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    pub flow: FlowKey,
    pub events: Vec<(EventSymbol, f64)>,
}

impl EventSequence {
    pub fn symbols(&self) -> impl Iterator<Item = EventSymbol> + '_ {
        self.events.iter().map(|(s, _)| *s)
    }

    /// `Start->*->Pref->*->End` rendering, one flow per line in fixtures.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, (symbol, _)) in self.events.iter().enumerate() {
            if i > 0 {
                out.push_str("->");
            }
            out.push_str(&alloc::format!("{symbol}"));
        }
        out
    }
}

/// Translate one reassembled item into its event group, excluding the
/// trailing `*`. Frames without a table row yield an empty group.
pub fn translate_item(item: &ItemKind) -> Vec<EventSymbol> {
    let frame = match item {
        ItemKind::Preface => return alloc::vec![EventSymbol::Pref],
        ItemKind::Frame(frame) => frame,
    };
    match &frame.body {
        FrameBody::Data { end_stream, .. } => alloc::vec![if *end_stream {
            EventSymbol::DataEndStream
        } else {
            EventSymbol::DataNotEndStream
        }],
        FrameBody::Headers {
            end_stream,
            end_headers,
            ..
        } => match (end_stream, end_headers) {
            (true, true) => alloc::vec![EventSymbol::HdrBoth],
            (false, true) => alloc::vec![EventSymbol::HdrEndHeadersOnly],
            (false, false) => alloc::vec![EventSymbol::HdrNeither],
            // HEADERS with END_STREAM set but END_HEADERS reset has no
            // table row; treated like other unlisted frames.
            (true, false) => Vec::new(),
        },
        FrameBody::Continuation { .. } => alloc::vec![EventSymbol::Continuation],
        FrameBody::Settings { ack: true, .. } => alloc::vec![EventSymbol::SettingsAck],
        FrameBody::Settings { ack: false, params } => {
            let mut events = Vec::new();
            for (id, value) in params {
                match *id {
                    SETTINGS_INITIAL_WINDOW_SIZE => events.push(if *value == 0 {
                        EventSymbol::InitWindowZero
                    } else {
                        EventSymbol::InitWindowNonZero
                    }),
                    SETTINGS_MAX_CONCURRENT_STREAMS => events.push(if *value == 0 {
                        EventSymbol::MaxStreamsZero
                    } else {
                        EventSymbol::MaxStreamsNonZero
                    }),
                    _ => {}
                }
            }
            if events.is_empty() {
                events.push(EventSymbol::SettingsUnacked);
            }
            events
        }
        FrameBody::WindowUpdate { increment } => alloc::vec![if *increment == 0 {
            EventSymbol::WindowIncrZero
        } else {
            EventSymbol::WindowIncrNonZero
        }],
        FrameBody::GoAway { .. } => alloc::vec![EventSymbol::GoAway],
        FrameBody::Other { .. } => Vec::new(),
    }
}

/// Build the full event sequence for a reconstructed flow: `Start`, `*`,
/// then each item's group followed by `*`, then `End` for real termination.
pub fn build_sequence(flow: &FlowRecord) -> EventSequence {
    let mut events = Vec::with_capacity(flow.items.len() * 2 + 3);
    events.push((EventSymbol::Start, flow.established_at));
    events.push((EventSymbol::Star, flow.established_at));
    for item in &flow.items {
        let group = translate_item(&item.kind);
        if group.is_empty() {
            continue;
        }
        for symbol in group {
            events.push((symbol, item.timestamp));
        }
        events.push((EventSymbol::Star, item.timestamp));
    }
    if matches!(flow.close_kind, CloseKind::Fin | CloseKind::Rst) {
        // capture-end is not a real termination and must not look like one.
        let at = flow.closed_at.unwrap_or_else(|| {
            events.last().map(|(_, t)| *t).unwrap_or(flow.established_at)
        });
        events.push((EventSymbol::End, at));
    }
    EventSequence {
        flow: flow.key,
        events,
    }
}

/// If the flow has been idle past `max_delay`, append a `TO_i` group and
/// return the injected symbol. The index continues a run of consecutive
/// timeout groups and resets once a real event arrives.
pub fn inject_timeout(
    seq: &mut EventSequence,
    now: f64,
    max_delay: f64,
) -> Option<EventSymbol> {
    let (last_symbol, last_ts) = *seq
        .events
        .iter()
        .rev()
        .find(|(s, _)| *s != EventSymbol::Star)?;
    if now - last_ts <= max_delay {
        return None;
    }
    let index = match last_symbol {
        EventSymbol::Timeout(i) => i + 1,
        _ => 1,
    };
    let symbol = EventSymbol::Timeout(index);
    seq.events.push((symbol, now));
    seq.events.push((EventSymbol::Star, now));
    Some(symbol)
}
