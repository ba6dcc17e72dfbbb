//! Per-connection TCP reassembly into time-ordered frame streams.
//!
//! The assembler consumes captured packets (any order the capture presents
//! them in), reassembles each direction's payload in sequence-number order,
//! cuts it into HTTP/2 frames and emits one [`FlowRecord`] per connection
//! incarnation with lifecycle markers.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;
use core::fmt;
use core::net::IpAddr;

use crate::frame::{self, DecodeError, Frame, PREFACE};
use crate::packet::{self, ParseError, TcpSegment};
use crate::pcap::{PcapError, PcapReader};

/// The TCP 4-tuple identifying a flow, client side first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowKey {
    pub src_ip: IpAddr,
    pub src_port: u16,
    pub dst_ip: IpAddr,
    pub dst_port: u16,
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{}->{}:{}",
            self.src_ip, self.src_port, self.dst_ip, self.dst_port
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ClientToServer,
    ServerToClient,
}

/// One reassembled unit inside a flow.
#[derive(Debug, Clone, PartialEq)]
pub enum ItemKind {
    /// The 24-byte client connection preface.
    Preface,
    Frame(Frame),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowItem {
    pub timestamp: f64,
    pub direction: Direction,
    pub kind: ItemKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloseKind {
    Fin,
    Rst,
    CaptureEnd,
}

/// A reconstructed connection: lifecycle timestamps plus the merged,
/// time-ordered frame stream of both directions.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub key: FlowKey,
    pub established_at: f64,
    pub closed_at: Option<f64>,
    pub items: Vec<FlowItem>,
    pub close_kind: CloseKind,
    /// False when the capture attached mid-connection (no 3-way handshake).
    pub handshake_seen: bool,
    /// Sequence gap or decode failure left partial frames undecoded.
    pub reassembly_gap: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssembleStats {
    pub packets: usize,
    pub non_tcp: usize,
    pub gap_flows: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowError {
    /// `waiting_time` on a flow that never closed.
    StillOpen,
    /// CDF over a set with no closed flows.
    NoClosedFlows,
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::StillOpen => write!(f, "flow is still open"),
            FlowError::NoClosedFlows => write!(f, "no closed flows"),
        }
    }
}

impl core::error::Error for FlowError {}

/// Wall-clock lifetime of a closed flow: connection establishment to
/// termination.
pub fn waiting_time(flow: &FlowRecord) -> Result<f64, FlowError> {
    match flow.closed_at {
        Some(closed) => Ok(closed - flow.established_at),
        None => Err(FlowError::StillOpen),
    }
}

/// Empirical CDF of waiting times over the closed flows, as
/// `(duration, cumulative fraction)` steps ending at 1.0.
pub fn waiting_time_cdf(flows: &[FlowRecord]) -> Result<Vec<(f64, f64)>, FlowError> {
    let mut durations: Vec<f64> = flows.iter().filter_map(|f| waiting_time(f).ok()).collect();
    if durations.is_empty() {
        return Err(FlowError::NoClosedFlows);
    }
    durations.sort_by(|a, b| a.total_cmp(b));
    let total = durations.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, d) in durations.iter().enumerate() {
        let fraction = (i + 1) as f64 / total;
        match out.last_mut() {
            Some(last) if last.0 == *d => last.1 = fraction,
            _ => out.push((*d, fraction)),
        }
    }
    Ok(out)
}

type Endpoint = (IpAddr, u16);

/// Byte stream of one direction: contiguity tracking plus incremental frame
/// cutting with per-frame timestamps.
#[derive(Debug, Default)]
struct DirStream {
    /// Next expected sequence number; None until SYN or first data.
    next_seq: Option<u32>,
    /// Out-of-order segments waiting for the gap to fill.
    pending: BTreeMap<u32, (f64, Vec<u8>)>,
    /// Contiguous, not-yet-decoded bytes.
    buf: Vec<u8>,
    /// `(end offset in buf, timestamp)` of each contributing chunk.
    marks: VecDeque<(usize, f64)>,
    /// Client direction only: set once the preface was seen or ruled out.
    preface_done: bool,
    /// Decoding stopped on a malformed frame.
    poisoned: bool,
    fin_at: Option<f64>,
}

impl DirStream {
    fn push_contiguous(&mut self, ts: f64, data: &[u8]) {
        if data.is_empty() {
            return;
        }
        self.buf.extend_from_slice(data);
        self.marks.push_back((self.buf.len(), ts));
    }

    /// Timestamp of the chunk that supplied byte `n - 1`, then drop the first
    /// `n` bytes.
    fn consume(&mut self, n: usize) -> f64 {
        let mut ts = 0.0;
        for &(end, t) in self.marks.iter() {
            if end >= n {
                ts = t;
                break;
            }
        }
        self.buf.drain(..n);
        while let Some(&(end, _)) = self.marks.front() {
            if end <= n {
                self.marks.pop_front();
            } else {
                break;
            }
        }
        for mark in self.marks.iter_mut() {
            mark.0 -= n;
        }
        ts
    }

    fn has_gap(&self) -> bool {
        !self.pending.is_empty() || self.poisoned
    }
}

#[derive(Debug)]
struct ConnState {
    client: Endpoint,
    server: Endpoint,
    syn_seen: bool,
    synack_seen: bool,
    established_at: Option<f64>,
    first_packet_at: f64,
    client_dir: DirStream,
    server_dir: DirStream,
    items: Vec<FlowItem>,
    closed_at: Option<f64>,
    close_kind: Option<CloseKind>,
}

impl ConnState {
    fn closed(&self) -> bool {
        self.close_kind.is_some()
    }
}

/// Single-writer reassembly state machine over one capture source.
#[derive(Debug, Default)]
pub struct Assembler {
    active: BTreeMap<(Endpoint, Endpoint), ConnState>,
    done: Vec<FlowRecord>,
    stats: AssembleStats,
}

impl Assembler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feed one link-layer frame with its capture timestamp. Non-TCP packets
    /// are counted and skipped.
    pub fn push_packet(&mut self, ts: f64, link_frame: &[u8]) {
        self.stats.packets += 1;
        match packet::parse_ethernet(link_frame) {
            Ok(seg) => self.push_segment(ts, &seg),
            Err(ParseError::NotTcp) | Err(ParseError::Truncated) => self.stats.non_tcp += 1,
        }
    }

    pub fn push_segment(&mut self, ts: f64, seg: &TcpSegment<'_>) {
        let src: Endpoint = (seg.src_ip, seg.src_port);
        let dst: Endpoint = (seg.dst_ip, seg.dst_port);
        let key = if src <= dst { (src, dst) } else { (dst, src) };

        // A fresh SYN on a closed connection starts a new incarnation.
        if seg.syn && !seg.ack_flag {
            if let Some(state) = self.active.get(&key) {
                if state.closed() {
                    let state = self.active.remove(&key).unwrap();
                    self.finalize(state);
                }
            }
        }

        let state = self.active.entry(key).or_insert_with(|| {
            // SYN sender is the client; otherwise assume the first packet we
            // see travels client -> server.
            let (client, server) = (src, dst);
            ConnState {
                client,
                server,
                syn_seen: false,
                synack_seen: false,
                established_at: None,
                first_packet_at: ts,
                client_dir: DirStream::default(),
                server_dir: DirStream::default(),
                items: Vec::new(),
                closed_at: None,
                close_kind: None,
            }
        });

        let from_client = src == state.client;
        if seg.syn && !seg.ack_flag {
            // Normalize roles in case the server->client packet arrived first.
            if !from_client {
                core::mem::swap(&mut state.client, &mut state.server);
                core::mem::swap(&mut state.client_dir, &mut state.server_dir);
            }
            state.syn_seen = true;
            state.client_dir.next_seq = Some(seg.seq.wrapping_add(1));
            return;
        }
        if seg.syn && seg.ack_flag {
            state.synack_seen = true;
            state.server_dir.next_seq = Some(seg.seq.wrapping_add(1));
            return;
        }
        if seg.rst {
            if !state.closed() {
                state.closed_at = Some(ts);
                state.close_kind = Some(CloseKind::Rst);
            }
            return;
        }
        if state.syn_seen && state.synack_seen && state.established_at.is_none() && seg.ack_flag {
            state.established_at = Some(ts);
        }

        let from_client = src == state.client;
        let dir = if from_client {
            &mut state.client_dir
        } else {
            &mut state.server_dir
        };
        if !seg.payload.is_empty() {
            ingest_payload(dir, ts, seg.seq, seg.payload);
            let direction = if from_client {
                Direction::ClientToServer
            } else {
                Direction::ServerToClient
            };
            decode_ready(dir, direction, from_client, &mut state.items);
        }
        if seg.fin {
            dir.fin_at = Some(ts);
            if state.client_dir.fin_at.is_some() && state.server_dir.fin_at.is_some() {
                let a = state.client_dir.fin_at.unwrap();
                let b = state.server_dir.fin_at.unwrap();
                state.closed_at = Some(if a > b { a } else { b });
                state.close_kind = Some(CloseKind::Fin);
            }
        }
    }

    /// Flush all connections and return the reconstructed flows.
    pub fn finish(mut self) -> (Vec<FlowRecord>, AssembleStats) {
        let states: Vec<ConnState> = core::mem::take(&mut self.active).into_values().collect();
        for state in states {
            self.finalize(state);
        }
        let mut flows = self.done;
        // Capture order can interleave directions arbitrarily; present items
        // in time order.
        for flow in flows.iter_mut() {
            flow.items
                .sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        }
        flows.sort_by(|a, b| {
            a.established_at
                .total_cmp(&b.established_at)
                .then_with(|| a.key.cmp(&b.key))
        });
        (flows, self.stats)
    }

    fn finalize(&mut self, state: ConnState) {
        let gap = state.client_dir.has_gap() || state.server_dir.has_gap();
        if gap {
            self.stats.gap_flows += 1;
        }
        let handshake_seen = state.syn_seen && state.synack_seen;
        let record = FlowRecord {
            key: FlowKey {
                src_ip: state.client.0,
                src_port: state.client.1,
                dst_ip: state.server.0,
                dst_port: state.server.1,
            },
            established_at: state.established_at.unwrap_or(state.first_packet_at),
            closed_at: state.closed_at,
            items: state.items,
            close_kind: state.close_kind.unwrap_or(CloseKind::CaptureEnd),
            handshake_seen,
            reassembly_gap: gap,
        };
        self.done.push(record);
    }
}

fn ingest_payload(dir: &mut DirStream, ts: f64, seq: u32, payload: &[u8]) {
    let next = *dir.next_seq.get_or_insert(seq);
    let offset = seq.wrapping_sub(next) as i64;
    // Wrapping distance: anything "behind" by less than 2^31 is old data.
    if offset > i64::from(u32::MAX / 2) {
        let behind = next.wrapping_sub(seq) as usize;
        if behind >= payload.len() {
            return; // pure retransmission
        }
        dir.next_seq = Some(next.wrapping_add((payload.len() - behind) as u32));
        dir.push_contiguous(ts, &payload[behind..]);
    } else if offset == 0 {
        dir.next_seq = Some(next.wrapping_add(payload.len() as u32));
        dir.push_contiguous(ts, payload);
    } else {
        dir.pending.insert(seq, (ts, payload.to_vec()));
        return;
    }
    // Drain any queued segments the new data made contiguous.
    loop {
        let next = dir.next_seq.unwrap();
        let Some((&seq, _)) = dir.pending.range(..=next).next_back() else {
            break;
        };
        let behind = next.wrapping_sub(seq) as usize;
        let (ts, data) = dir.pending.remove(&seq).unwrap();
        if behind >= data.len() {
            continue;
        }
        dir.next_seq = Some(next.wrapping_add((data.len() - behind) as u32));
        dir.push_contiguous(ts, &data[behind..]);
    }
}

fn decode_ready(dir: &mut DirStream, direction: Direction, is_client: bool, items: &mut Vec<FlowItem>) {
    if dir.poisoned {
        return;
    }
    if is_client && !dir.preface_done {
        let want = PREFACE.len().min(dir.buf.len());
        if dir.buf[..want] == PREFACE[..want] {
            if want < PREFACE.len() {
                return; // could still be a partial preface
            }
            let ts = dir.consume(PREFACE.len());
            items.push(FlowItem {
                timestamp: ts,
                direction,
                kind: ItemKind::Preface,
            });
        }
        dir.preface_done = true;
    }
    loop {
        match frame::decode_frame(&dir.buf) {
            Ok((frame, consumed)) => {
                let ts = dir.consume(consumed);
                items.push(FlowItem {
                    timestamp: ts,
                    direction,
                    kind: ItemKind::Frame(frame),
                });
            }
            Err(DecodeError::Truncated { .. }) => break,
            Err(DecodeError::Malformed(_)) => {
                dir.poisoned = true;
                break;
            }
        }
    }
}

/// Assemble a whole in-memory pcap image.
pub fn assemble_pcap(bytes: &[u8]) -> Result<(Vec<FlowRecord>, AssembleStats), PcapError> {
    let mut asm = Assembler::new();
    for record in PcapReader::new(bytes)? {
        let record = record?;
        asm.push_packet(record.timestamp, record.data);
    }
    Ok(asm.finish())
}
