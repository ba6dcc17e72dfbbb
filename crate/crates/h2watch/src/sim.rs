//! Desk-scale traffic lab: scripted benign clients, the five slow-rate
//! attack behaviors, and a victim server with a finite connection queue
//! and wait duration 𝒯, all replayed on a virtual clock into a pcap
//! image plus ground-truth labels and a victim event log.
//!
//! All simulated time is kept in integer microseconds so timestamps
//! survive the pcap round trip bit-exactly; seconds appear only at the
//! configuration boundary.

use std::collections::BinaryHeap;
use std::fmt;
use std::net::{IpAddr, Ipv4Addr};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use h2watch_core::flow::FlowKey;
use h2watch_core::frame::{
    encode_frame, Frame, PREFACE, SETTINGS_INITIAL_WINDOW_SIZE, SETTINGS_MAX_CONCURRENT_STREAMS,
};
use h2watch_core::packet::{build_tcp_packet, TcpFlags};
use h2watch_core::pcap::PcapWriter;

pub const SERVER_IP: Ipv4Addr = Ipv4Addr::new(10, 0, 0, 1);
pub const CLIENT_IP: Ipv4Addr = Ipv4Addr::new(10, 0, 0, 2);
pub const SERVER_PORT: u16 = 8080;

const US: u64 = 1_000_000;
/// Server reaction delay to a client frame.
const REACT_US: u64 = 500;
/// Server response delay after a complete request.
const RESPONSE_US: u64 = 5_000;
/// Largest benign inter-frame gap; the learned delay ceiling.
pub const MAX_BENIGN_GAP_US: u64 = US;
/// Benign think-time quantum; gaps are multiples of this up to the max.
const GAP_STEP_US: u64 = 50_000;
/// Largest benign request body, in DATA frames.
pub const MAX_BODY_FRAMES: usize = 24;

// Fixed client-side opening offsets from establishment (microseconds).
const PREFACE_AT: u64 = 1_000;
const CLIENT_SETTINGS_AT: u64 = 2_000;
const CLIENT_ACK_AT: u64 = 3_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttackKind {
    ZeroWindow,
    IncompleteBody,
    PrefaceOnly,
    IncompleteHeader,
    UnackedSettings,
}

impl AttackKind {
    pub const ALL: [AttackKind; 5] = [
        AttackKind::ZeroWindow,
        AttackKind::IncompleteBody,
        AttackKind::PrefaceOnly,
        AttackKind::IncompleteHeader,
        AttackKind::UnackedSettings,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::ZeroWindow => "zero-window",
            AttackKind::IncompleteBody => "incomplete-body",
            AttackKind::PrefaceOnly => "preface-only",
            AttackKind::IncompleteHeader => "incomplete-header",
            AttackKind::UnackedSettings => "unacked-settings",
        }
    }
}

impl fmt::Display for AttackKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for AttackKind {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, ScenarioError> {
        match s {
            "zero-window" | "attack-1" => Ok(AttackKind::ZeroWindow),
            "incomplete-body" | "attack-2" => Ok(AttackKind::IncompleteBody),
            "preface-only" | "attack-3" => Ok(AttackKind::PrefaceOnly),
            "incomplete-header" | "attack-4" => Ok(AttackKind::IncompleteHeader),
            "unacked-settings" | "attack-5" => Ok(AttackKind::UnackedSettings),
            other => Err(ScenarioError::UnknownAttackKind(other.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("scenario does not parse: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("unknown attack kind `{0}`")]
    UnknownAttackKind(String),
    #[error("queue_capacity must be at least 1")]
    BadQueue,
    #[error("wait_duration must be positive")]
    BadWait,
    #[error("scenario generates no connections")]
    Empty,
    #[error("too many connections for one client address ({0})")]
    TooManyConnections(usize),
}

fn default_benign_interval() -> f64 {
    0.2
}

fn default_attack_interval() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenignBlock {
    pub count: usize,
    #[serde(default)]
    pub start: f64,
    #[serde(default = "default_benign_interval")]
    pub interval: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackBlock {
    pub kind: String,
    pub count: usize,
    #[serde(default)]
    pub start: f64,
    #[serde(default = "default_attack_interval")]
    pub interval: f64,
    /// Overrides the scenario-wide attacker hold time.
    pub hold: Option<f64>,
    /// Stealthy variant: long benign-looking prefix, one quiet second,
    /// then a polite close. Only meaningful for incomplete-body.
    #[serde(default)]
    pub stealthy: bool,
}

/// Parsed scenario file: victim configuration plus traffic blocks.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    pub queue_capacity: usize,
    /// 𝒯: how long the victim holds an incomplete request, seconds.
    pub wait_duration: f64,
    /// Default attacker hold time before the client walks away, seconds.
    #[serde(default = "default_hold")]
    pub hold: f64,
    pub benign: Option<BenignBlock>,
    #[serde(default)]
    pub attacks: Vec<AttackBlock>,
}

fn default_hold() -> f64 {
    100.0
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let sc: Scenario = toml::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        if self.queue_capacity < 1 {
            return Err(ScenarioError::BadQueue);
        }
        if !(self.wait_duration > 0.0) {
            return Err(ScenarioError::BadWait);
        }
        for block in &self.attacks {
            block.kind.parse::<AttackKind>()?;
        }
        let total = self.benign.as_ref().map_or(0, |b| b.count)
            + self.attacks.iter().map(|a| a.count).sum::<usize>();
        if total == 0 {
            return Err(ScenarioError::Empty);
        }
        if total > 60_000 {
            return Err(ScenarioError::TooManyConnections(total));
        }
        Ok(())
    }
}

/// What one scripted client sends, relative to connection establishment.
#[derive(Debug, Clone)]
enum ClientItem {
    Preface,
    Frame(Frame),
}

/// One planned connection, before victim admission.
#[derive(Debug, Clone)]
struct ConnPlan {
    id: usize,
    client_port: u16,
    syn_us: u64,
    items: Vec<(u64, ClientItem)>,
    /// Waits for the response, then GOAWAY + FIN (benign behavior).
    graceful: bool,
    /// Client walks away this long after establishment when the request
    /// never completes.
    close_offset_us: u64,
    label: &'static str,
    kind: &'static str,
}

impl ConnPlan {
    fn key(&self) -> FlowKey {
        FlowKey {
            src_ip: IpAddr::V4(CLIENT_IP),
            src_port: self.client_port,
            dst_ip: IpAddr::V4(SERVER_IP),
            dst_port: SERVER_PORT,
        }
    }
}

fn gap_us(rng: &mut ChaCha8Rng) -> u64 {
    GAP_STEP_US * rng.gen_range(1..=(MAX_BENIGN_GAP_US / GAP_STEP_US))
}

fn client_settings() -> Frame {
    Frame::settings(vec![
        (SETTINGS_MAX_CONCURRENT_STREAMS, 100),
        (SETTINGS_INITIAL_WINDOW_SIZE, 65_535),
    ])
}

pub(crate) fn server_settings() -> Frame {
    Frame::settings(vec![
        (SETTINGS_MAX_CONCURRENT_STREAMS, 128),
        (SETTINGS_INITIAL_WINDOW_SIZE, 65_535),
    ])
}

fn header_block() -> Vec<u8> {
    // Static-table HPACK-ish filler; the victim never decompresses it.
    vec![0x82, 0x86, 0x84, 0x41, 0x0a, 0x65, 0x78, 0x61, 0x6d, 0x70, 0x6c, 0x65]
}

fn data_payload() -> Vec<u8> {
    vec![0x61; 64]
}

/// One benign request shape: GET (no body) or POST with `body_frames`
/// DATA frames, optionally preceded by a connection window top-up.
#[derive(Debug, Clone, Copy)]
struct BenignCombo {
    window_update: bool,
    body_frames: usize,
}

/// Deterministic sweep covering every request shape; index `i` of any
/// cycle of 50 hits each (window_update, body) combination once.
fn combo_for(i: usize) -> BenignCombo {
    BenignCombo {
        window_update: (i / (MAX_BODY_FRAMES + 1)) % 2 == 1,
        body_frames: i % (MAX_BODY_FRAMES + 1),
    }
}

/// Benign opening: preface, SETTINGS exchange, ack both ways. Returns the
/// items and the offset at which the client may continue.
fn benign_opening(items: &mut Vec<(u64, ClientItem)>) -> u64 {
    items.push((PREFACE_AT, ClientItem::Preface));
    items.push((CLIENT_SETTINGS_AT, ClientItem::Frame(client_settings())));
    items.push((CLIENT_ACK_AT, ClientItem::Frame(Frame::settings_ack())));
    CLIENT_ACK_AT
}

fn benign_request(
    items: &mut Vec<(u64, ClientItem)>,
    mut at: u64,
    combo: BenignCombo,
    rng: &mut ChaCha8Rng,
    force_max_gap: bool,
) -> u64 {
    let mut gaps_needed = 1 + combo.body_frames + usize::from(combo.window_update);
    let mut next_gap = |rng: &mut ChaCha8Rng| {
        let g = if force_max_gap && gaps_needed > 0 {
            MAX_BENIGN_GAP_US
        } else {
            gap_us(rng)
        };
        gaps_needed = gaps_needed.saturating_sub(1);
        g
    };
    if combo.window_update {
        at += next_gap(rng);
        items.push((at, ClientItem::Frame(Frame::window_update(0, 65_535))));
    }
    at += next_gap(rng);
    let body = combo.body_frames;
    items.push((
        at,
        ClientItem::Frame(Frame::headers(1, header_block(), body == 0, true)),
    ));
    for i in 0..body {
        at += next_gap(rng);
        let last = i + 1 == body;
        items.push((at, ClientItem::Frame(Frame::data(1, data_payload(), last))));
    }
    at
}

fn benign_plan(combo: BenignCombo, rng: &mut ChaCha8Rng, force_max_gap: bool) -> ConnPlan {
    let mut items = Vec::new();
    let at = benign_opening(&mut items);
    benign_request(&mut items, at, combo, rng, force_max_gap);
    ConnPlan {
        id: 0,
        client_port: 0,
        syn_us: 0,
        items,
        graceful: true,
        close_offset_us: u64::MAX,
        label: "benign",
        kind: "benign",
    }
}

fn attack_plan(
    kind: AttackKind,
    stealthy: bool,
    hold_us: u64,
    rng: &mut ChaCha8Rng,
) -> ConnPlan {
    let mut items = Vec::new();
    let mut close = hold_us;
    match kind {
        AttackKind::ZeroWindow => {
            items.push((PREFACE_AT, ClientItem::Preface));
            items.push((
                CLIENT_SETTINGS_AT,
                ClientItem::Frame(Frame::settings(vec![(SETTINGS_INITIAL_WINDOW_SIZE, 0)])),
            ));
        }
        AttackKind::IncompleteBody => {
            let at = benign_opening(&mut items);
            let body = if stealthy {
                rng.gen_range(19..=MAX_BODY_FRAMES)
            } else {
                rng.gen_range(2..=8)
            };
            let mut t = at + GAP_STEP_US;
            items.push((
                t,
                ClientItem::Frame(Frame::headers(1, header_block(), false, true)),
            ));
            for _ in 0..body {
                t += 20_000;
                items.push((t, ClientItem::Frame(Frame::data(1, data_payload(), false))));
            }
            if stealthy {
                // Let exactly one server-side timeout elapse, then leave.
                close = t + MAX_BENIGN_GAP_US + 500_000;
            }
        }
        AttackKind::PrefaceOnly => {
            items.push((PREFACE_AT, ClientItem::Preface));
        }
        AttackKind::IncompleteHeader => {
            let at = benign_opening(&mut items);
            items.push((
                at + GAP_STEP_US,
                ClientItem::Frame(Frame::headers(1, header_block(), false, false)),
            ));
        }
        AttackKind::UnackedSettings => {
            items.push((PREFACE_AT, ClientItem::Preface));
            items.push((CLIENT_SETTINGS_AT, ClientItem::Frame(client_settings())));
        }
    }
    ConnPlan {
        id: 0,
        client_port: 0,
        syn_us: 0,
        items,
        graceful: false,
        close_offset_us: close,
        label: "attack",
        kind: if stealthy && kind == AttackKind::IncompleteBody {
            "incomplete-body-stealthy"
        } else {
            kind.name()
        },
    }
}

/// Victim log entry kinds. `close` marks a client that walked away from
/// an incomplete request before the victim's 𝒯 expired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VictimEvent {
    Accept,
    Reject,
    Complete,
    Expire,
    Close,
}

impl fmt::Display for VictimEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VictimEvent::Accept => "accept",
            VictimEvent::Reject => "reject",
            VictimEvent::Complete => "complete",
            VictimEvent::Expire => "expire",
            VictimEvent::Close => "close",
        })
    }
}

#[derive(Debug, Clone)]
pub struct LabelRecord {
    pub flow: FlowKey,
    pub label: String,
    pub kind: String,
}

#[derive(Debug)]
pub struct SimOutput {
    pub pcap: Vec<u8>,
    pub labels: Vec<LabelRecord>,
    pub victim_log: String,
    pub accepted: usize,
    pub rejected: usize,
}

/// Builds packets for one connection, keeping both directions' sequence
/// numbers straight.
struct ConnPackets<'a> {
    plan: &'a ConnPlan,
    out: Vec<(u64, usize, Vec<u8>)>,
    order: &'a mut usize,
    client_seq: u32,
    server_seq: u32,
}

impl<'a> ConnPackets<'a> {
    fn new(plan: &'a ConnPlan, order: &'a mut usize) -> Self {
        ConnPackets {
            plan,
            out: Vec::new(),
            order,
            client_seq: 1,
            server_seq: 1,
        }
    }

    fn push(&mut self, t_us: u64, from_client: bool, flags: TcpFlags, payload: &[u8]) {
        let (src_ip, dst_ip, sport, dport, seq, ack) = if from_client {
            (
                CLIENT_IP,
                SERVER_IP,
                self.plan.client_port,
                SERVER_PORT,
                self.client_seq,
                self.server_seq,
            )
        } else {
            (
                SERVER_IP,
                CLIENT_IP,
                SERVER_PORT,
                self.plan.client_port,
                self.server_seq,
                self.client_seq,
            )
        };
        let pkt = build_tcp_packet(src_ip, dst_ip, sport, dport, seq, ack, flags, payload);
        self.out.push((t_us, *self.order, pkt));
        *self.order += 1;
        let consumed = payload.len() as u32 + u32::from(flags.syn) + u32::from(flags.fin);
        if from_client {
            self.client_seq = self.client_seq.wrapping_add(consumed);
        } else {
            self.server_seq = self.server_seq.wrapping_add(consumed);
        }
    }

    fn handshake(&mut self, t_us: u64) {
        // SYN sequence numbers start one below the first payload byte.
        self.client_seq = 0;
        self.server_seq = 0;
        self.push(t_us, true, TcpFlags::SYN, &[]);
        self.push(t_us, false, TcpFlags::SYN_ACK, &[]);
        self.push(t_us, true, TcpFlags::ACK, &[]);
    }

    fn payload(&mut self, t_us: u64, from_client: bool, bytes: &[u8]) {
        self.push(t_us, from_client, TcpFlags::ACK, bytes);
    }

    fn fin_pair(&mut self, t_us: u64, client_first: bool) {
        if client_first {
            self.push(t_us, true, TcpFlags::FIN_ACK, &[]);
            self.push(t_us, false, TcpFlags::FIN_ACK, &[]);
        } else {
            self.push(t_us, false, TcpFlags::FIN_ACK, &[]);
            self.push(t_us, true, TcpFlags::FIN_ACK, &[]);
        }
    }
}

/// Scans a plan for the instant the request becomes complete in the
/// victim's eyes: headers finished, stream ended, SETTINGS acked, and no
/// zero-window advertisement.
fn completion_offset(plan: &ConnPlan) -> Option<u64> {
    let mut acked = false;
    let mut headers_done = false;
    let mut zero_window = false;
    for (off, item) in &plan.items {
        let frame = match item {
            ClientItem::Preface => continue,
            ClientItem::Frame(f) => f,
        };
        match &frame.body {
            h2watch_core::frame::FrameBody::Settings { ack, params } => {
                if *ack {
                    acked = true;
                } else if params
                    .iter()
                    .any(|(id, v)| *id == SETTINGS_INITIAL_WINDOW_SIZE && *v == 0)
                {
                    zero_window = true;
                }
            }
            h2watch_core::frame::FrameBody::Headers {
                end_stream,
                end_headers,
                ..
            } => {
                if *end_headers {
                    headers_done = true;
                    if *end_stream && acked && !zero_window {
                        return Some(*off);
                    }
                }
            }
            h2watch_core::frame::FrameBody::Data { end_stream, .. } => {
                if *end_stream && headers_done && acked && !zero_window {
                    return Some(*off);
                }
            }
            _ => {}
        }
    }
    None
}

/// Runs a scenario on the virtual clock: admission against the queue,
/// per-connection lifecycles, packet synthesis, labels, and the victim
/// log.
pub fn run_scenario(sc: &Scenario) -> Result<SimOutput, ScenarioError> {
    sc.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    let wait_us = (sc.wait_duration * US as f64).round() as u64;

    // Plan all connections with their arrival times.
    let mut plans: Vec<ConnPlan> = Vec::new();
    if let Some(benign) = &sc.benign {
        for i in 0..benign.count {
            let mut plan = benign_plan(combo_for(i), &mut rng, i == 0);
            plan.syn_us = secs_to_us(benign.start) + i as u64 * secs_to_us(benign.interval);
            plans.push(plan);
        }
    }
    for block in &sc.attacks {
        let kind: AttackKind = block.kind.parse()?;
        let hold_us = secs_to_us(block.hold.unwrap_or(sc.hold));
        for i in 0..block.count {
            let mut plan = attack_plan(kind, block.stealthy, hold_us, &mut rng);
            plan.syn_us = secs_to_us(block.start) + i as u64 * secs_to_us(block.interval);
            plans.push(plan);
        }
    }
    for (id, plan) in plans.iter_mut().enumerate() {
        plan.id = id;
        plan.client_port = 1024 + id as u16;
    }
    plans.sort_by_key(|p| (p.syn_us, p.id));

    // Admission: min-heap of slot release times (stored negated for the
    // max-heap), occupancy bounded by Q.
    let mut releases: BinaryHeap<std::cmp::Reverse<u64>> = BinaryHeap::new();
    let mut packets: Vec<(u64, usize, Vec<u8>)> = Vec::new();
    let mut log: Vec<(u64, usize, VictimEvent)> = Vec::new();
    let mut labels = Vec::new();
    let mut order = 0usize;
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    for plan in &plans {
        labels.push(LabelRecord {
            flow: plan.key(),
            label: plan.label.to_string(),
            kind: plan.kind.to_string(),
        });
        while let Some(std::cmp::Reverse(t)) = releases.peek().copied() {
            if t <= plan.syn_us {
                releases.pop();
            } else {
                break;
            }
        }
        if releases.len() >= sc.queue_capacity {
            // Queue full: the victim turns the connection away.
            let mut pkts = ConnPackets::new(plan, &mut order);
            pkts.client_seq = 0;
            pkts.push(plan.syn_us, true, TcpFlags::SYN, &[]);
            pkts.push(plan.syn_us, false, TcpFlags::RST, &[]);
            packets.extend(pkts.out);
            log.push((plan.syn_us, plan.id, VictimEvent::Reject));
            rejected += 1;
            continue;
        }
        accepted += 1;
        let est = plan.syn_us;
        log.push((est, plan.id, VictimEvent::Accept));
        let mut pkts = ConnPackets::new(plan, &mut order);
        pkts.handshake(est);

        // Lifecycle decision.
        let complete_off = completion_offset(plan);
        let (cutoff, outcome) = match complete_off {
            Some(off) if plan.graceful && off <= wait_us => {
                (u64::MAX, VictimEvent::Complete)
            }
            _ if plan.close_offset_us < wait_us => {
                (plan.close_offset_us, VictimEvent::Close)
            }
            _ => (wait_us, VictimEvent::Expire),
        };

        // Client traffic and the victim's scripted reactions.
        let mut server_reactions: Vec<(u64, Frame)> = Vec::new();
        for (off, item) in &plan.items {
            if *off >= cutoff {
                break;
            }
            match item {
                ClientItem::Preface => {
                    pkts.payload(est + off, true, &PREFACE);
                    server_reactions.push((off + REACT_US, server_settings()));
                }
                ClientItem::Frame(frame) => {
                    let bytes = encode_frame(frame).expect("scripted frames encode");
                    pkts.payload(est + off, true, &bytes);
                    if let h2watch_core::frame::FrameBody::Settings { ack: false, .. } =
                        &frame.body
                    {
                        server_reactions.push((off + REACT_US, Frame::settings_ack()));
                    }
                }
            }
        }
        for (off, frame) in server_reactions {
            if off >= cutoff {
                continue;
            }
            let bytes = encode_frame(&frame).expect("scripted frames encode");
            pkts.payload(est + off, false, &bytes);
        }

        // Termination.
        let closed_off = match outcome {
            VictimEvent::Complete => {
                let off = complete_off.unwrap();
                log.push((est + off, plan.id, VictimEvent::Complete));
                let resp = encode_frame(&Frame::headers(1, header_block(), true, true)).unwrap();
                pkts.payload(est + off + RESPONSE_US, false, &resp);
                let goaway = encode_frame(&Frame::goaway(1, 0)).unwrap();
                pkts.payload(est + off + RESPONSE_US + 1_000, true, &goaway);
                let fin_off = off + RESPONSE_US + 2_000;
                pkts.fin_pair(est + fin_off, true);
                fin_off
            }
            VictimEvent::Close => {
                log.push((est + cutoff, plan.id, VictimEvent::Close));
                pkts.fin_pair(est + cutoff, true);
                cutoff
            }
            VictimEvent::Expire => {
                // The victim gives up at exactly established + 𝒯.
                log.push((est + wait_us, plan.id, VictimEvent::Expire));
                let goaway = encode_frame(&Frame::goaway(0, 11)).unwrap();
                pkts.payload(est + wait_us, false, &goaway);
                pkts.fin_pair(est + wait_us, false);
                wait_us
            }
            _ => unreachable!(),
        };
        releases.push(std::cmp::Reverse(est + closed_off));
        packets.extend(pkts.out);
    }

    packets.sort_by_key(|(t, ord, _)| (*t, *ord));
    let mut writer = PcapWriter::new();
    for (t_us, _, bytes) in &packets {
        writer.push(*t_us as f64 / US as f64, bytes);
    }

    log.sort_by_key(|(t, id, _)| (*t, *id));
    let mut victim_log = String::new();
    for (t, id, ev) in &log {
        victim_log.push_str(&format!(
            "t={:.6} conn={} event={}\n",
            *t as f64 / US as f64,
            id,
            ev
        ));
    }

    Ok(SimOutput {
        pcap: writer.into_bytes(),
        labels,
        victim_log,
        accepted,
        rejected,
    })
}

fn secs_to_us(s: f64) -> u64 {
    (s * US as f64).round() as u64
}

fn plan_to_script(plan: &ConnPlan) -> Vec<(u64, Vec<u8>)> {
    plan.items
        .iter()
        .map(|(off, item)| {
            let bytes = match item {
                ClientItem::Preface => PREFACE.to_vec(),
                ClientItem::Frame(f) => encode_frame(f).expect("scripted frames encode"),
            };
            (*off, bytes)
        })
        .collect()
}

/// Client-side byte script (offset µs → payload) for driving a real
/// socket with one attack connection.
pub fn attack_script(kind: AttackKind, seed: u64) -> Vec<(u64, Vec<u8>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    plan_to_script(&attack_plan(kind, false, 0, &mut rng))
}

/// Same for one benign request; `index` walks the request-shape sweep.
pub fn benign_script(index: usize, seed: u64) -> Vec<(u64, Vec<u8>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64));
    plan_to_script(&benign_plan(combo_for(index), &mut rng, false))
}
