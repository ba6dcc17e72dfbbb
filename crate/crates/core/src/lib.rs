//! Core building blocks for detecting slow HTTP/2 denial-of-service behavior.
//!
//! This crate is `no_std` + `alloc` and carries no IO. It provides:
//!
//! - [`frame`]: HTTP/2 frame encode/decode and the client connection preface
//! - [`packet`]: ethernet/IP/TCP header parsing for captured packets
//! - [`pcap`]: classic libpcap container parsing and in-memory writing
//! - [`flow`]: per-connection TCP reassembly into timestamped frame streams
//! - [`event`]: translation of flows into event sequences
//! - [`learn`]: lookahead-pair and max-delay database construction
//! - [`detect`]: streaming per-flow mismatch scoring and verdicts
//! - [`metrics`]: confusion counts, summary metrics and latency CDFs
//!
//! File formats, sockets, traffic generation and the CLI live in the
//! companion `h2watch` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod detect;
pub mod event;
pub mod flow;
pub mod frame;
pub mod learn;
pub mod metrics;
pub mod packet;
pub mod pcap;
