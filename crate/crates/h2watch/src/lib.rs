//! Desk-scale lab and detector for slow HTTP/2 denial-of-service
//! behaviors: traffic simulation, training, offline and live detection,
//! and evaluation, on top of the `h2watch-core` protocol and scoring
//! primitives.

pub mod bench;
pub mod files;
pub mod net;
pub mod pipeline;
pub mod sim;

pub use h2watch_core as core;
