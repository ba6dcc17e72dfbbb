//! Classic libpcap container format, parsed from and written to byte
//! buffers. File IO lives in the companion crate.

use alloc::vec::Vec;
use core::fmt;

pub const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
pub const MAGIC_NANOS: u32 = 0xa1b2_3c4d;
pub const LINKTYPE_ETHERNET: u32 = 1;

const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;

/// One captured packet: timestamp in seconds and the link-layer bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord<'a> {
    pub timestamp: f64,
    pub data: &'a [u8],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PcapError {
    BadMagic(u32),
    UnsupportedLinkType(u32),
    Truncated,
}

impl fmt::Display for PcapError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PcapError::BadMagic(m) => write!(f, "not a pcap file (magic {m:#010x})"),
            PcapError::UnsupportedLinkType(lt) => write!(f, "unsupported link type {lt}"),
            PcapError::Truncated => write!(f, "truncated pcap record"),
        }
    }
}

impl core::error::Error for PcapError {}

/// Iterator over the records of an in-memory pcap image.
pub struct PcapReader<'a> {
    buf: &'a [u8],
    pos: usize,
    swapped: bool,
    nanos: bool,
}

impl<'a> PcapReader<'a> {
    pub fn new(buf: &'a [u8]) -> Result<Self, PcapError> {
        if buf.len() < GLOBAL_HEADER_LEN {
            return Err(PcapError::Truncated);
        }
        let magic = u32::from_be_bytes([buf[0], buf[1], buf[2], buf[3]]);
        let (swapped, nanos) = match magic {
            MAGIC_MICROS => (false, false),
            MAGIC_NANOS => (false, true),
            m if m.swap_bytes() == MAGIC_MICROS => (true, false),
            m if m.swap_bytes() == MAGIC_NANOS => (true, true),
            m => return Err(PcapError::BadMagic(m)),
        };
        let read32 = |b: &[u8]| {
            let v = u32::from_be_bytes([b[0], b[1], b[2], b[3]]);
            if swapped {
                v.swap_bytes()
            } else {
                v
            }
        };
        let linktype = read32(&buf[20..24]);
        if linktype != LINKTYPE_ETHERNET {
            return Err(PcapError::UnsupportedLinkType(linktype));
        }
        Ok(PcapReader {
            buf,
            pos: GLOBAL_HEADER_LEN,
            swapped,
            nanos,
        })
    }

    fn read32(&self, at: usize) -> u32 {
        let b = &self.buf[at..at + 4];
        let v = u32::from_be_bytes([b[0], b[1], b[2], b[3]]);
        if self.swapped {
            v.swap_bytes()
        } else {
            v
        }
    }
}

impl<'a> Iterator for PcapReader<'a> {
    type Item = Result<PacketRecord<'a>, PcapError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.pos == self.buf.len() {
            return None;
        }
        if self.buf.len() - self.pos < RECORD_HEADER_LEN {
            self.pos = self.buf.len();
            return Some(Err(PcapError::Truncated));
        }
        let ts_sec = self.read32(self.pos) as f64;
        let ts_frac = self.read32(self.pos + 4) as f64;
        let incl_len = self.read32(self.pos + 8) as usize;
        let start = self.pos + RECORD_HEADER_LEN;
        if self.buf.len() - start < incl_len {
            self.pos = self.buf.len();
            return Some(Err(PcapError::Truncated));
        }
        self.pos = start + incl_len;
        let frac_scale = if self.nanos { 1e-9 } else { 1e-6 };
        Some(Ok(PacketRecord {
            timestamp: ts_sec + ts_frac * frac_scale,
            data: &self.buf[start..start + incl_len],
        }))
    }
}

/// Builds a little-endian, microsecond-resolution, ethernet pcap image.
#[derive(Debug, Clone)]
pub struct PcapWriter {
    buf: Vec<u8>,
}

impl PcapWriter {
    pub fn new() -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(&MAGIC_MICROS.to_le_bytes());
        buf.extend_from_slice(&2u16.to_le_bytes()); // version 2.4
        buf.extend_from_slice(&4u16.to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes()); // thiszone
        buf.extend_from_slice(&0u32.to_le_bytes()); // sigfigs
        buf.extend_from_slice(&65535u32.to_le_bytes()); // snaplen
        buf.extend_from_slice(&LINKTYPE_ETHERNET.to_le_bytes());
        PcapWriter { buf }
    }

    pub fn push(&mut self, timestamp: f64, data: &[u8]) {
        let sec = timestamp as u64;
        // Round to the nearest microsecond so timestamps survive the trip.
        let usec = ((timestamp - sec as f64) * 1e6 + 0.5) as u32;
        let (sec, usec) = if usec >= 1_000_000 {
            (sec + 1, usec - 1_000_000)
        } else {
            (sec, usec)
        };
        self.buf.extend_from_slice(&(sec as u32).to_le_bytes());
        self.buf.extend_from_slice(&usec.to_le_bytes());
        self.buf.extend_from_slice(&(data.len() as u32).to_le_bytes());
        self.buf.extend_from_slice(&(data.len() as u32).to_le_bytes());
        self.buf.extend_from_slice(data);
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

impl Default for PcapWriter {
    fn default() -> Self {
        Self::new()
    }
}
