//! Minimal ethernet / IP / TCP header parsing for captured packets, plus a
//! small builder used by the traffic simulator and tests.
//!
//! Only what flow reassembly needs is extracted: addresses, ports, sequence
//! numbers, the SYN/ACK/FIN/RST flags and the payload. IP options and IPv6
//! extension headers are skipped where possible; fragments are out of scope.

use alloc::vec::Vec;
use core::fmt;
use core::net::{IpAddr, Ipv4Addr, Ipv6Addr};

pub const ETHERTYPE_IPV4: u16 = 0x0800;
pub const ETHERTYPE_IPV6: u16 = 0x86dd;

/// A parsed TCP segment with the fields reassembly needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcpSegment<'a> {
    pub src_ip: IpAddr,
    pub dst_ip: IpAddr,
    pub src_port: u16,
    pub dst_port: u16,
    pub seq: u32,
    pub ack: u32,
    pub syn: bool,
    pub ack_flag: bool,
    pub fin: bool,
    pub rst: bool,
    pub payload: &'a [u8],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseError {
    /// Not an IPv4/IPv6-over-ethernet TCP packet.
    NotTcp,
    /// Headers claim more data than the capture holds.
    Truncated,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseError::NotTcp => write!(f, "not a TCP packet"),
            ParseError::Truncated => write!(f, "truncated packet headers"),
        }
    }
}

impl core::error::Error for ParseError {}

/// Parse an ethernet frame down to a TCP segment.
pub fn parse_ethernet(frame: &[u8]) -> Result<TcpSegment<'_>, ParseError> {
    if frame.len() < 14 {
        return Err(ParseError::Truncated);
    }
    let ethertype = u16::from_be_bytes([frame[12], frame[13]]);
    let body = &frame[14..];
    match ethertype {
        ETHERTYPE_IPV4 => parse_ipv4(body),
        ETHERTYPE_IPV6 => parse_ipv6(body),
        _ => Err(ParseError::NotTcp),
    }
}

fn parse_ipv4(body: &[u8]) -> Result<TcpSegment<'_>, ParseError> {
    if body.len() < 20 {
        return Err(ParseError::Truncated);
    }
    if body[0] >> 4 != 4 {
        return Err(ParseError::NotTcp);
    }
    let ihl = (body[0] & 0x0f) as usize * 4;
    let total_len = u16::from_be_bytes([body[2], body[3]]) as usize;
    if body[9] != 6 {
        return Err(ParseError::NotTcp);
    }
    if ihl < 20 || body.len() < total_len || total_len < ihl {
        return Err(ParseError::Truncated);
    }
    let src = IpAddr::V4(Ipv4Addr::new(body[12], body[13], body[14], body[15]));
    let dst = IpAddr::V4(Ipv4Addr::new(body[16], body[17], body[18], body[19]));
    parse_tcp(&body[ihl..total_len], src, dst)
}

fn parse_ipv6(body: &[u8]) -> Result<TcpSegment<'_>, ParseError> {
    if body.len() < 40 {
        return Err(ParseError::Truncated);
    }
    // Next-header chains (extension headers) are not followed.
    if body[6] != 6 {
        return Err(ParseError::NotTcp);
    }
    let payload_len = u16::from_be_bytes([body[4], body[5]]) as usize;
    if body.len() < 40 + payload_len {
        return Err(ParseError::Truncated);
    }
    let mut src = [0u8; 16];
    let mut dst = [0u8; 16];
    src.copy_from_slice(&body[8..24]);
    dst.copy_from_slice(&body[24..40]);
    parse_tcp(
        &body[40..40 + payload_len],
        IpAddr::V6(Ipv6Addr::from(src)),
        IpAddr::V6(Ipv6Addr::from(dst)),
    )
}

fn parse_tcp<'a>(seg: &'a [u8], src_ip: IpAddr, dst_ip: IpAddr) -> Result<TcpSegment<'a>, ParseError> {
    if seg.len() < 20 {
        return Err(ParseError::Truncated);
    }
    let data_offset = (seg[12] >> 4) as usize * 4;
    if data_offset < 20 || seg.len() < data_offset {
        return Err(ParseError::Truncated);
    }
    let flags = seg[13];
    Ok(TcpSegment {
        src_ip,
        dst_ip,
        src_port: u16::from_be_bytes([seg[0], seg[1]]),
        dst_port: u16::from_be_bytes([seg[2], seg[3]]),
        seq: u32::from_be_bytes([seg[4], seg[5], seg[6], seg[7]]),
        ack: u32::from_be_bytes([seg[8], seg[9], seg[10], seg[11]]),
        syn: flags & 0x02 != 0,
        ack_flag: flags & 0x10 != 0,
        fin: flags & 0x01 != 0,
        rst: flags & 0x04 != 0,
        payload: &seg[data_offset..],
    })
}

/// TCP flag set for [`build_tcp_packet`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TcpFlags {
    pub syn: bool,
    pub ack: bool,
    pub fin: bool,
    pub rst: bool,
}

impl TcpFlags {
    pub const SYN: TcpFlags = TcpFlags { syn: true, ack: false, fin: false, rst: false };
    pub const SYN_ACK: TcpFlags = TcpFlags { syn: true, ack: true, fin: false, rst: false };
    pub const ACK: TcpFlags = TcpFlags { syn: false, ack: true, fin: false, rst: false };
    pub const FIN_ACK: TcpFlags = TcpFlags { syn: false, ack: true, fin: true, rst: false };
    pub const RST: TcpFlags = TcpFlags { syn: false, ack: false, fin: false, rst: true };
}

/// Build an ethernet + IPv4 + TCP packet. Only IPv4 is synthesized; the IP
/// header checksum is filled in, the TCP checksum is left zero as in
/// offload-enabled captures.
pub fn build_tcp_packet(
    src_ip: Ipv4Addr,
    dst_ip: Ipv4Addr,
    src_port: u16,
    dst_port: u16,
    seq: u32,
    ack: u32,
    flags: TcpFlags,
    payload: &[u8],
) -> Vec<u8> {
    let mut out = Vec::with_capacity(14 + 20 + 20 + payload.len());
    // Ethernet: fixed dummy MACs.
    out.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x01]);
    out.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x02]);
    out.extend_from_slice(&ETHERTYPE_IPV4.to_be_bytes());

    let total_len = (20 + 20 + payload.len()) as u16;
    let ip_start = out.len();
    out.push(0x45);
    out.push(0);
    out.extend_from_slice(&total_len.to_be_bytes());
    out.extend_from_slice(&[0, 0, 0x40, 0]); // id, DF
    out.push(64); // ttl
    out.push(6); // tcp
    out.extend_from_slice(&[0, 0]); // checksum placeholder
    out.extend_from_slice(&src_ip.octets());
    out.extend_from_slice(&dst_ip.octets());
    let csum = ipv4_checksum(&out[ip_start..ip_start + 20]);
    out[ip_start + 10] = (csum >> 8) as u8;
    out[ip_start + 11] = csum as u8;

    out.extend_from_slice(&src_port.to_be_bytes());
    out.extend_from_slice(&dst_port.to_be_bytes());
    out.extend_from_slice(&seq.to_be_bytes());
    out.extend_from_slice(&ack.to_be_bytes());
    out.push(0x50); // data offset 5
    let mut f = 0u8;
    if flags.fin {
        f |= 0x01;
    }
    if flags.syn {
        f |= 0x02;
    }
    if flags.rst {
        f |= 0x04;
    }
    if flags.ack {
        f |= 0x10;
    }
    out.push(f);
    out.extend_from_slice(&0xffffu16.to_be_bytes()); // window
    out.extend_from_slice(&[0, 0, 0, 0]); // checksum + urgent
    out.extend_from_slice(payload);
    out
}

fn ipv4_checksum(header: &[u8]) -> u16 {
    let mut sum = 0u32;
    for chunk in header.chunks(2) {
        sum += u16::from_be_bytes([chunk[0], chunk[1]]) as u32;
    }
    while sum >> 16 != 0 {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}
