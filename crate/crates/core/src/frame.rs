//! HTTP/2 frame codec.
//!
//! Frames have a fixed 9-byte header (RFC 7540 §4.1):
//!
//! ```text
//! +-----------------------------------------------+
//! |                 Length (24)                   |
//! +---------------+---------------+---------------+
//! |   Type (8)    |   Flags (8)   |
//! +-+-------------+---------------+---------------+
//! |R|                 Stream Identifier (31)      |
//! +=+=============================================+
//! |                   Frame Payload (0...)      ...
//! +-----------------------------------------------+
//! ```
//!
//! Only the fields the event translation and the attack generators need are
//! modelled. Header blocks are carried as opaque bytes (no HPACK), padding
//! and priority sub-fields are skipped, and unknown frame types decode to
//! [`FrameBody::Other`] so that downstream code still sees a frame boundary.

use alloc::vec::Vec;
use core::fmt;

/// The 24-byte client connection preface ("PRI * HTTP/2.0\r\n\r\nSM\r\n\r\n").
pub const PREFACE: [u8; 24] = [
    0x50, 0x52, 0x49, 0x20, 0x2a, 0x20, 0x48, 0x54, 0x54, 0x50, 0x2f, 0x32, 0x2e, 0x30, 0x0d,
    0x0a, 0x0d, 0x0a, 0x53, 0x4d, 0x0d, 0x0a, 0x0d, 0x0a,
];

pub const FRAME_HEADER_LEN: usize = 9;
pub const MAX_PAYLOAD_LEN: usize = (1 << 24) - 1;

// Frame type codes (RFC 7540 §6).
pub const TYPE_DATA: u8 = 0x0;
pub const TYPE_HEADERS: u8 = 0x1;
pub const TYPE_PRIORITY: u8 = 0x2;
pub const TYPE_RST_STREAM: u8 = 0x3;
pub const TYPE_SETTINGS: u8 = 0x4;
pub const TYPE_PUSH_PROMISE: u8 = 0x5;
pub const TYPE_PING: u8 = 0x6;
pub const TYPE_GOAWAY: u8 = 0x7;
pub const TYPE_WINDOW_UPDATE: u8 = 0x8;
pub const TYPE_CONTINUATION: u8 = 0x9;

// Flag bits.
pub const FLAG_END_STREAM: u8 = 0x1;
pub const FLAG_ACK: u8 = 0x1;
pub const FLAG_END_HEADERS: u8 = 0x4;
pub const FLAG_PADDED: u8 = 0x8;
pub const FLAG_PRIORITY: u8 = 0x20;

// SETTINGS parameter identifiers (RFC 7540 §6.5.2).
pub const SETTINGS_MAX_CONCURRENT_STREAMS: u16 = 0x3;
pub const SETTINGS_INITIAL_WINDOW_SIZE: u16 = 0x4;

/// The fixed 9-byte header of every frame, kept verbatim from the wire.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    /// Payload length (24-bit).
    pub length: u32,
    /// Raw frame type code.
    pub frame_type: u8,
    /// Raw flags byte.
    pub flags: u8,
    /// Stream identifier (31-bit, reserved bit masked off).
    pub stream_id: u32,
}

/// Parsed payload, one variant per frame type the detector cares about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FrameBody {
    Data {
        end_stream: bool,
        payload: Vec<u8>,
    },
    Headers {
        end_stream: bool,
        end_headers: bool,
        block: Vec<u8>,
    },
    Continuation {
        end_headers: bool,
        block: Vec<u8>,
    },
    Settings {
        ack: bool,
        /// (identifier, value) pairs in on-wire order.
        params: Vec<(u16, u32)>,
    },
    WindowUpdate {
        increment: u32,
    },
    GoAway {
        last_stream_id: u32,
        error_code: u32,
        debug: Vec<u8>,
    },
    /// PING, PRIORITY, RST_STREAM, PUSH_PROMISE and unknown types.
    Other {
        raw: Vec<u8>,
    },
}

/// A decoded HTTP/2 frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub header: FrameHeader,
    pub body: FrameBody,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeError {
    /// More input is needed; reports how many further bytes.
    Truncated { need: usize },
    /// Structurally invalid payload for its declared type.
    Malformed(&'static str),
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeError::Truncated { need } => write!(f, "truncated frame: need {need} more bytes"),
            DecodeError::Malformed(what) => write!(f, "malformed frame: {what}"),
        }
    }
}

impl core::error::Error for DecodeError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncodeError {
    /// Body does not fit in the 24-bit length field.
    OversizedPayload { len: usize },
}

impl fmt::Display for EncodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EncodeError::OversizedPayload { len } => {
                write!(f, "payload of {len} bytes exceeds the 24-bit frame length")
            }
        }
    }
}

impl core::error::Error for EncodeError {}

fn be16(b: &[u8]) -> u16 {
    u16::from_be_bytes([b[0], b[1]])
}

fn be32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

/// Decode the first complete frame in `buf`, returning it and the number of
/// bytes consumed.
pub fn decode_frame(buf: &[u8]) -> Result<(Frame, usize), DecodeError> {
    if buf.len() < FRAME_HEADER_LEN {
        return Err(DecodeError::Truncated {
            need: FRAME_HEADER_LEN - buf.len(),
        });
    }
    let length = ((buf[0] as u32) << 16) | ((buf[1] as u32) << 8) | buf[2] as u32;
    let header = FrameHeader {
        length,
        frame_type: buf[3],
        flags: buf[4],
        stream_id: be32(&buf[5..9]) & 0x7fff_ffff,
    };
    let total = FRAME_HEADER_LEN + length as usize;
    if buf.len() < total {
        return Err(DecodeError::Truncated {
            need: total - buf.len(),
        });
    }
    let payload = &buf[FRAME_HEADER_LEN..total];
    let flags = header.flags;

    let body = match header.frame_type {
        TYPE_DATA => {
            let data = strip_padding(payload, flags, 0)?;
            FrameBody::Data {
                end_stream: flags & FLAG_END_STREAM != 0,
                payload: data.to_vec(),
            }
        }
        TYPE_HEADERS => {
            // Priority sub-fields (5 bytes) sit after the pad-length byte.
            let prio = if flags & FLAG_PRIORITY != 0 { 5 } else { 0 };
            let block = strip_padding(payload, flags, prio)?;
            FrameBody::Headers {
                end_stream: flags & FLAG_END_STREAM != 0,
                end_headers: flags & FLAG_END_HEADERS != 0,
                block: block.to_vec(),
            }
        }
        TYPE_CONTINUATION => FrameBody::Continuation {
            end_headers: flags & FLAG_END_HEADERS != 0,
            block: payload.to_vec(),
        },
        TYPE_SETTINGS => {
            if payload.len() % 6 != 0 {
                return Err(DecodeError::Malformed("SETTINGS length not a multiple of 6"));
            }
            let ack = flags & FLAG_ACK != 0;
            if ack && !payload.is_empty() {
                return Err(DecodeError::Malformed("SETTINGS ack with non-empty payload"));
            }
            let params = payload
                .chunks_exact(6)
                .map(|c| (be16(&c[0..2]), be32(&c[2..6])))
                .collect();
            FrameBody::Settings { ack, params }
        }
        TYPE_WINDOW_UPDATE => {
            if payload.len() != 4 {
                return Err(DecodeError::Malformed("WINDOW_UPDATE length is not 4"));
            }
            FrameBody::WindowUpdate {
                increment: be32(payload) & 0x7fff_ffff,
            }
        }
        TYPE_GOAWAY => {
            if payload.len() < 8 {
                return Err(DecodeError::Malformed("GOAWAY shorter than 8 bytes"));
            }
            FrameBody::GoAway {
                last_stream_id: be32(&payload[0..4]) & 0x7fff_ffff,
                error_code: be32(&payload[4..8]),
                debug: payload[8..].to_vec(),
            }
        }
        _ => FrameBody::Other {
            raw: payload.to_vec(),
        },
    };

    Ok((Frame { header, body }, total))
}

fn strip_padding(payload: &[u8], flags: u8, skip_front: usize) -> Result<&[u8], DecodeError> {
    if flags & FLAG_PADDED == 0 {
        if payload.len() < skip_front {
            return Err(DecodeError::Malformed("payload shorter than priority fields"));
        }
        return Ok(&payload[skip_front..]);
    }
    if payload.is_empty() {
        return Err(DecodeError::Malformed("padded frame with empty payload"));
    }
    let pad = payload[0] as usize;
    let rest = &payload[1..];
    if rest.len() < skip_front + pad {
        return Err(DecodeError::Malformed("padding exceeds payload"));
    }
    Ok(&rest[skip_front..rest.len() - pad])
}

/// Encode a frame back to wire bytes. Inverse of [`decode_frame`] for frames
/// without padding or priority sub-fields.
pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, EncodeError> {
    let mut payload = Vec::new();
    match &frame.body {
        FrameBody::Data { payload: p, .. } => payload.extend_from_slice(p),
        FrameBody::Headers { block, .. } | FrameBody::Continuation { block, .. } => {
            payload.extend_from_slice(block)
        }
        FrameBody::Settings { params, .. } => {
            for (id, value) in params {
                payload.extend_from_slice(&id.to_be_bytes());
                payload.extend_from_slice(&value.to_be_bytes());
            }
        }
        FrameBody::WindowUpdate { increment } => {
            payload.extend_from_slice(&(increment & 0x7fff_ffff).to_be_bytes())
        }
        FrameBody::GoAway {
            last_stream_id,
            error_code,
            debug,
        } => {
            payload.extend_from_slice(&(last_stream_id & 0x7fff_ffff).to_be_bytes());
            payload.extend_from_slice(&error_code.to_be_bytes());
            payload.extend_from_slice(debug);
        }
        FrameBody::Other { raw } => payload.extend_from_slice(raw),
    }
    if payload.len() > MAX_PAYLOAD_LEN {
        return Err(EncodeError::OversizedPayload { len: payload.len() });
    }

    let mut out = Vec::with_capacity(FRAME_HEADER_LEN + payload.len());
    let len = payload.len() as u32;
    out.push((len >> 16) as u8);
    out.push((len >> 8) as u8);
    out.push(len as u8);
    out.push(frame.header.frame_type);
    out.push(frame.header.flags);
    out.extend_from_slice(&(frame.header.stream_id & 0x7fff_ffff).to_be_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// If `buf` starts with the 24-byte connection preface, report it and return
/// the remainder. Absence is a valid outcome, not an error.
pub fn strip_preface(buf: &[u8]) -> (bool, &[u8]) {
    if buf.len() >= PREFACE.len() && buf[..PREFACE.len()] == PREFACE {
        (true, &buf[PREFACE.len()..])
    } else {
        (false, buf)
    }
}

// Constructors with consistent header flags, used by generators and tests.
impl Frame {
    fn new(frame_type: u8, flags: u8, stream_id: u32, body: FrameBody) -> Self {
        let length = match &body {
            FrameBody::Data { payload, .. } => payload.len(),
            FrameBody::Headers { block, .. } | FrameBody::Continuation { block, .. } => block.len(),
            FrameBody::Settings { params, .. } => params.len() * 6,
            FrameBody::WindowUpdate { .. } => 4,
            FrameBody::GoAway { debug, .. } => 8 + debug.len(),
            FrameBody::Other { raw } => raw.len(),
        } as u32;
        Frame {
            header: FrameHeader {
                length,
                frame_type,
                flags,
                stream_id,
            },
            body,
        }
    }

    pub fn data(stream_id: u32, payload: Vec<u8>, end_stream: bool) -> Self {
        let flags = if end_stream { FLAG_END_STREAM } else { 0 };
        Self::new(TYPE_DATA, flags, stream_id, FrameBody::Data { end_stream, payload })
    }

    pub fn headers(stream_id: u32, block: Vec<u8>, end_stream: bool, end_headers: bool) -> Self {
        let mut flags = 0;
        if end_stream {
            flags |= FLAG_END_STREAM;
        }
        if end_headers {
            flags |= FLAG_END_HEADERS;
        }
        Self::new(
            TYPE_HEADERS,
            flags,
            stream_id,
            FrameBody::Headers {
                end_stream,
                end_headers,
                block,
            },
        )
    }

    pub fn continuation(stream_id: u32, block: Vec<u8>, end_headers: bool) -> Self {
        let flags = if end_headers { FLAG_END_HEADERS } else { 0 };
        Self::new(
            TYPE_CONTINUATION,
            flags,
            stream_id,
            FrameBody::Continuation { end_headers, block },
        )
    }

    pub fn settings(params: Vec<(u16, u32)>) -> Self {
        Self::new(TYPE_SETTINGS, 0, 0, FrameBody::Settings { ack: false, params })
    }

    pub fn settings_ack() -> Self {
        Self::new(
            TYPE_SETTINGS,
            FLAG_ACK,
            0,
            FrameBody::Settings {
                ack: true,
                params: Vec::new(),
            },
        )
    }

    pub fn window_update(stream_id: u32, increment: u32) -> Self {
        Self::new(
            TYPE_WINDOW_UPDATE,
            0,
            stream_id,
            FrameBody::WindowUpdate {
                // High bit is reserved on the wire.
                increment: increment & 0x7fff_ffff,
            },
        )
    }

    pub fn goaway(last_stream_id: u32, error_code: u32) -> Self {
        Self::new(
            TYPE_GOAWAY,
            0,
            0,
            FrameBody::GoAway {
                last_stream_id,
                error_code,
                debug: Vec::new(),
            },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn decodes_settings_ack() {
        let bytes = [0x00, 0x00, 0x00, 0x04, 0x01, 0x00, 0x00, 0x00, 0x00];
        let (frame, consumed) = decode_frame(&bytes).unwrap();
        assert_eq!(consumed, 9);
        assert_eq!(
            frame.body,
            FrameBody::Settings {
                ack: true,
                params: vec![]
            }
        );
    }

    #[test]
    fn decodes_zero_window_settings() {
        // SETTINGS with INITIAL_WINDOW_SIZE=0, the attack-1 payload.
        let bytes = [
            0x00, 0x00, 0x06, 0x04, 0x00, 0x00, 0x00, 0x00, 0x00, // header
            0x00, 0x04, 0x00, 0x00, 0x00, 0x00, // param
        ];
        let (frame, consumed) = decode_frame(&bytes).unwrap();
        assert_eq!(consumed, 15);
        assert_eq!(
            frame.body,
            FrameBody::Settings {
                ack: false,
                params: vec![(SETTINGS_INITIAL_WINDOW_SIZE, 0)]
            }
        );
    }

    #[test]
    fn reports_missing_bytes() {
        let bytes = [0x00, 0x00, 0x05, 0x00, 0x00, 0x00, 0x00, 0x00, 0x01, 0xaa, 0xbb];
        assert_eq!(decode_frame(&bytes), Err(DecodeError::Truncated { need: 3 }));
        assert_eq!(decode_frame(&bytes[..4]), Err(DecodeError::Truncated { need: 5 }));
    }

    #[test]
    fn encodes_settings_ack() {
        let bytes = encode_frame(&Frame::settings_ack()).unwrap();
        assert_eq!(bytes, [0x00, 0x00, 0x00, 0x04, 0x01, 0x00, 0x00, 0x00, 0x00]);
    }

    #[test]
    fn encodes_goaway() {
        let bytes = encode_frame(&Frame::goaway(0, 0)).unwrap();
        assert_eq!(bytes.len(), 9 + 8);
        assert_eq!(bytes[3], TYPE_GOAWAY);
    }

    #[test]
    fn encodes_empty_data() {
        let bytes = encode_frame(&Frame::data(1, vec![], false)).unwrap();
        assert_eq!(bytes[4], 0x00);
        assert_eq!(bytes.len(), 9);
    }

    #[test]
    fn settings_param_order_preserved() {
        let f = Frame::settings(vec![(3, 100), (4, 65535), (3, 7)]);
        let bytes = encode_frame(&f).unwrap();
        let (back, _) = decode_frame(&bytes).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn malformed_settings_length() {
        let bytes = [0x00, 0x00, 0x05, 0x04, 0x00, 0x00, 0x00, 0x00, 0x00, 1, 2, 3, 4, 5];
        assert!(matches!(decode_frame(&bytes), Err(DecodeError::Malformed(_))));
    }

    #[test]
    fn unknown_type_is_other() {
        let bytes = [0x00, 0x00, 0x02, 0x42, 0x00, 0x00, 0x00, 0x00, 0x03, 0xde, 0xad];
        let (frame, consumed) = decode_frame(&bytes).unwrap();
        assert_eq!(consumed, 11);
        assert_eq!(frame.body, FrameBody::Other { raw: vec![0xde, 0xad] });
        assert_eq!(frame.header.stream_id, 3);
    }

    #[test]
    fn padded_data_is_skipped() {
        // length 6: pad-length byte + 3 data bytes + 2 pad bytes.
        let bytes = [
            0x00, 0x00, 0x06, 0x00, FLAG_PADDED, 0x00, 0x00, 0x00, 0x01, 0x02, 0xaa, 0xbb, 0xcc,
            0x00, 0x00,
        ];
        let (frame, _) = decode_frame(&bytes).unwrap();
        assert_eq!(
            frame.body,
            FrameBody::Data {
                end_stream: false,
                payload: vec![0xaa, 0xbb, 0xcc]
            }
        );
    }

    #[test]
    fn preface_stripping() {
        let (present, rest) = strip_preface(&PREFACE);
        assert!(present);
        assert!(rest.is_empty());

        let mut buf = PREFACE.to_vec();
        buf.extend_from_slice(&encode_frame(&Frame::settings_ack()).unwrap());
        let (present, rest) = strip_preface(&buf);
        assert!(present);
        assert_eq!(rest.len(), 9);

        let http1 = b"GET / HTTP/1.1\r\nHost: x\r\n\r\n";
        let (present, rest) = strip_preface(http1);
        assert!(!present);
        assert_eq!(rest, http1);
    }
}
