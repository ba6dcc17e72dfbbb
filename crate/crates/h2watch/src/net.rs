//! Real-socket mode: a minimal h2c victim server, script-driven clients,
//! and the length-prefixed packet feed used for live training/detection.
//!
//! The victim implements just enough HTTP/2 to judge request
//! completeness; it is an evaluation instrument, not a web server.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use h2watch_core::flow::{AssembleStats, Assembler, FlowRecord};
use h2watch_core::frame::{
    self, decode_frame, encode_frame, DecodeError, Frame, FrameBody, SETTINGS_INITIAL_WINDOW_SIZE,
};

use crate::sim::{attack_script, benign_script, AttackKind};

// ---------------------------------------------------------------------------
// Live packet feed: 8-byte BE microsecond timestamp, 4-byte BE length,
// then the raw link-layer frame.

pub fn write_feed_record(w: &mut impl Write, ts_us: u64, data: &[u8]) -> io::Result<()> {
    w.write_all(&ts_us.to_be_bytes())?;
    w.write_all(&(data.len() as u32).to_be_bytes())?;
    w.write_all(data)
}

fn read_feed_record(r: &mut impl Read) -> io::Result<Option<(u64, Vec<u8>)>> {
    let mut head = [0u8; 12];
    match r.read_exact(&mut head[..1]) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    r.read_exact(&mut head[1..])?;
    let ts_us = u64::from_be_bytes(head[..8].try_into().unwrap());
    let len = u32::from_be_bytes(head[8..].try_into().unwrap()) as usize;
    let mut data = vec![0u8; len];
    r.read_exact(&mut data)?;
    Ok(Some((ts_us, data)))
}

/// Drains a feed until EOF and reassembles it into flows.
pub fn assemble_feed(r: &mut impl Read) -> io::Result<(Vec<FlowRecord>, AssembleStats)> {
    let mut asm = Assembler::new();
    while let Some((ts_us, data)) = read_feed_record(r)? {
        asm.push_packet(ts_us as f64 / 1e6, &data);
    }
    Ok(asm.finish())
}

// ---------------------------------------------------------------------------
// Victim server.

#[derive(Debug, Clone)]
pub struct VictimConfig {
    pub queue_capacity: usize,
    /// 𝒯: how long an incomplete request may hold its slot.
    pub wait: Duration,
}

/// Accepts exactly `max_conns` connections, then returns the event log.
/// Connections beyond the queue capacity are turned away immediately.
pub fn victim_serve(
    listener: TcpListener,
    cfg: VictimConfig,
    max_conns: usize,
) -> io::Result<String> {
    let start = Instant::now();
    let occupancy = Arc::new(AtomicUsize::new(0));
    let log = Arc::new(Mutex::new(String::new()));
    let mut workers = Vec::new();
    for conn_id in 0..max_conns {
        let (stream, _) = listener.accept()?;
        let now = start.elapsed().as_secs_f64();
        if occupancy.load(Ordering::SeqCst) >= cfg.queue_capacity {
            log_line(&log, now, conn_id, "reject");
            drop(stream);
            continue;
        }
        occupancy.fetch_add(1, Ordering::SeqCst);
        log_line(&log, now, conn_id, "accept");
        let occupancy = Arc::clone(&occupancy);
        let log = Arc::clone(&log);
        let wait = cfg.wait;
        workers.push(thread::spawn(move || {
            let outcome = serve_connection(stream, wait);
            let t = start.elapsed().as_secs_f64();
            log_line(&log, t, conn_id, outcome);
            occupancy.fetch_sub(1, Ordering::SeqCst);
        }));
    }
    for w in workers {
        let _ = w.join();
    }
    let out = log.lock().unwrap().clone();
    Ok(out)
}

fn log_line(log: &Mutex<String>, t: f64, conn: usize, event: &str) {
    log.lock()
        .unwrap()
        .push_str(&format!("t={t:.6} conn={conn} event={event}\n"));
}

/// Tracks request completeness over decoded client frames.
#[derive(Default)]
struct RequestState {
    preface: bool,
    acked: bool,
    headers_done: bool,
    zero_window: bool,
}

impl RequestState {
    fn on_frame(&mut self, f: &Frame) -> bool {
        match &f.body {
            FrameBody::Settings { ack, params } => {
                if *ack {
                    self.acked = true;
                } else if params
                    .iter()
                    .any(|(id, v)| *id == SETTINGS_INITIAL_WINDOW_SIZE && *v == 0)
                {
                    self.zero_window = true;
                }
            }
            FrameBody::Headers {
                end_stream,
                end_headers,
                ..
            } => {
                if *end_headers {
                    self.headers_done = true;
                    if *end_stream {
                        return self.complete();
                    }
                }
            }
            FrameBody::Data { end_stream, .. } => {
                if *end_stream && self.headers_done {
                    return self.complete();
                }
            }
            _ => {}
        }
        false
    }

    fn complete(&self) -> bool {
        self.acked && !self.zero_window
    }
}

fn serve_connection(mut stream: TcpStream, wait: Duration) -> &'static str {
    let deadline = Instant::now() + wait;
    stream
        .set_read_timeout(Some(Duration::from_millis(10)))
        .ok();
    let mut buf = Vec::new();
    let mut consumed = 0;
    let mut state = RequestState::default();
    let mut chunk = [0u8; 4096];
    loop {
        if Instant::now() >= deadline {
            let _ = stream.write_all(&encode_frame(&Frame::goaway(0, 11)).unwrap());
            let _ = stream.shutdown(std::net::Shutdown::Both);
            return "expire";
        }
        match stream.read(&mut chunk) {
            Ok(0) => return "close",
            Ok(n) => buf.extend_from_slice(&chunk[..n]),
            Err(e)
                if e.kind() == io::ErrorKind::WouldBlock
                    || e.kind() == io::ErrorKind::TimedOut =>
            {
                continue;
            }
            Err(_) => return "close",
        }
        if !state.preface {
            let (found, rest) = frame::strip_preface(&buf[consumed..]);
            if found {
                state.preface = true;
                consumed = buf.len() - rest.len();
                let _ = stream.write_all(&encode_frame(&crate::sim::server_settings()).unwrap());
            } else if buf.len() - consumed >= frame::PREFACE.len() {
                let _ = stream.shutdown(std::net::Shutdown::Both);
                return "close";
            } else {
                continue;
            }
        }
        loop {
            match decode_frame(&buf[consumed..]) {
                Ok((f, used)) => {
                    consumed += used;
                    if let FrameBody::Settings { ack: false, .. } = &f.body {
                        let _ = stream.write_all(&encode_frame(&Frame::settings_ack()).unwrap());
                    }
                    if state.on_frame(&f) {
                        let response = Frame::headers(1, vec![0x88], true, true);
                        let _ = stream.write_all(&encode_frame(&response).unwrap());
                        let _ = stream.shutdown(std::net::Shutdown::Both);
                        return "complete";
                    }
                }
                Err(DecodeError::Truncated { .. }) => break,
                Err(DecodeError::Malformed(_)) => {
                    let _ = stream.shutdown(std::net::Shutdown::Both);
                    return "close";
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Script-driven clients.

#[derive(Debug, Clone)]
pub struct ConnSummary {
    pub conn_id: usize,
    pub kind: String,
    pub established: f64,
    pub closed: f64,
    pub server_wait: f64,
}

pub fn render_summaries(rows: &[ConnSummary]) -> String {
    let mut out = String::from("conn_id,kind,established,closed,server_wait\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6}\n",
            r.conn_id, r.kind, r.established, r.closed, r.server_wait
        ));
    }
    out
}

fn drive_connection(
    addr: SocketAddr,
    script: &[(u64, Vec<u8>)],
    hold: Duration,
    time_scale: f64,
    read_response: bool,
) -> io::Result<(f64, f64)> {
    let t0 = Instant::now();
    let mut stream = TcpStream::connect(addr)?;
    for (off_us, bytes) in script {
        let target = Duration::from_secs_f64(*off_us as f64 / 1e6 * time_scale);
        if let Some(gap) = target.checked_sub(t0.elapsed()) {
            thread::sleep(gap);
        }
        stream.write_all(bytes)?;
    }
    if read_response {
        stream
            .set_read_timeout(Some(Duration::from_secs(5)))
            .ok();
        let mut sink = [0u8; 4096];
        // Drain until the server closes or times us out.
        while matches!(stream.read(&mut sink), Ok(n) if n > 0) {}
    } else {
        thread::sleep(hold);
    }
    let closed = t0.elapsed().as_secs_f64();
    drop(stream);
    Ok((0.0, closed))
}

/// Opens `count` attack connections, each holding for `hold` before the
/// client walks away. Connection errors are recorded, not fatal.
pub fn run_attack(
    kind: AttackKind,
    addr: SocketAddr,
    count: usize,
    hold: Duration,
    time_scale: f64,
) -> Vec<ConnSummary> {
    let mut rows = Vec::new();
    let mut workers = Vec::new();
    for conn_id in 0..count {
        let script = attack_script(kind, conn_id as u64);
        workers.push(thread::spawn(move || {
            let res = drive_connection(addr, &script, hold, time_scale, false);
            (conn_id, res)
        }));
    }
    for w in workers {
        let (conn_id, res) = w.join().unwrap();
        let (established, closed) = res.unwrap_or((0.0, -1.0));
        rows.push(ConnSummary {
            conn_id,
            kind: kind.name().to_string(),
            established,
            closed,
            server_wait: closed.max(0.0),
        });
    }
    rows.sort_by_key(|r| r.conn_id);
    rows
}

/// Runs `count` complete benign requests against the target.
pub fn run_benign(addr: SocketAddr, count: usize, seed: u64, time_scale: f64) -> Vec<ConnSummary> {
    let mut rows = Vec::new();
    for conn_id in 0..count {
        let script = benign_script(conn_id, seed);
        let res = drive_connection(addr, &script, Duration::ZERO, time_scale, true);
        let (established, closed) = res.unwrap_or((0.0, -1.0));
        rows.push(ConnSummary {
            conn_id,
            kind: "benign".to_string(),
            established,
            closed,
            server_wait: closed.max(0.0),
        });
    }
    rows
}
