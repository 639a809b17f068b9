//! UDP audio: headerless signed 16-bit little-endian mono datagrams.

use std::io::Write;
use std::net::{SocketAddr, UdpSocket};
use std::sync::mpsc::{sync_channel, Receiver};
use std::thread;
use std::time::{Duration, Instant};

use picotx_core::io::{decode_pcm16, encode_pcm16};
use picotx_core::morse::decode_audio_report;
use picotx_core::{resample, MorseTable, SignalBuffer};

use crate::Failure;

/// Samples per outgoing datagram.
pub const DATAGRAM_SAMPLES: usize = 1024;
/// Receive-to-decode queue depth, in datagrams.
const QUEUE_DEPTH: usize = 256;
/// Socket poll interval, so idle and duration limits are noticed.
const POLL: Duration = Duration::from_millis(50);
/// Seconds of new audio between re-decodes.
const DECODE_INTERVAL: f64 = 0.5;

/// Sends `audio` to `target`, paced at `speed` times real time (0 = as fast
/// as possible). Returns the number of datagrams sent.
pub fn send_audio(target: SocketAddr, audio: &SignalBuffer, speed: f64) -> Result<usize, Failure> {
    let bind: SocketAddr = if target.is_ipv4() { "0.0.0.0:0" } else { "[::]:0" }.parse().unwrap();
    let socket = UdpSocket::bind(bind).map_err(|e| Failure::io(format!("bind {bind}: {e}")))?;
    let start = Instant::now();
    let rate = audio.sample_rate() as f64;
    let mut sent = 0;
    for (i, chunk) in audio.samples().chunks(DATAGRAM_SAMPLES).enumerate() {
        if speed > 0.0 {
            let due = Duration::from_secs_f64((i * DATAGRAM_SAMPLES) as f64 / rate / speed);
            if let Some(wait) = due.checked_sub(start.elapsed()) {
                thread::sleep(wait);
            }
        }
        socket
            .send_to(&encode_pcm16(chunk), target)
            .map_err(|e| Failure::io(format!("send to {target}: {e}")))?;
        sent += 1;
    }
    Ok(sent)
}

pub struct Decoding {
    pub table: MorseTable,
    pub tone: f64,
    pub dt: Option<f64>,
    pub decoder_rate: u32,
}

pub struct ListenConfig {
    pub bind: SocketAddr,
    pub rate: u32,
    /// Stop after this long without datagrams, once the first has arrived.
    pub idle_timeout: Option<Duration>,
    pub max_duration: Option<Duration>,
    pub decoding: Option<Decoding>,
}

#[derive(Debug, Default)]
pub struct ListenSummary {
    pub datagrams: usize,
    pub malformed: usize,
    pub audio: Vec<f64>,
    pub text: String,
}

struct Counts {
    datagrams: usize,
    malformed: usize,
}

fn receive_loop(
    socket: UdpSocket,
    idle: Option<Duration>,
    max: Option<Duration>,
    queue: std::sync::mpsc::SyncSender<Vec<f64>>,
) -> Counts {
    let start = Instant::now();
    let mut last: Option<Instant> = None;
    let mut counts = Counts {
        datagrams: 0,
        malformed: 0,
    };
    let mut buf = vec![0u8; 65536];
    loop {
        let idle_for = last.map(|t| t.elapsed());
        if max.is_some_and(|m| start.elapsed() >= m) || idle.zip(idle_for).is_some_and(|(d, e)| e >= d) {
            break;
        }
        match socket.recv_from(&mut buf) {
            Ok((n, _)) => {
                last = Some(Instant::now());
                if n % 2 != 0 {
                    counts.malformed += 1;
                    continue;
                }
                counts.datagrams += 1;
                if queue.send(decode_pcm16(&buf[..n])).is_err() {
                    break;
                }
            }
            Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
            Err(_) => break,
        }
    }
    counts
}

/// Text decoded so far, and how much of it has been printed.
struct Transcript<'a, W: Write> {
    out: &'a mut W,
    printed: String,
}

impl<W: Write> Transcript<'_, W> {
    /// Prints whatever `text` adds to the printed prefix, up to `upto` bytes.
    fn extend(&mut self, text: &str, upto: usize) {
        let stable = &text[..upto];
        if stable.len() > self.printed.len() && stable.starts_with(self.printed.as_str()) {
            let _ = write!(self.out, "{}", &stable[self.printed.len()..]);
            let _ = self.out.flush();
            self.printed = stable.to_string();
        }
    }
}

fn decode(audio: &[f64], rate: u32, d: &Decoding) -> String {
    let Ok(buf) = SignalBuffer::new(audio.to_vec(), rate) else {
        return String::new();
    };
    resample(&buf, d.decoder_rate)
        .and_then(|b| decode_audio_report(&d.table, &b, d.tone, d.dt))
        .map(|r| r.text)
        .unwrap_or_default()
}

fn decode_loop<W: Write>(rx: Receiver<Vec<f64>>, cfg: &ListenConfig, out: &mut W) -> (Vec<f64>, String) {
    let mut audio = Vec::new();
    let mut transcript = Transcript {
        out,
        printed: String::new(),
    };
    let mut pending = 0usize;
    let interval = (DECODE_INTERVAL * cfg.rate as f64) as usize;
    for chunk in rx {
        pending += chunk.len();
        audio.extend(chunk);
        if let Some(d) = &cfg.decoding {
            if pending >= interval {
                pending = 0;
                let text = decode(&audio, cfg.rate, d);
                // The word still being keyed may change; commit whole words only.
                if let Some(end) = text.rfind(' ') {
                    transcript.extend(&text, end + 1);
                }
            }
        }
    }
    let mut text = String::new();
    if let Some(d) = &cfg.decoding {
        text = decode(&audio, cfg.rate, d);
        transcript.extend(&text, text.len());
        if !transcript.printed.is_empty() {
            let _ = writeln!(transcript.out);
        }
    }
    (audio, text)
}

/// Binds, calls `ready` with the bound address, then receives until a limit
/// is hit, streaming decoded text to `out`.
pub fn listen<W: Write>(
    cfg: &ListenConfig,
    out: &mut W,
    ready: impl FnOnce(SocketAddr),
) -> Result<ListenSummary, Failure> {
    let socket = UdpSocket::bind(cfg.bind).map_err(|e| Failure::io(format!("bind {}: {e}", cfg.bind)))?;
    socket
        .set_read_timeout(Some(POLL))
        .map_err(|e| Failure::io(e.to_string()))?;
    let local = socket.local_addr().map_err(|e| Failure::io(e.to_string()))?;
    ready(local);

    let (tx, rx) = sync_channel(QUEUE_DEPTH);
    let (idle, max) = (cfg.idle_timeout, cfg.max_duration);
    let receiver = thread::spawn(move || receive_loop(socket, idle, max, tx));
    let (audio, text) = decode_loop(rx, cfg, out);
    let counts = receiver.join().map_err(|_| Failure::io("receive thread panicked"))?;
    Ok(ListenSummary {
        datagrams: counts.datagrams,
        malformed: counts.malformed,
        audio,
        text,
    })
}
