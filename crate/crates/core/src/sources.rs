//! Modulation sources: 8-bit PCM playback, sequencer music and live 16-bit
//! sample streams, all rendered as modulator duty commands.

use std::sync::mpsc::{sync_channel, Receiver, SyncSender};

use crate::error::{invalid, Error, Result};
use crate::transmitter::{tone_commands_at, DutyHold, ModulationStream};

/// Sample rate of the converted recording.
pub const PCM_RATE: u32 = 16_000;
/// Per-sample sleep of the original playback loop, seconds.
pub const LISTING_PACING: f64 = 85e-6;
/// Sequencer tick, seconds.
pub const TICK_SECONDS: f64 = 0.04;
/// Round-robin cycles per second when several notes sound at once.
pub const ARPEGGIO_RATE: f64 = 100.0;
/// Characters of export header and trailer dropped before parsing.
pub const EXPORT_HEADER_LEN: usize = 25;
pub const EXPORT_TRAILER_LEN: usize = 2;

/// Unsigned 8-bit mono PCM playback parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawAudioConfig {
    pub sample_rate: u32,
    /// Seconds each sample is held on the modulator.
    pub pacing: f64,
}

impl RawAudioConfig {
    /// Pacing of exactly one sample period, so pitch is preserved.
    pub fn faithful(sample_rate: u32) -> Self {
        Self {
            sample_rate,
            pacing: 1.0 / sample_rate as f64,
        }
    }

    /// The 85 µs per-sample pacing of the microcontroller loop.
    pub fn listing() -> Self {
        Self {
            sample_rate: PCM_RATE,
            pacing: LISTING_PACING,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(invalid("sample_rate", "must be positive"));
        }
        if !(self.pacing.is_finite() && self.pacing > 0.0) {
            return Err(invalid("pacing", "must be positive"));
        }
        Ok(())
    }
}

impl Default for RawAudioConfig {
    fn default() -> Self {
        Self::faithful(PCM_RATE)
    }
}

/// Each byte `b` sets duty `(b << 8) / 65536` for `cfg.pacing` seconds.
pub fn raw_pcm_to_stream(bytes: &[u8], cfg: &RawAudioConfig) -> Result<ModulationStream> {
    cfg.validate()?;
    if bytes.is_empty() {
        return Err(Error::EmptyInput);
    }
    ModulationStream::new(
        bytes
            .iter()
            .map(|&b| DutyHold::new(((b as u32) << 8) as f64 / 65536.0, cfg.pacing))
            .collect(),
    )
}

/// Each 16-bit value `v` sets duty `v / 65536` for one sample period.
pub fn live_stream(samples: &[u16], sample_rate: u32) -> Result<ModulationStream> {
    if sample_rate == 0 {
        return Err(invalid("sample_rate", "must be positive"));
    }
    let hold = 1.0 / sample_rate as f64;
    ModulationStream::new(
        samples
            .iter()
            .map(|&v| DutyHold::new(v as f64 / 65536.0, hold))
            .collect(),
    )
}

/// Producer half of a bounded live-sample handoff.
#[derive(Debug, Clone)]
pub struct LiveProducer {
    tx: SyncSender<Vec<u16>>,
}

impl LiveProducer {
    /// Blocks while the queue is full; fails once the consumer is gone.
    pub fn send(&self, block: Vec<u16>) -> Result<()> {
        self.tx
            .send(block)
            .map_err(|_| invalid("live", "consumer disconnected"))
    }
}

/// Consumer half; turns each received block into modulator commands.
#[derive(Debug)]
pub struct LiveConsumer {
    rx: Receiver<Vec<u16>>,
    sample_rate: u32,
}

impl LiveConsumer {
    /// Next block as a stream, or `None` when the producer hung up.
    pub fn next_stream(&self) -> Option<Result<ModulationStream>> {
        self.rx.recv().ok().map(|block| live_stream(&block, self.sample_rate))
    }
}

pub fn live_handoff(sample_rate: u32, capacity: usize) -> (LiveProducer, LiveConsumer) {
    let (tx, rx) = sync_channel(capacity);
    (LiveProducer { tx }, LiveConsumer { rx, sample_rate })
}

/// One sequencer note.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoteEvent {
    pub start_tick: u32,
    /// Scientific pitch name, e.g. `E5` or `C#4`.
    pub pitch: String,
    pub duration_ticks: u32,
    pub instrument: u32,
}

impl NoteEvent {
    pub fn new(start_tick: u32, pitch: &str, duration_ticks: u32, instrument: u32) -> Self {
        Self {
            start_tick,
            pitch: pitch.to_string(),
            duration_ticks,
            instrument,
        }
    }

    fn active_at(&self, tick: u32) -> bool {
        tick >= self.start_tick && tick - self.start_tick < self.duration_ticks
    }
}

/// Drops the fixed-size header and trailer around the note list of an
/// exported sequence.
pub fn strip_export_envelope(text: &str) -> &str {
    let chars = text
        .char_indices()
        .map(|(i, _)| i)
        .chain([text.len()])
        .collect::<Vec<_>>();
    let count = chars.len() - 1;
    if count <= EXPORT_HEADER_LEN + EXPORT_TRAILER_LEN {
        return "";
    }
    &text[chars[EXPORT_HEADER_LEN]..chars[count - EXPORT_TRAILER_LEN]]
}

/// Parses `start pitch duration instrument` records separated by `;`.
pub fn parse_sequence(text: &str) -> Result<Vec<NoteEvent>> {
    let mut events = Vec::new();
    for (index, record) in text.split(';').enumerate() {
        let trimmed = record.trim();
        if trimmed.is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::MalformedRecord {
            index,
            record: record.to_string(),
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let [start, pitch, duration, instrument] = fields[..] else {
            return Err(bad("expected 4 fields"));
        };
        let start_tick = start.parse().map_err(|_| bad("start tick is not an integer"))?;
        note_to_midi(pitch).map_err(|_| bad("unknown pitch"))?;
        let duration_ticks: u32 = duration.parse().map_err(|_| bad("duration is not an integer"))?;
        if duration_ticks == 0 {
            return Err(bad("duration must be at least one tick"));
        }
        let instrument = instrument.parse().map_err(|_| bad("instrument is not an integer"))?;
        events.push(NoteEvent {
            start_tick,
            pitch: pitch.to_string(),
            duration_ticks,
            instrument,
        });
    }
    Ok(events)
}

pub fn serialize_sequence(events: &[NoteEvent]) -> String {
    events
        .iter()
        .map(|e| format!("{} {} {} {}", e.start_tick, e.pitch, e.duration_ticks, e.instrument))
        .collect::<Vec<_>>()
        .join(";")
}

/// MIDI note number of a scientific pitch name (`A4` = 69), limited to the
/// piano range A0..=C8.
pub fn note_to_midi(pitch: &str) -> Result<i32> {
    let bad = || Error::BadPitch(pitch.to_string());
    let mut chars = pitch.chars();
    let semitone = match chars.next().ok_or_else(bad)?.to_ascii_uppercase() {
        'C' => 0,
        'D' => 2,
        'E' => 4,
        'F' => 5,
        'G' => 7,
        'A' => 9,
        'B' => 11,
        _ => return Err(bad()),
    };
    let rest = chars.as_str();
    let (accidental, octave) = match rest.as_bytes().first() {
        Some(b'#') => (1, &rest[1..]),
        Some(b'b') => (-1, &rest[1..]),
        _ => (0, rest),
    };
    let octave: i32 = octave.parse().map_err(|_| bad())?;
    let midi = 12 * (octave + 1) + semitone + accidental;
    if !(21..=108).contains(&midi) {
        return Err(bad());
    }
    Ok(midi)
}

/// Equal-tempered frequency with A4 = 440 Hz.
pub fn note_to_frequency(pitch: &str) -> Result<f64> {
    Ok(midi_to_frequency(note_to_midi(pitch)?))
}

pub fn midi_to_frequency(midi: i32) -> f64 {
    440.0 * 2f64.powf((midi - 69) as f64 / 12.0)
}

/// Renders the notes tick by tick as 50%-duty square tones. Ticks with
/// several active notes cycle through them `arpeggio_rate` times per second.
pub fn sequence_to_stream(events: &[NoteEvent], tick_seconds: f64, arpeggio_rate: f64) -> Result<ModulationStream> {
    if !(tick_seconds.is_finite() && tick_seconds > 0.0) {
        return Err(invalid("tick_seconds", "must be positive"));
    }
    if !(arpeggio_rate.is_finite() && arpeggio_rate > 0.0) {
        return Err(invalid("arpeggio_rate", "must be positive"));
    }
    let freqs = events
        .iter()
        .map(|e| note_to_frequency(&e.pitch))
        .collect::<Result<Vec<_>>>()?;
    let end = events
        .iter()
        .map(|e| e.start_tick + e.duration_ticks)
        .max()
        .unwrap_or(0);

    // Each pitch runs as a free oscillator so held notes stay phase-continuous
    // across ticks and arpeggio slices.
    let tone_at = |freq: f64, start: f64, hold: f64| tone_commands_at(freq, 0.5, hold, (freq * start).fract()).0;
    let mut commands = Vec::new();
    for tick in 0..end {
        let t0 = tick as f64 * tick_seconds;
        let active: Vec<f64> = events
            .iter()
            .zip(&freqs)
            .filter(|(e, _)| e.active_at(tick))
            .map(|(_, f)| *f)
            .collect();
        match active.len() {
            0 => commands.push(DutyHold::new(0.0, tick_seconds)),
            1 => commands.extend(tone_at(active[0], t0, tick_seconds)),
            k => {
                let slice = 1.0 / (arpeggio_rate * k as f64);
                let slices = (tick_seconds / slice).round().max(1.0) as usize;
                for s in 0..slices {
                    let hold = if s + 1 == slices {
                        tick_seconds - slice * (slices - 1) as f64
                    } else {
                        slice
                    };
                    if hold > 0.0 {
                        commands.extend(tone_at(active[s % k], t0 + slice * s as f64, hold));
                    }
                }
            }
        }
    }
    ModulationStream::new(commands)
}
