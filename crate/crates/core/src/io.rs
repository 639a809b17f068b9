//! File conventions: 16-bit mono WAV, headerless PCM and two-column CSV.

use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::SignalBuffer;

/// Writes a 16-bit signed mono WAV; samples are clipped to `[-1, 1]`.
pub fn write_wav(path: impl AsRef<Path>, buf: &SignalBuffer) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: buf.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &x in buf.samples() {
        writer.write_sample(to_i16(x))?;
    }
    writer.finalize()?;
    Ok(())
}

/// Reads a WAV file into `[-1, 1]` samples; multi-channel files keep the
/// first channel.
pub fn read_wav(path: impl AsRef<Path>) -> Result<SignalBuffer> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let samples: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .step_by(channels)
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        hound::SampleFormat::Int => {
            let full_scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .step_by(channels)
                .map(|s| s.map(|v| v as f64 / full_scale))
                .collect::<std::result::Result<_, _>>()?
        }
    };
    SignalBuffer::new(samples, spec.sample_rate)
}

fn to_i16(x: f64) -> i16 {
    (x.clamp(-1.0, 1.0) * 32767.0).round() as i16
}

/// Headerless signed 16-bit little-endian encoding.
pub fn encode_pcm16(samples: &[f64]) -> Vec<u8> {
    samples.iter().flat_map(|&x| to_i16(x).to_le_bytes()).collect()
}

/// Inverse of [`encode_pcm16`]; a trailing odd byte is ignored.
pub fn decode_pcm16(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(2)
        .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32767.0)
        .collect()
}

/// Headerless unsigned 16-bit little-endian values.
pub fn decode_u16le(bytes: &[u8]) -> Vec<u16> {
    bytes
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect()
}

/// Maps `[-1, 1]` audio to unsigned 8-bit PCM (128 = silence).
pub fn encode_u8(samples: &[f64]) -> Vec<u8> {
    samples
        .iter()
        .map(|&x| (128.0 + 127.0 * x.clamp(-1.0, 1.0)).round() as u8)
        .collect()
}

/// Maps `[-1, 1]` audio to unsigned 16-bit values centered on 32768.
pub fn encode_u16(samples: &[f64]) -> Vec<u16> {
    samples
        .iter()
        .map(|&x| (32768.0 + 32767.0 * x.clamp(-1.0, 1.0)).round() as u16)
        .collect()
}

pub fn read_raw_pcm16(path: impl AsRef<Path>, sample_rate: u32) -> Result<SignalBuffer> {
    SignalBuffer::new(decode_pcm16(&std::fs::read(path)?), sample_rate)
}

pub fn write_raw_pcm16(path: impl AsRef<Path>, buf: &SignalBuffer) -> Result<()> {
    std::fs::write(path, encode_pcm16(buf.samples()))?;
    Ok(())
}

/// Parses two numeric columns; an optional first line equal to
/// `first,second` is skipped, as are blank lines.
pub(crate) fn parse_csv_pairs(text: &str, first: &str, second: &str) -> Result<Vec<(f64, f64)>> {
    let header = format!("{first},{second}");
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line == header) {
            continue;
        }
        let bad = |reason: String| Error::Csv { line: i + 1, reason };
        let (a, b) = line
            .split_once(',')
            .ok_or_else(|| bad("expected two comma-separated fields".into()))?;
        let a = a.trim().parse().map_err(|_| bad(format!("bad {first} {a:?}")))?;
        let b = b.trim().parse().map_err(|_| bad(format!("bad {second} {b:?}")))?;
        rows.push((a, b));
    }
    Ok(rows)
}
