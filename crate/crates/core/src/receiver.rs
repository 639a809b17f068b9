//! SDR-style AM receive chain: complex mix to baseband, two-stage low-pass
//! with decimation, magnitude envelope, rational resampling to the audio
//! rate, DC removal and optional AGC.

use crate::error::{invalid, Error, Result};
use crate::fir::{design_lowpass, filter_centered, Downconverter};
use crate::resample::Resampler;
use crate::signal::SignalBuffer;

/// Audio rate of the receiver's UDP stream.
pub const AUDIO_RATE: u32 = 48_000;
/// Rate the CW decoder runs at.
pub const DECODER_RATE: u32 = 22_000;
pub const UDP_PORT: u16 = 7355;
/// "Narrow" filter for keyed Morse.
pub const MORSE_BANDWIDTH: f64 = 3_000.0;
/// Receiver filter used for the sweep and audio broadcasts.
pub const WIDE_BANDWIDTH: f64 = 80_000.0;

const STOPBAND_DB: f64 = 60.0;
/// Highest audio-band cutoff relative to the audio rate.
const AUDIO_CUTOFF_FRACTION: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Agc {
    #[default]
    Off,
    Slow,
    Medium,
}

impl Agc {
    /// Attack and release time constants in seconds.
    fn time_constants(self) -> Option<(f64, f64)> {
        match self {
            Agc::Off => None,
            Agc::Slow => Some((0.1, 2.0)),
            Agc::Medium => Some((0.05, 0.5)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunerConfig {
    pub center_frequency: f64,
    /// Two-sided RF filter width, Hz.
    pub bandwidth: f64,
    pub agc: Agc,
}

impl TunerConfig {
    pub fn new(center_frequency: f64, bandwidth: f64, agc: Agc) -> Self {
        Self {
            center_frequency,
            bandwidth,
            agc,
        }
    }

    pub fn morse(center_frequency: f64) -> Self {
        Self::new(center_frequency, MORSE_BANDWIDTH, Agc::Off)
    }

    pub fn wide(center_frequency: f64) -> Self {
        Self::new(center_frequency, WIDE_BANDWIDTH, Agc::Off)
    }

    pub fn validate(&self, rf_rate: u32) -> Result<()> {
        if !(self.bandwidth.is_finite() && self.bandwidth > 0.0) {
            return Err(invalid("bandwidth", "must be positive"));
        }
        if !(self.center_frequency.is_finite() && self.center_frequency >= 0.0) {
            return Err(invalid("center_frequency", "must be non-negative"));
        }
        let top = self.center_frequency + self.bandwidth / 2.0;
        if 2.0 * top > rf_rate as f64 {
            return Err(Error::RateViolation {
                frequency: top,
                sample_rate: rf_rate as f64,
            });
        }
        Ok(())
    }
}

/// Largest divisor of `rate` not above `limit` (at least 1).
fn decimation_factor(rate: u32, limit: u32) -> u32 {
    (1..=limit.max(1)).rev().find(|d| rate.is_multiple_of(*d)).unwrap_or(1)
}

/// Demodulates the AM signal at `cfg.center_frequency` to `audio_rate`.
///
/// The envelope is scaled so an RF sinusoid of amplitude `A` reads `A`;
/// the mean is removed from the result.
pub fn tune_am(rf: &SignalBuffer, cfg: &TunerConfig, audio_rate: u32) -> Result<SignalBuffer> {
    cfg.validate(rf.sample_rate())?;
    if audio_rate == 0 {
        return Err(invalid("audio_rate", "must be positive"));
    }
    let rf_rate = rf.sample_rate();
    let cutoff = (cfg.bandwidth / 2.0).min(AUDIO_CUTOFF_FRACTION * audio_rate as f64);

    // Stage 1: mix and decimate to at least twice the audio rate.
    let factor = decimation_factor(rf_rate, rf_rate / (2 * audio_rate).max(1));
    let mid_rate = rf_rate / factor;
    let coarse = if factor == 1 {
        vec![1.0]
    } else {
        let transition = (mid_rate as f64 - 2.0 * cutoff) / rf_rate as f64;
        design_lowpass(cutoff / rf_rate as f64, transition, STOPBAND_DB)
    };
    let mut mixer = Downconverter::new(cfg.center_frequency, rf_rate, factor as usize, coarse);
    let mut baseband = Vec::with_capacity(rf.len() / factor as usize + 1);
    for chunk in rf.samples().chunks(1 << 16) {
        baseband.extend(mixer.process(chunk));
    }
    baseband.extend(mixer.finish());

    // Stage 2: channel filter with a 10% transition band.
    let fine = design_lowpass(cutoff / mid_rate as f64, 0.1 * cutoff / mid_rate as f64, STOPBAND_DB);
    let channel = filter_centered(&baseband, &fine);

    let envelope: Vec<f64> = channel.iter().map(|z| 2.0 * z.norm()).collect();
    let mut audio = Resampler::new(mid_rate, audio_rate)?.process(&envelope);

    let mean = audio.iter().sum::<f64>() / audio.len().max(1) as f64;
    audio.iter_mut().for_each(|x| *x -= mean);

    if let Some((attack, release)) = cfg.agc.time_constants() {
        apply_agc(&mut audio, audio_rate, attack, release);
    }
    SignalBuffer::new(audio, audio_rate)
}

/// Feedback normalizer driving the tracked peak level toward 0.5.
fn apply_agc(audio: &mut [f64], rate: u32, attack: f64, release: f64) {
    const TARGET: f64 = 0.5;
    const FLOOR: f64 = 1e-6;
    let a_att = 1.0 - (-1.0 / (attack * rate as f64)).exp();
    let a_rel = 1.0 - (-1.0 / (release * rate as f64)).exp();
    let mut level = FLOOR;
    for x in audio.iter_mut() {
        let mag = x.abs();
        let coeff = if mag > level { a_att } else { a_rel };
        level += coeff * (mag - level);
        *x *= TARGET / level.max(FLOOR);
    }
}

/// Comparison of the audio demodulated at a carrier multiple with the audio
/// demodulated at the carrier itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetuneReport {
    /// Pearson correlation of the two audio tracks.
    pub correlation: f64,
    /// Energy at the multiple divided by energy at the base.
    pub energy_ratio: f64,
}

pub fn harmonic_retune_check(rf: &SignalBuffer, base: f64, multiple: u32, cfg: &TunerConfig) -> Result<RetuneReport> {
    if multiple == 0 {
        return Err(invalid("multiple", "must be at least 1"));
    }
    let at = |center: f64| {
        let tuned = TunerConfig {
            center_frequency: center,
            ..*cfg
        };
        tune_am(rf, &tuned, AUDIO_RATE)
    };
    let reference = at(base)?;
    let retuned = at(base * multiple as f64)?;
    let energy = |b: &SignalBuffer| b.samples().iter().map(|x| x * x).sum::<f64>();
    let reference_energy = energy(&reference);
    Ok(RetuneReport {
        correlation: crate::analysis::pearson(reference.samples(), retuned.samples()),
        energy_ratio: if reference_energy > 0.0 {
            energy(&retuned) / reference_energy
        } else {
            0.0
        },
    })
}
