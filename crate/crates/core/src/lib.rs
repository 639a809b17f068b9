//! Software model of a microcontroller PWM radio transmitter and the SDR
//! receive chain used to listen to it.
//!
//! Stages exchange [`SignalBuffer`]s: sources produce modulator commands
//! ([`ModulationStream`]), the [`transmitter`] turns them into an RF
//! waveform, the [`channel`] adds gain and noise, and the [`receiver`]
//! demodulates audio that [`morse`] can decode.

pub mod analysis;
pub mod channel;
pub mod error;
pub mod fir;
pub mod io;
pub mod morse;
pub mod receiver;
pub mod resample;
pub mod signal;
pub mod sources;
pub mod transmitter;

pub use channel::{apply_channel, optimal_antenna_length, ChannelConfig};
pub use error::{Error, Result};
pub use morse::{
    decode_audio, decode_keying, encode_canonical, encode_listing, shuffle_table, Key, KeyingSchedule, Level,
    MorseTable, Timing,
};
pub use receiver::{harmonic_retune_check, tune_am, Agc, RetuneReport, TunerConfig};
pub use resample::{resample, Resampler};
pub use signal::{
    analyze_spectrum, analyze_spectrum_with, generate_pwm, measure_harmonic, rect_fourier_coefficient,
    synthesize_partial_sum, PwmConfig, SignalBuffer, Spectrum, Window,
};
pub use sources::{
    live_stream, note_to_frequency, parse_sequence, raw_pcm_to_stream, sequence_to_stream, NoteEvent, RawAudioConfig,
};
pub use transmitter::{am_transmit, keying_to_stream, sweep_stream, DutyHold, ModulationStream, TransmitterConfig};
