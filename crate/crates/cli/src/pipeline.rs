//! Stage wiring shared by the subcommands: transmitter, channel and receiver
//! configuration, validated together before anything runs.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use picotx_core::receiver::AUDIO_RATE;
use picotx_core::{
    am_transmit, apply_channel, io, tune_am, Agc, ChannelConfig, ModulationStream, SignalBuffer, TransmitterConfig,
    TunerConfig,
};

use crate::Failure;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AgcMode {
    Off,
    Slow,
    Medium,
}

impl From<AgcMode> for Agc {
    fn from(m: AgcMode) -> Self {
        match m {
            AgcMode::Off => Agc::Off,
            AgcMode::Slow => Agc::Slow,
            AgcMode::Medium => Agc::Medium,
        }
    }
}

/// Transmitter, channel and receiver flags.
#[derive(Debug, Clone, Args)]
pub struct ChainArgs {
    /// Divide the 31.25 MHz carrier by this factor.
    #[arg(long, default_value_t = 250.0)]
    pub scale: f64,
    /// RF simulation sample rate, Hz.
    #[arg(long, default_value_t = 1_000_000)]
    pub rf_rate: u32,
    /// Low-pass coupling time constant of the modulator, seconds.
    #[arg(long, default_value_t = 1e-3)]
    pub coupling_tau: f64,
    /// Channel gain.
    #[arg(long, default_value_t = 1.0)]
    pub gain: f64,
    /// Add white noise at this SNR (dB, relative to the received RF).
    #[arg(long)]
    pub snr_db: Option<f64>,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tune the receiver to this multiple of the carrier.
    #[arg(long, default_value_t = 1)]
    pub harmonic: u32,
    /// Receiver filter width, Hz (default depends on the command).
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, value_enum, default_value_t = AgcMode::Off)]
    pub agc: AgcMode,
    /// Demodulated audio rate, Hz.
    #[arg(long, default_value_t = AUDIO_RATE)]
    pub audio_rate: u32,
}

/// A validated transmit/receive chain.
pub struct Chain {
    pub tx: TransmitterConfig,
    pub seed: u64,
    pub gain: f64,
    pub snr_db: Option<f64>,
    pub tuner: TunerConfig,
    pub audio_rate: u32,
}

impl ChainArgs {
    pub fn build(&self, default_bandwidth: f64) -> Result<Chain, Failure> {
        let tx = TransmitterConfig::scaled(self.scale, self.rf_rate)
            .and_then(|t| TransmitterConfig::new(t.carrier, self.coupling_tau, self.rf_rate))
            .map_err(Failure::usage)?;
        if self.harmonic == 0 {
            return Err(Failure::usage("--harmonic must be at least 1"));
        }
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(Failure::usage("--gain must be positive"));
        }
        if self.audio_rate == 0 || self.audio_rate > self.rf_rate {
            return Err(Failure::usage(format!(
                "--audio-rate {} must be between 1 and the RF rate {}",
                self.audio_rate, self.rf_rate
            )));
        }
        let tuner = TunerConfig::new(
            tx.carrier.frequency * self.harmonic as f64,
            self.bandwidth.unwrap_or(default_bandwidth),
            self.agc.into(),
        );
        tuner.validate(self.rf_rate).map_err(Failure::usage)?;
        Ok(Chain {
            tx,
            seed: self.seed,
            gain: self.gain,
            snr_db: self.snr_db,
            tuner,
            audio_rate: self.audio_rate,
        })
    }
}

impl Chain {
    pub fn transmit(&self, stream: &ModulationStream) -> Result<SignalBuffer, Failure> {
        am_transmit(&self.tx, stream).map_err(Failure::from)
    }

    /// Gain and noise; noise power is set against the RF after gain.
    pub fn propagate(&self, rf: SignalBuffer) -> Result<SignalBuffer, Failure> {
        let cfg = match self.snr_db {
            Some(snr) => ChannelConfig::with_snr(self.gain, rf.rms(), snr, self.seed),
            None if self.gain == 1.0 => return Ok(rf),
            None => ChannelConfig::new(self.gain, 0.0, self.seed),
        };
        apply_channel(&rf, &cfg).map_err(Failure::from)
    }

    pub fn receive(&self, rf: &SignalBuffer) -> Result<SignalBuffer, Failure> {
        tune_am(rf, &self.tuner, self.audio_rate).map_err(Failure::from)
    }
}

/// Output files, written only after every stage has succeeded.
#[derive(Debug, Clone, Args)]
pub struct Outputs {
    /// Write the RF waveform as a PCM16 WAV at the RF rate.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Write the demodulated audio as a PCM16 WAV.
    #[arg(long, value_name = "WAV")]
    pub demodulate: Option<PathBuf>,
    /// Write the modulator commands as CSV (duty,hold_seconds).
    #[arg(long, value_name = "CSV")]
    pub commands: Option<PathBuf>,
}

impl Outputs {
    pub fn needs_rf(&self) -> bool {
        self.out.is_some() || self.demodulate.is_some()
    }
}

pub fn write_wav(path: &Path, buf: &SignalBuffer) -> Result<(), Failure> {
    io::write_wav(path, buf).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

/// Runs the chain for whatever outputs were requested and writes them.
pub fn run_and_write(chain: &Chain, stream: &ModulationStream, outputs: &Outputs) -> Result<(), Failure> {
    let mut rf = None;
    let mut audio = None;
    if stream.is_empty() {
        rf = Some(SignalBuffer::zeros(0, chain.tx.rf_sample_rate).map_err(Failure::from)?);
        audio = Some(SignalBuffer::zeros(0, chain.audio_rate).map_err(Failure::from)?);
    } else if outputs.needs_rf() {
        let received = chain.propagate(chain.transmit(stream)?)?;
        if outputs.demodulate.is_some() {
            audio = Some(chain.receive(&received)?);
        }
        rf = Some(received);
    }
    if let Some(path) = &outputs.commands {
        write_text(path, &stream.to_csv())?;
    }
    if let (Some(path), Some(rf)) = (&outputs.out, &rf) {
        write_wav(path, rf)?;
    }
    if let (Some(path), Some(audio)) = (&outputs.demodulate, &audio) {
        write_wav(path, audio)?;
    }
    Ok(())
}
