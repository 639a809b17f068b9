//! `picotx`: run the transmitter simulation experiments from the command line.

mod net;
mod pipeline;

use std::fmt::Display;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{error::ErrorKind, Parser, Subcommand, ValueEnum};
use picotx_core::morse::{DEFAULT_DT, DEFAULT_TONE};
use picotx_core::receiver::{DECODER_RATE, MORSE_BANDWIDTH, UDP_PORT, WIDE_BANDWIDTH};
use picotx_core::sources::{live_stream, strip_export_envelope, ARPEGGIO_RATE, PCM_RATE, TICK_SECONDS};
use picotx_core::transmitter::CARRIER_HZ;
use picotx_core::{
    analyze_spectrum_with, generate_pwm, io, keying_to_stream, measure_harmonic, parse_sequence, raw_pcm_to_stream,
    rect_fourier_coefficient, sequence_to_stream, sweep_stream, Error, ModulationStream, MorseTable, PwmConfig,
    RawAudioConfig, SignalBuffer, Timing, Window,
};

use pipeline::{run_and_write, write_text, write_wav, ChainArgs, Outputs};

/// A failed run: message plus exit status.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub const USAGE: u8 = 1;
    pub const IO: u8 = 2;
    pub const DECODE_EMPTY: u8 = 3;

    pub fn usage(message: impl Display) -> Self {
        Self {
            code: Self::USAGE,
            message: message.to_string(),
        }
    }

    pub fn io(message: impl Display) -> Self {
        Self {
            code: Self::IO,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Wav(_) => Self::io(e),
            e => Self::usage(e),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "picotx", version, about = "PWM radio transmitter simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TimingArg {
    /// 1/3/7-unit spacing, 50 units for PARIS.
    Canonical,
    /// Element + 1-unit gap, 2 extra units after each character.
    Listing,
}

impl From<TimingArg> for Timing {
    fn from(t: TimingArg) -> Self {
        match t {
            TimingArg::Canonical => Timing::Canonical,
            TimingArg::Listing => Timing::Listing,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DecodeArg {
    Morse,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlayFormat {
    /// Pick from the extension: .raw/.u8 → raw8, .u16 → raw16, otherwise sequence.
    Auto,
    /// Unsigned 8-bit PCM.
    Raw8,
    /// Unsigned 16-bit little-endian PCM.
    Raw16,
    /// Sequencer export or `tick pitch duration instrument;...` text.
    Sequence,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WindowArg {
    Rect,
    Hann,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Stepped tone sweep (100 steps of 10 ms from 200 Hz by default).
    Sweep {
        #[arg(long, default_value_t = 100)]
        steps: u32,
        /// First tone, Hz.
        #[arg(long, default_value_t = 200.0)]
        base: f64,
        /// Tone increase per step, Hz.
        #[arg(long, default_value_t = 10.0)]
        increment: f64,
        /// Seconds per step.
        #[arg(long, default_value_t = 0.01)]
        hold: f64,
        #[arg(long, default_value_t = 0.5)]
        tone_duty: f64,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        outputs: Outputs,
    },
    /// Key TEXT in Morse as an on/off audio tone.
    MorseTx {
        text: String,
        /// Morse unit, seconds.
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Keyed tone, Hz.
        #[arg(long, default_value_t = DEFAULT_TONE)]
        tone: f64,
        #[arg(long, default_value_t = 0.5)]
        tone_duty: f64,
        #[arg(long, value_enum, default_value_t = TimingArg::Canonical)]
        timing: TimingArg,
        /// Permute the code table with this seed.
        #[arg(long)]
        shuffle_seed: Option<u64>,
        /// Send the message this many times.
        #[arg(long, default_value_t = 1)]
        repeat: u32,
        /// Write the keying schedule as CSV (level,duration_s).
        #[arg(long, value_name = "CSV")]
        schedule: Option<PathBuf>,
        /// Stream the demodulated audio to this UDP address.
        #[arg(long, value_name = "HOST:PORT")]
        udp: Option<SocketAddr>,
        /// UDP pacing as a multiple of real time (0 sends without pacing).
        #[arg(long, default_value_t = 1.0)]
        udp_speed: f64,
        /// Print each character's code and unit pattern.
        #[arg(long, short)]
        verbose: bool,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        outputs: Outputs,
    },
    /// Receive 16-bit 48 kHz audio datagrams and decode Morse from them.
    Listen {
        #[arg(long, default_value_t = UDP_PORT)]
        port: u16,
        #[arg(long, default_value = "0.0.0.0")]
        bind: IpAddr,
        #[arg(long, value_enum, default_value_t = DecodeArg::Morse)]
        decode: DecodeArg,
        #[arg(long, default_value_t = DEFAULT_TONE)]
        tone: f64,
        /// Morse unit hint, seconds (estimated when omitted).
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        shuffle_seed: Option<u64>,
        /// Incoming audio rate, Hz.
        #[arg(long, default_value_t = 48_000)]
        rate: u32,
        /// Rate the audio is resampled to before decoding, Hz.
        #[arg(long, default_value_t = DECODER_RATE)]
        decoder_rate: u32,
        /// Stop after this many seconds without datagrams (counted from the first one).
        #[arg(long)]
        idle_timeout: Option<f64>,
        /// Stop after this many seconds.
        #[arg(long)]
        max_seconds: Option<f64>,
        /// Save the received audio as a WAV.
        #[arg(long, value_name = "WAV")]
        record: Option<PathBuf>,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Transmit raw PCM audio or a note sequence.
    Play {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = PlayFormat::Auto)]
        format: PlayFormat,
        /// Sample rate of raw PCM input, Hz.
        #[arg(long, default_value_t = PCM_RATE)]
        sample_rate: u32,
        /// Hold each raw 8-bit sample this many microseconds instead of 1/rate.
        #[arg(long)]
        pacing_us: Option<f64>,
        /// Sequencer tick, milliseconds.
        #[arg(long, default_value_t = TICK_SECONDS * 1000.0)]
        tick_ms: f64,
        /// Chord cycles per second.
        #[arg(long, default_value_t = ARPEGGIO_RATE)]
        arpeggio_rate: f64,
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        outputs: Outputs,
    },
    /// Harmonic magnitudes of an RF WAV (or a generated carrier) against 4/(nπ).
    Spectrum {
        /// RF WAV; a PWM carrier is generated when omitted.
        file: Option<PathBuf>,
        /// Fundamental, Hz (defaults to the scaled carrier).
        #[arg(long)]
        fundamental: Option<f64>,
        /// Highest harmonic; defaults to 7 or the highest below Nyquist.
        #[arg(long)]
        harmonics: Option<u32>,
        #[arg(long, value_enum, default_value_t = WindowArg::Rect)]
        window: WindowArg,
        /// Carrier scale used for the default fundamental.
        #[arg(long, default_value_t = 250.0)]
        scale: f64,
        /// Generated carrier duty cycle.
        #[arg(long, default_value_t = 0.5)]
        duty: f64,
        /// Generated carrier sample rate, Hz.
        #[arg(long, default_value_t = 16_000_000)]
        rate: u32,
        /// Generated carrier length, seconds.
        #[arg(long, default_value_t = 0.002)]
        duration: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(Failure::USAGE),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("picotx: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Sweep {
            steps,
            base,
            increment,
            hold,
            tone_duty,
            chain,
            outputs,
        } => {
            let chain = chain.build(WIDE_BANDWIDTH)?;
            check_duty(tone_duty)?;
            let stream = sweep_stream(steps, base, increment, hold, tone_duty)?;
            emit(&chain, &stream, &outputs)
        }
        Command::MorseTx {
            text,
            dt,
            tone,
            tone_duty,
            timing,
            shuffle_seed,
            repeat,
            schedule,
            udp,
            udp_speed,
            verbose,
            chain,
            outputs,
        } => {
            let chain = chain.build(MORSE_BANDWIDTH)?;
            check_duty(tone_duty)?;
            if !(udp_speed.is_finite() && udp_speed >= 0.0) {
                return Err(Failure::usage("--udp-speed must be non-negative"));
            }
            if repeat == 0 {
                return Err(Failure::usage("--repeat must be at least 1"));
            }
            if 2.0 * tone > chain.audio_rate as f64 {
                return Err(Failure::usage(format!(
                    "tone {tone} Hz does not fit the {} Hz audio rate",
                    chain.audio_rate
                )));
            }
            let table = table(shuffle_seed);
            let message = vec![text.as_str(); repeat as usize].join(" ");
            let keys = table.encode(&message, dt, timing.into())?;
            if verbose {
                print_code_listing(&table, &text, timing.into())?;
            }
            let stream = if keys.is_empty() {
                ModulationStream::new(Vec::new())?
            } else {
                keying_to_stream(&keys, tone, tone_duty)?
            };
            if let Some(target) = udp {
                let audio = if stream.is_empty() {
                    SignalBuffer::zeros(0, chain.audio_rate)?
                } else {
                    chain.receive(&chain.propagate(chain.transmit(&stream)?)?)?
                };
                let sent = net::send_audio(target, &audio, udp_speed)?;
                if verbose {
                    eprintln!("sent {sent} datagrams to {target}");
                }
            }
            if let Some(path) = &schedule {
                write_text(path, &keys.to_csv())?;
            }
            if udp.is_none() && schedule.is_none() && !outputs.needs_rf() && outputs.commands.is_none() {
                if !keys.is_empty() {
                    print!("{}", keys.to_csv());
                }
                return Ok(());
            }
            run_and_write(&chain, &stream, &outputs)
        }
        Command::Listen {
            port,
            bind,
            decode,
            tone,
            dt,
            shuffle_seed,
            rate,
            decoder_rate,
            idle_timeout,
            max_seconds,
            record,
            verbose,
        } => {
            if rate == 0 || decoder_rate == 0 {
                return Err(Failure::usage("rates must be positive"));
            }
            if matches!(decode, DecodeArg::Morse) && 4.0 * tone > decoder_rate as f64 {
                return Err(Failure::usage(format!(
                    "tone {tone} Hz needs a decoder rate of at least {} Hz",
                    4.0 * tone
                )));
            }
            let seconds = |s: Option<f64>, name: &str| -> Result<Option<Duration>, Failure> {
                s.map(|v| {
                    Duration::try_from_secs_f64(v).map_err(|_| Failure::usage(format!("{name} must be non-negative")))
                })
                .transpose()
            };
            let cfg = net::ListenConfig {
                bind: SocketAddr::new(bind, port),
                rate,
                idle_timeout: seconds(idle_timeout, "--idle-timeout")?,
                max_duration: seconds(max_seconds, "--max-seconds")?,
                decoding: matches!(decode, DecodeArg::Morse).then(|| net::Decoding {
                    table: table(shuffle_seed),
                    tone,
                    dt,
                    decoder_rate,
                }),
            };
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            let summary = net::listen(&cfg, &mut out, |addr| eprintln!("listening on {addr}"))?;
            out.flush().map_err(Failure::io)?;
            if verbose || summary.malformed > 0 {
                eprintln!(
                    "received {} datagrams ({:.2} s of audio), skipped {} malformed",
                    summary.datagrams,
                    summary.audio.len() as f64 / rate as f64,
                    summary.malformed
                );
            }
            if let Some(path) = &record {
                write_wav(path, &SignalBuffer::new(summary.audio, rate)?)?;
            }
            if cfg.decoding.is_some() && summary.text.is_empty() {
                return Err(Failure {
                    code: Failure::DECODE_EMPTY,
                    message: "no Morse decoded".into(),
                });
            }
            Ok(())
        }
        Command::Play {
            file,
            format,
            sample_rate,
            pacing_us,
            tick_ms,
            arpeggio_rate,
            chain,
            outputs,
        } => {
            let chain = chain.build(WIDE_BANDWIDTH)?;
            let format = match format {
                PlayFormat::Auto => match file.extension().and_then(|e| e.to_str()) {
                    Some("raw" | "u8") => PlayFormat::Raw8,
                    Some("u16") => PlayFormat::Raw16,
                    _ => PlayFormat::Sequence,
                },
                f => f,
            };
            if pacing_us.is_some() && !matches!(format, PlayFormat::Raw8) {
                return Err(Failure::usage("--pacing-us applies to raw 8-bit input only"));
            }
            let bytes = std::fs::read(&file).map_err(|e| Failure::io(format!("{}: {e}", file.display())))?;
            let stream = match format {
                PlayFormat::Raw8 => {
                    let cfg = match pacing_us {
                        Some(us) => RawAudioConfig {
                            sample_rate,
                            pacing: us * 1e-6,
                        },
                        None => RawAudioConfig::faithful(sample_rate),
                    };
                    if bytes.is_empty() {
                        ModulationStream::new(Vec::new())?
                    } else {
                        raw_pcm_to_stream(&bytes, &cfg)?
                    }
                }
                PlayFormat::Raw16 => {
                    if bytes.len() % 2 != 0 {
                        return Err(Failure::usage(format!(
                            "{}: odd trailing byte at offset {}",
                            file.display(),
                            bytes.len() - 1
                        )));
                    }
                    if bytes.is_empty() {
                        ModulationStream::new(Vec::new())?
                    } else {
                        live_stream(&io::decode_u16le(&bytes), sample_rate)?
                    }
                }
                _ => {
                    let text = String::from_utf8(bytes).map_err(|e| {
                        Failure::usage(format!(
                            "{}: not UTF-8 at byte {}",
                            file.display(),
                            e.utf8_error().valid_up_to()
                        ))
                    })?;
                    let text = text.trim_end();
                    let body = if text.starts_with("Online Sequencer:") {
                        strip_export_envelope(text)
                    } else {
                        text
                    };
                    let events =
                        parse_sequence(body).map_err(|e| Failure::usage(format!("{}: {e}", file.display())))?;
                    sequence_to_stream(&events, tick_ms * 1e-3, arpeggio_rate)?
                }
            };
            emit(&chain, &stream, &outputs)
        }
        Command::Spectrum {
            file,
            fundamental,
            harmonics,
            window,
            scale,
            duty,
            rate,
            duration,
        } => {
            if !(scale.is_finite() && scale > 0.0) {
                return Err(Failure::usage("--scale must be positive"));
            }
            let fundamental = fundamental.unwrap_or(CARRIER_HZ / scale);
            let buf = match &file {
                Some(path) => io::read_wav(path).map_err(|e| match e {
                    Error::Io(_) | Error::Wav(_) => Failure::io(format!("{}: {e}", path.display())),
                    e => Failure::from(e),
                })?,
                None => generate_pwm(&PwmConfig::new(fundamental, duty), duration, rate)?,
            };
            spectrum_table(&buf, fundamental, harmonics, window)
        }
    }
}

fn check_duty(duty: f64) -> Result<(), Failure> {
    if (0.0..=1.0).contains(&duty) {
        Ok(())
    } else {
        Err(Failure::usage(format!("--tone-duty must be within [0, 1], got {duty}")))
    }
}

fn table(shuffle_seed: Option<u64>) -> MorseTable {
    let standard = MorseTable::standard();
    match shuffle_seed {
        Some(seed) => standard.shuffled(seed),
        None => standard,
    }
}

/// Commands CSV on stdout when no output was requested, files otherwise.
fn emit(chain: &pipeline::Chain, stream: &ModulationStream, outputs: &Outputs) -> Result<(), Failure> {
    if !outputs.needs_rf() && outputs.commands.is_none() {
        print!("{}", stream.to_csv());
        return Ok(());
    }
    run_and_write(chain, stream, outputs)
}

/// One line per character: `P='.--.', 1131311, 3 (14 time units)`.
fn print_code_listing(table: &MorseTable, text: &str, timing: Timing) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    for (c, units) in table.character_units(text, timing)? {
        let code = table.code(c).unwrap_or_default();
        let (gap, body) = units.split_last().map(|(g, b)| (g.1, b)).unwrap_or((0, &[]));
        let pattern: String = body.iter().map(|u| u.1.to_string()).collect();
        let total: u32 = units.iter().map(|u| u.1).sum();
        let pattern = if pattern.is_empty() {
            String::new()
        } else {
            format!("{pattern}, ")
        };
        writeln!(out, "{c}='{code}', {pattern}{gap} ({total} time units)").map_err(Failure::io)?;
    }
    Ok(())
}

fn spectrum_table(
    buf: &SignalBuffer,
    fundamental: f64,
    harmonics: Option<u32>,
    window: WindowArg,
) -> Result<(), Failure> {
    if !(fundamental.is_finite() && fundamental > 0.0) {
        return Err(Failure::usage("fundamental must be positive"));
    }
    if buf.is_empty() {
        return Err(Failure::usage("no samples to analyze"));
    }
    let window = match window {
        WindowArg::Rect => Window::Rectangular,
        WindowArg::Hann => Window::Hann,
    };
    let spec = analyze_spectrum_with(buf, buf.len(), window)?;
    let top = match harmonics {
        Some(n) => n,
        None => ((spec.max_frequency() / fundamental).floor() as u32).clamp(1, 7),
    };
    // Measure everything before printing so a bad request leaves no partial table.
    let rows = (1..=top)
        .map(|n| {
            let measured = measure_harmonic(&spec, fundamental, n)?;
            Ok((n, measured, rect_fourier_coefficient(n)?))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut out = std::io::stdout().lock();
    let mut text = String::from("harmonic,measured,theoretical,rel_error\n");
    for (n, measured, theoretical) in rows {
        let rel = if theoretical == 0.0 {
            String::new()
        } else {
            format!("{:.6}", (measured - theoretical) / theoretical)
        };
        text.push_str(&format!("{n},{measured:.6},{theoretical:.6},{rel}\n"));
    }
    out.write_all(text.as_bytes()).map_err(Failure::io)
}
